#include "flame/asymptotics.hpp"
#include "flame/loss.hpp"
#include "flame/metrics.hpp"
#include "flame/simgen.hpp"
#include "flame/solver.hpp"
#include "flame/tuning.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace flame;

PYBIND11_MODULE(pyflame, m) {
    m.doc() = "FLAME large-margin classification toolkit";

    py::class_<FlameConfig>(m, "FlameConfig")
        .def(py::init<>())
        .def_static("norm_ball", &FlameConfig::norm_ball, py::arg("theta"))
        .def_static("penalized", &FlameConfig::penalized, py::arg("theta"), py::arg("lambda_"))
        .def_readwrite("theta", &FlameConfig::theta)
        .def_readwrite("lambda_", &FlameConfig::lambda)
        .def_readwrite("tolerance", &FlameConfig::tolerance)
        .def_readwrite("max_iterations", &FlameConfig::max_iterations)
        .def_property(
            "C",
            [](const FlameConfig& c) -> py::object {
                if (c.loss_scale) return py::float_(*c.loss_scale);
                return py::none();
            },
            [](FlameConfig& c, py::object value) {
                if (value.is_none()) {
                    c.loss_scale.reset();
                } else {
                    c.loss_scale = value.cast<double>();
                }
            });

    py::class_<LabeledDataset>(m, "LabeledDataset")
        .def(py::init<Eigen::MatrixXd, Eigen::VectorXd, std::vector<std::string>>(),
             py::arg("features"), py::arg("labels"),
             py::arg("feature_names") = std::vector<std::string>{})
        .def_property_readonly("features", &LabeledDataset::features)
        .def_property_readonly("labels", &LabeledDataset::labels)
        .def_property_readonly("n", &LabeledDataset::size)
        .def_property_readonly("d", &LabeledDataset::dim)
        .def_property_readonly("n_plus", &LabeledDataset::positive_count)
        .def_property_readonly("n_minus", &LabeledDataset::negative_count)
        .def("imbalance_factor", &LabeledDataset::imbalance_factor);

    py::class_<LinearModel>(m, "LinearModel")
        .def(py::init<>())
        .def_readwrite("direction", &LinearModel::direction)
        .def_readwrite("intercept", &LinearModel::intercept)
        .def_readwrite("config", &LinearModel::config);

    py::class_<FitDiagnostics>(m, "FitDiagnostics")
        .def_readonly("objective", &FitDiagnostics::objective)
        .def_readonly("iterations", &FitDiagnostics::iterations)
        .def_readonly("primal_residual", &FitDiagnostics::primal_residual)
        .def_readonly("dual_residual", &FitDiagnostics::dual_residual)
        .def_readonly("converged", &FitDiagnostics::converged)
        .def_readonly("norm_ball_multiplier", &FitDiagnostics::norm_ball_multiplier)
        .def_readonly("certificate", &FitDiagnostics::certificate);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("model", &FitResult::model)
        .def_readonly("diagnostics", &FitResult::diagnostics);

    m.def("dwd_loss", &dwd_loss, py::arg("u"), py::arg("C"));
    m.def("modified_hinge", &modified_hinge, py::arg("u"), py::arg("C"));
    m.def("flame_loss", &flame_loss, py::arg("u"), py::arg("C"), py::arg("theta"));
    m.def("flame_subgradient", &flame_subgradient, py::arg("u"), py::arg("C"), py::arg("theta"));
    m.def("default_loss_scale", &default_loss_scale, py::arg("data"));

    m.def("fit_socp", &fit_socp, py::arg("data"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "fit_penalized",
        [](const LabeledDataset& data, FlameConfig config) {
            return fit_penalized(data, config);
        },
        py::arg("data"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def("decision_value", &decision_value, py::arg("model"), py::arg("x"));
    m.def("predict_label", &predict_label, py::arg("model"), py::arg("x"));
    m.def(
        "functional_margins",
        [](const LinearModel& model, const LabeledDataset& data) {
            return functional_margins(model, data).values;
        },
        py::arg("model"), py::arg("data"));

    m.def("mean_within_class_error", &mean_within_class_error, py::arg("predictions"),
          py::arg("labels"));
    m.def("rank_comp", &rank_comp, py::arg("w"), py::arg("w_ref"));
    m.def("angle_between_degrees", &angle_between_degrees, py::arg("w"), py::arg("w_ref"));
    m.def("intercept_deviation", &intercept_deviation, py::arg("beta"), py::arg("beta_ref"));
    m.def(
        "dispersion",
        [](const std::vector<Eigen::VectorXd>& directions, bool align) {
            return dispersion(DispersionInput{directions},
                              align ? SignAlignment::AlignToFirst : SignAlignment::None);
        },
        py::arg("directions"), py::arg("align") = true);

    py::class_<CovarianceSpec>(m, "CovarianceSpec")
        .def_static("identity", &CovarianceSpec::identity, py::arg("dim"))
        .def_static("interchangeable", &CovarianceSpec::interchangeable, py::arg("dim"),
                    py::arg("rho"))
        .def_static("block_interchangeable", &CovarianceSpec::block_interchangeable,
                    py::arg("block_sizes"), py::arg("rho"));

    py::class_<TwoClassGaussianSpec>(m, "TwoClassGaussianSpec")
        .def(py::init<>())
        .def_readwrite("mu_plus", &TwoClassGaussianSpec::mu_plus)
        .def_readwrite("mu_minus", &TwoClassGaussianSpec::mu_minus)
        .def_readwrite("covariance", &TwoClassGaussianSpec::covariance)
        .def_readwrite("n_plus", &TwoClassGaussianSpec::n_plus)
        .def_readwrite("n_minus", &TwoClassGaussianSpec::n_minus)
        .def_readwrite("seed", &TwoClassGaussianSpec::seed);

    m.def("make_covariance", &make_covariance, py::arg("spec"));
    m.def("scale_mean_to_mahalanobis", &scale_mean_to_mahalanobis, py::arg("mu1"),
          py::arg("sigma"), py::arg("target"));
    m.def("sample_two_class", &sample_two_class, py::arg("spec"));
    m.def("bayes_rule", &bayes_rule, py::arg("mu_plus"), py::arg("mu_minus"), py::arg("sigma"));
    m.def("linear_profile_mean", &linear_profile_mean, py::arg("d"), py::arg("norm"));
    m.def("tapered_mean", &tapered_mean, py::arg("d"));

    m.def(
        "adaptive_theta",
        [](const LabeledDataset& data, FlameConfig config, int max_steps) {
            auto [theta, trace] = adaptive_theta(data, config, max_steps);
            std::vector<double> thetas, objectives;
            for (const auto& step : trace.steps) {
                thetas.push_back(step.theta);
                objectives.push_back(step.objective);
            }
            return py::make_tuple(theta, thetas, objectives, trace.terminated);
        },
        py::arg("data"), py::arg("config"), py::arg("max_steps") = 20);
    m.def(
        "equal_tradeoff_theta",
        [](const LabeledDataset& data, const std::vector<double>& grid, int folds,
           std::uint64_t seed, const LinearModel& reference, FlameConfig config) {
            CvConfig cv;
            cv.folds = folds;
            cv.seed = seed;
            auto [theta, curves] = equal_tradeoff_theta(data, grid, cv, reference, config);
            py::dict out;
            out["theta"] = theta;
            out["grid"] = curves.grid;
            out["error"] = curves.error;
            out["rank_comp"] = curves.rank_comp_curve;
            out["crossing_found"] = curves.crossing_found;
            return out;
        },
        py::arg("data"), py::arg("grid"), py::arg("folds"), py::arg("seed"),
        py::arg("reference"), py::arg("config"));

    py::class_<FisherMinimizer>(m, "FisherMinimizer")
        .def_readonly("is_interval", &FisherMinimizer::is_interval)
        .def_readonly("value", &FisherMinimizer::value)
        .def_readonly("lo", &FisherMinimizer::lo)
        .def_readonly("hi", &FisherMinimizer::hi);
    m.def("fisher_minimizer", &fisher_minimizer, py::arg("p"), py::arg("C"),
          py::arg("theta") = 0.0);

    py::enum_<HdlssInterval>(m, "HdlssInterval")
        .value("DwdLike", HdlssInterval::DwdLike)
        .value("Intermediate", HdlssInterval::Intermediate)
        .value("SvmLike", HdlssInterval::SvmLike);
    py::class_<HdlssRegime>(m, "HdlssRegime")
        .def_readonly("interval", &HdlssRegime::interval)
        .def_readonly("lower_boundary", &HdlssRegime::lower_boundary)
        .def_readonly("upper_boundary", &HdlssRegime::upper_boundary)
        .def_readonly("nu", &HdlssRegime::nu)
        .def_readonly("T", &HdlssRegime::T)
        .def_readonly("positive_condition", &HdlssRegime::positive_condition)
        .def_readonly("negative_condition", &HdlssRegime::negative_condition);
    m.def("hdlss_regime", &hdlss_regime, py::arg("theta"), py::arg("C"), py::arg("d"),
          py::arg("mu2"), py::arg("sigma2"), py::arg("tau2"), py::arg("n_plus"),
          py::arg("n_minus"));

    py::class_<SimplexGeometry>(m, "SimplexGeometry")
        .def_readonly("a", &SimplexGeometry::a)
        .def_readonly("b", &SimplexGeometry::b);
    m.def("simplex_geometry", &simplex_geometry, py::arg("theta"), py::arg("C"), py::arg("d"),
          py::arg("nu"), py::arg("m"));

    m.def("svm_support_fraction", &svm_support_fraction, py::arg("model"),
          py::arg("majority_data"));
}
