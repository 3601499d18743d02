#include "flame/experiment.hpp"

#include "flame/loss.hpp"
#include "flame/metrics.hpp"
#include "flame/model_io.hpp"
#include "flame/rng.hpp"
#include "flame/solver.hpp"
#include "flame/stats.hpp"
#include "flame/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

namespace flame {

using nlohmann::json;

CovarianceSpec SweepDesign::covariance_for(int d) const {
    switch (cov_kind) {
        case CovKind::Identity:
            return CovarianceSpec::identity(d);
        case CovKind::Interchangeable:
            return CovarianceSpec::interchangeable(d, rho);
        case CovKind::BlockHalfQuarter:
            return CovarianceSpec::block_interchangeable(half_quarter_blocks(d), rho);
        case CovKind::BlockExplicit:
            return CovarianceSpec::block_interchangeable(blocks, rho);
    }
    throw std::invalid_argument("SweepDesign: unknown covariance kind");
}

Eigen::VectorXd SweepDesign::mean_for(int d) const {
    switch (mean_kind) {
        case MeanKind::LinearProfileNorm:
            return linear_profile_mean(d, mean_norm);
        case MeanKind::TaperedMahalanobis: {
            const Eigen::MatrixXd sigma = make_covariance(covariance_for(d));
            return scale_mean_to_mahalanobis(tapered_mean(d), sigma, mahalanobis);
        }
        case MeanKind::FirstCoordinates: {
            Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
            const int support = std::min(mean_support, d);
            for (int j = 0; j < support; ++j) mu[j] = mean_value;
            return mu;
        }
    }
    throw std::invalid_argument("SweepDesign: unknown mean kind");
}

void ExperimentConfig::validate() const {
    if (theta_grid.empty() || dims.empty() || imbalances.empty()) {
        throw std::invalid_argument("ExperimentConfig: empty sweep axis");
    }
    for (double theta : theta_grid) {
        if (theta < 0.0 || theta > 1.0) {
            throw std::invalid_argument("ExperimentConfig: theta outside [0, 1]");
        }
    }
    for (double m : imbalances) {
        if (m < 1.0) {
            throw std::invalid_argument("ExperimentConfig: imbalance factors must be >= 1");
        }
    }
    if (replicates < 1) {
        throw std::invalid_argument("ExperimentConfig: replicates must be >= 1");
    }
    if (workers < 1) {
        throw std::invalid_argument("ExperimentConfig: workers must be >= 1");
    }
    if (design.total_n < 4 || design.test_n_per_class < 1) {
        throw std::invalid_argument("ExperimentConfig: sample sizes too small");
    }
}

bool ExperimentReport::all_failed() const {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(),
                       [](const ExperimentRecord& r) { return r.failed(); });
}

namespace {

struct CellTask {
    double theta;
    int d;
    double m;
    int replicate;
    std::size_t index;       // output slot
    std::size_t data_index;  // (d, m, replicate) cell; all thetas share the draw
};

ExperimentRecord run_cell(const ExperimentConfig& config, const CellTask& task) {
    ExperimentRecord record;
    record.theta = task.theta;
    record.d = task.d;
    record.m = task.m;
    record.replicate = task.replicate;
    try {
        const SweepDesign& design = config.design;
        const int n_plus = static_cast<int>(std::lround(
            static_cast<double>(design.total_n) / (1.0 + task.m)));
        const int n_minus = design.total_n - n_plus;
        if (n_plus < 1 || n_minus < 1) {
            throw std::invalid_argument("imbalance factor leaves a class empty");
        }

        TwoClassGaussianSpec spec;
        spec.covariance = design.covariance_for(task.d);
        const Eigen::VectorXd mu = design.mean_for(task.d);
        spec.mu_plus = mu;
        spec.mu_minus = -mu;
        spec.n_plus = n_plus;
        spec.n_minus = n_minus;
        // Every theta on the grid sees the same draw of this (d, m, replicate)
        // cell, the way the machines are compared within one realization.
        spec.seed = derive_seed(config.seed, static_cast<std::uint64_t>(task.data_index), 0x7261);

        const LabeledDataset train = sample_two_class(spec);
        FlameConfig solver = config.solver;
        solver.theta = task.theta;
        const FitResult fitted = fit(train, solver);

        const Eigen::MatrixXd sigma = make_covariance(spec.covariance);
        const LinearModel bayes = bayes_rule(spec.mu_plus, spec.mu_minus, sigma);

        TwoClassGaussianSpec test_spec = spec;
        test_spec.n_plus = design.test_n_per_class;
        test_spec.n_minus = design.test_n_per_class;
        test_spec.seed =
            derive_seed(config.seed, static_cast<std::uint64_t>(task.data_index), 0x7465);
        const LabeledDataset test = sample_two_class(test_spec);

        Eigen::VectorXd predictions(test.size());
        for (Eigen::Index i = 0; i < test.size(); ++i) {
            predictions[i] = predict_label(fitted.model, test.features().row(i).transpose());
        }
        record.mwe = mean_within_class_error(predictions, test.labels());
        record.intercept_deviation = intercept_deviation(fitted.model.intercept, bayes.intercept);
        record.angle_degrees = angle_between_degrees(fitted.model.direction, bayes.direction);
        record.rank_comp = rank_comp(fitted.model.direction, bayes.direction);
        const double norm = fitted.model.direction.norm();
        record.direction = norm > 0.0 ? Eigen::VectorXd(fitted.model.direction / norm)
                                      : fitted.model.direction;
        record.beta = fitted.model.intercept;
    } catch (const std::exception& err) {
        record.error = err.what();
    }
    return record;
}

}  // namespace

std::vector<ExperimentAggregate> aggregate_records(const std::vector<ExperimentRecord>& records) {
    std::map<std::tuple<double, int, double>, std::vector<const ExperimentRecord*>> cells;
    for (const auto& record : records) {
        if (record.failed()) continue;
        cells[{record.theta, record.d, record.m}].push_back(&record);
    }
    std::vector<ExperimentAggregate> out;
    for (const auto& [key, cell] : cells) {
        ExperimentAggregate agg;
        agg.theta = std::get<0>(key);
        agg.d = std::get<1>(key);
        agg.m = std::get<2>(key);
        agg.count = static_cast<int>(cell.size());
        DispersionInput directions;
        for (const ExperimentRecord* r : cell) {
            agg.mean_mwe += r->mwe;
            agg.mean_intercept_deviation += r->intercept_deviation;
            agg.mean_angle_degrees += r->angle_degrees;
            agg.mean_rank_comp += r->rank_comp;
            directions.directions.push_back(r->direction);
        }
        const double count = static_cast<double>(cell.size());
        agg.mean_mwe /= count;
        agg.mean_intercept_deviation /= count;
        agg.mean_angle_degrees /= count;
        agg.mean_rank_comp /= count;
        if (cell.size() >= 2) {
            agg.dispersion = dispersion(directions, SignAlignment::AlignToFirst);
            agg.dispersion_raw = dispersion(directions, SignAlignment::None);
        }
        out.push_back(std::move(agg));
    }
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    config.solver.validate();

    std::vector<CellTask> tasks;
    std::size_t index = 0;
    std::size_t data_index = 0;
    for (int d : config.dims) {
        for (double m : config.imbalances) {
            for (int r = 0; r < config.replicates; ++r) {
                for (double theta : config.theta_grid) {
                    tasks.push_back(CellTask{theta, d, m, r, index++, data_index});
                }
                ++data_index;
            }
        }
    }

    std::vector<ExperimentRecord> records(tasks.size());
    const int workers = std::min<int>(config.workers, static_cast<int>(tasks.size()));
    if (workers <= 1) {
        for (const CellTask& task : tasks) {
            records[task.index] = run_cell(config, task);
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) break;
                records[tasks[i].index] = run_cell(config, tasks[i]);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    ExperimentReport report;
    report.config_echo = experiment_config_to_json(config);
    report.records = std::move(records);
    report.aggregates = aggregate_records(report.records);
    return report;
}

CvReport cross_validate(const LabeledDataset& data, FlameConfig config,
                        const std::vector<double>& theta_grid, int folds, int splits,
                        std::uint64_t seed) {
    data.require_both_classes();
    if (folds < 2 || folds > data.size()) {
        throw std::invalid_argument("cross_validate: folds must lie in [2, n]");
    }
    if (splits < 1 || theta_grid.empty()) {
        throw std::invalid_argument("cross_validate: need at least one split and one theta");
    }
    const double C = resolve_loss_scale(config, data);
    config.loss_scale = C;

    CvReport report;
    json echo;
    echo["folds"] = folds;
    echo["splits"] = splits;
    echo["seed"] = seed;
    echo["theta_grid"] = theta_grid;
    report.config_echo = echo;

    for (int split = 0; split < splits; ++split) {
        const auto fold_indices = make_stratified_folds(
            data.labels(), folds, derive_seed(seed, 0x59171, static_cast<std::uint64_t>(split)));
        for (std::size_t f = 0; f < fold_indices.size(); ++f) {
            std::vector<Eigen::Index> train;
            for (std::size_t other = 0; other < fold_indices.size(); ++other) {
                if (other == f) continue;
                train.insert(train.end(), fold_indices[other].begin(), fold_indices[other].end());
            }
            const LabeledDataset train_data = subset_dataset(data, train);
            for (double theta : theta_grid) {
                FlameConfig fold_config = config;
                fold_config.theta = theta;
                const FitResult fitted = fit(train_data, fold_config);
                double err_plus = 0.0, err_minus = 0.0;
                Eigen::Index n_plus = 0, n_minus = 0;
                for (Eigen::Index idx : fold_indices[f]) {
                    const double predicted =
                        predict_label(fitted.model, data.features().row(idx).transpose());
                    if (data.labels()[idx] == 1.0) {
                        ++n_plus;
                        if (predicted != 1.0) err_plus += 1.0;
                    } else {
                        ++n_minus;
                        if (predicted != -1.0) err_minus += 1.0;
                    }
                }
                CvRecord record;
                record.theta = theta;
                record.split = split;
                record.fold = static_cast<int>(f);
                if (n_plus > 0 && n_minus > 0) {
                    record.mwe = 0.5 * err_plus / static_cast<double>(n_plus) +
                                 0.5 * err_minus / static_cast<double>(n_minus);
                } else if (n_plus > 0) {
                    record.mwe = err_plus / static_cast<double>(n_plus);
                } else {
                    record.mwe = err_minus / static_cast<double>(n_minus);
                }
                report.records.push_back(record);
            }
        }
    }

    for (double theta : theta_grid) {
        std::vector<double> values;
        for (const auto& record : report.records) {
            if (record.theta == theta) values.push_back(record.mwe);
        }
        CvAggregate agg;
        agg.theta = theta;
        agg.records = static_cast<int>(values.size());
        agg.mean_mwe = mean(values);
        agg.stderr_mwe = standard_error(values);
        report.aggregates.push_back(agg);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string mean_kind_name(SweepDesign::MeanKind kind) {
    switch (kind) {
        case SweepDesign::MeanKind::LinearProfileNorm: return "linear_profile";
        case SweepDesign::MeanKind::TaperedMahalanobis: return "tapered_mahalanobis";
        case SweepDesign::MeanKind::FirstCoordinates: return "first_coordinates";
    }
    return "linear_profile";
}

SweepDesign::MeanKind mean_kind_from(const std::string& name) {
    if (name == "linear_profile") return SweepDesign::MeanKind::LinearProfileNorm;
    if (name == "tapered_mahalanobis") return SweepDesign::MeanKind::TaperedMahalanobis;
    if (name == "first_coordinates") return SweepDesign::MeanKind::FirstCoordinates;
    throw DataError("experiment config: unknown mean kind '" + name + "'");
}

std::string cov_kind_name(SweepDesign::CovKind kind) {
    switch (kind) {
        case SweepDesign::CovKind::Identity: return "identity";
        case SweepDesign::CovKind::Interchangeable: return "interchangeable";
        case SweepDesign::CovKind::BlockHalfQuarter: return "block_half_quarter";
        case SweepDesign::CovKind::BlockExplicit: return "block_explicit";
    }
    return "identity";
}

SweepDesign::CovKind cov_kind_from(const std::string& name) {
    if (name == "identity") return SweepDesign::CovKind::Identity;
    if (name == "interchangeable") return SweepDesign::CovKind::Interchangeable;
    if (name == "block_half_quarter") return SweepDesign::CovKind::BlockHalfQuarter;
    if (name == "block_explicit") return SweepDesign::CovKind::BlockExplicit;
    throw DataError("experiment config: unknown covariance kind '" + name + "'");
}

}  // namespace

json experiment_config_to_json(const ExperimentConfig& config) {
    json design;
    design["mean"] = {{"type", mean_kind_name(config.design.mean_kind)},
                      {"norm", config.design.mean_norm},
                      {"mahalanobis", config.design.mahalanobis},
                      {"value", config.design.mean_value},
                      {"support", config.design.mean_support}};
    design["covariance"] = {{"kind", cov_kind_name(config.design.cov_kind)},
                            {"rho", config.design.rho},
                            {"blocks", config.design.blocks}};
    design["total_n"] = config.design.total_n;
    design["test_n_per_class"] = config.design.test_n_per_class;

    json j;
    j["design"] = design;
    j["theta_grid"] = config.theta_grid;
    j["dims"] = config.dims;
    j["imbalances"] = config.imbalances;
    j["replicates"] = config.replicates;
    j["seed"] = config.seed;
    j["solver"] = config_to_json(config.solver);
    j["workers"] = config.workers;
    return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig config;
    if (j.contains("design")) {
        const json& design = j.at("design");
        if (design.contains("mean")) {
            const json& mean = design.at("mean");
            config.design.mean_kind = mean_kind_from(mean.at("type").get<std::string>());
            if (mean.contains("norm")) config.design.mean_norm = mean.at("norm").get<double>();
            if (mean.contains("mahalanobis"))
                config.design.mahalanobis = mean.at("mahalanobis").get<double>();
            if (mean.contains("value")) config.design.mean_value = mean.at("value").get<double>();
            if (mean.contains("support"))
                config.design.mean_support = mean.at("support").get<int>();
        }
        if (design.contains("covariance")) {
            const json& cov = design.at("covariance");
            config.design.cov_kind = cov_kind_from(cov.at("kind").get<std::string>());
            if (cov.contains("rho")) config.design.rho = cov.at("rho").get<double>();
            if (cov.contains("blocks"))
                config.design.blocks = cov.at("blocks").get<std::vector<int>>();
        }
        if (design.contains("total_n")) config.design.total_n = design.at("total_n").get<int>();
        if (design.contains("test_n_per_class"))
            config.design.test_n_per_class = design.at("test_n_per_class").get<int>();
    }
    if (j.contains("theta_grid")) config.theta_grid = j.at("theta_grid").get<std::vector<double>>();
    if (j.contains("dims")) config.dims = j.at("dims").get<std::vector<int>>();
    if (j.contains("imbalances"))
        config.imbalances = j.at("imbalances").get<std::vector<double>>();
    if (j.contains("replicates")) config.replicates = j.at("replicates").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("solver")) config.solver = config_from_json(j.at("solver"));
    if (j.contains("workers")) config.workers = j.at("workers").get<int>();
    config.validate();
    return config;
}

json two_class_spec_to_json(const TwoClassGaussianSpec& spec) {
    json j;
    j["mu_plus"] = std::vector<double>(spec.mu_plus.data(),
                                       spec.mu_plus.data() + spec.mu_plus.size());
    j["mu_minus"] = std::vector<double>(spec.mu_minus.data(),
                                        spec.mu_minus.data() + spec.mu_minus.size());
    switch (spec.covariance.kind) {
        case CovarianceSpec::Kind::Identity:
            j["covariance"] = {{"kind", "identity"}, {"dim", spec.covariance.dim}};
            break;
        case CovarianceSpec::Kind::Interchangeable:
            j["covariance"] = {{"kind", "interchangeable"},
                               {"dim", spec.covariance.dim},
                               {"rho", spec.covariance.rho}};
            break;
        case CovarianceSpec::Kind::BlockInterchangeable:
            j["covariance"] = {{"kind", "block_interchangeable"},
                               {"blocks", spec.covariance.block_sizes},
                               {"rho", spec.covariance.rho}};
            break;
    }
    j["n_plus"] = spec.n_plus;
    j["n_minus"] = spec.n_minus;
    j["seed"] = spec.seed;
    return j;
}

TwoClassGaussianSpec two_class_spec_from_json(const json& j) {
    TwoClassGaussianSpec spec;
    const auto mu_plus = j.at("mu_plus").get<std::vector<double>>();
    const auto mu_minus = j.at("mu_minus").get<std::vector<double>>();
    spec.mu_plus = Eigen::Map<const Eigen::VectorXd>(mu_plus.data(),
                                                     static_cast<Eigen::Index>(mu_plus.size()));
    spec.mu_minus = Eigen::Map<const Eigen::VectorXd>(
        mu_minus.data(), static_cast<Eigen::Index>(mu_minus.size()));
    const json& cov = j.at("covariance");
    const std::string kind = cov.at("kind").get<std::string>();
    if (kind == "identity") {
        spec.covariance = CovarianceSpec::identity(cov.at("dim").get<int>());
    } else if (kind == "interchangeable") {
        spec.covariance = CovarianceSpec::interchangeable(cov.at("dim").get<int>(),
                                                          cov.at("rho").get<double>());
    } else if (kind == "block_interchangeable") {
        spec.covariance = CovarianceSpec::block_interchangeable(
            cov.at("blocks").get<std::vector<int>>(), cov.at("rho").get<double>());
    } else {
        throw DataError("two-class spec: unknown covariance kind '" + kind + "'");
    }
    spec.n_plus = j.at("n_plus").get<int>();
    spec.n_minus = j.at("n_minus").get<int>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
}

json report_to_json(const ExperimentReport& report) {
    json j;
    j["format_version"] = report.format_version;
    j["kind"] = "experiment";
    j["config"] = report.config_echo;
    j["records"] = json::array();
    for (const auto& r : report.records) {
        json rec;
        rec["theta"] = r.theta;
        rec["d"] = r.d;
        rec["m"] = r.m;
        rec["replicate"] = r.replicate;
        if (r.failed()) {
            rec["error"] = r.error;
        } else {
            rec["mwe"] = r.mwe;
            rec["intercept_deviation"] = r.intercept_deviation;
            rec["angle_degrees"] = r.angle_degrees;
            rec["rank_comp"] = r.rank_comp;
            rec["beta"] = r.beta;
            rec["omega"] =
                std::vector<double>(r.direction.data(), r.direction.data() + r.direction.size());
        }
        j["records"].push_back(std::move(rec));
    }
    j["aggregates"] = json::array();
    for (const auto& a : report.aggregates) {
        j["aggregates"].push_back({{"theta", a.theta},
                                   {"d", a.d},
                                   {"m", a.m},
                                   {"count", a.count},
                                   {"mean_mwe", a.mean_mwe},
                                   {"mean_intercept_deviation", a.mean_intercept_deviation},
                                   {"mean_angle_degrees", a.mean_angle_degrees},
                                   {"mean_rank_comp", a.mean_rank_comp},
                                   {"dispersion", a.dispersion},
                                   {"dispersion_raw", a.dispersion_raw}});
    }
    return j;
}

ExperimentReport report_from_json(const json& j) {
    ExperimentReport report;
    report.format_version = j.at("format_version").get<int>();
    if (report.format_version != 1) {
        throw DataError("report: unsupported format version");
    }
    report.config_echo = j.value("config", json::object());
    for (const auto& rec : j.at("records")) {
        ExperimentRecord r;
        r.theta = rec.at("theta").get<double>();
        r.d = rec.at("d").get<int>();
        r.m = rec.at("m").get<double>();
        r.replicate = rec.at("replicate").get<int>();
        if (rec.contains("error")) {
            r.error = rec.at("error").get<std::string>();
        } else {
            r.mwe = rec.at("mwe").get<double>();
            r.intercept_deviation = rec.at("intercept_deviation").get<double>();
            r.angle_degrees = rec.at("angle_degrees").get<double>();
            r.rank_comp = rec.at("rank_comp").get<double>();
            r.beta = rec.value("beta", 0.0);
            const auto omega = rec.at("omega").get<std::vector<double>>();
            r.direction = Eigen::Map<const Eigen::VectorXd>(
                omega.data(), static_cast<Eigen::Index>(omega.size()));
        }
        report.records.push_back(std::move(r));
    }
    for (const auto& agg : j.at("aggregates")) {
        ExperimentAggregate a;
        a.theta = agg.at("theta").get<double>();
        a.d = agg.at("d").get<int>();
        a.m = agg.at("m").get<double>();
        a.count = agg.at("count").get<int>();
        a.mean_mwe = agg.at("mean_mwe").get<double>();
        a.mean_intercept_deviation = agg.at("mean_intercept_deviation").get<double>();
        a.mean_angle_degrees = agg.at("mean_angle_degrees").get<double>();
        a.mean_rank_comp = agg.at("mean_rank_comp").get<double>();
        a.dispersion = agg.at("dispersion").get<double>();
        a.dispersion_raw = agg.at("dispersion_raw").get<double>();
        report.aggregates.push_back(a);
    }
    return report;
}

std::string report_to_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "# flame-report-v" << report.format_version << "\n";
    out << "row_type,theta,d,m,replicate,mwe,intercept_deviation,angle_degrees,rank_comp,"
           "dispersion,dispersion_raw,count,error\n";
    out.precision(17);
    for (const auto& r : report.records) {
        out << "record," << r.theta << ',' << r.d << ',' << r.m << ',' << r.replicate << ',';
        if (r.failed()) {
            out << ",,,,,,," << '"' << r.error << '"' << "\n";
        } else {
            out << r.mwe << ',' << r.intercept_deviation << ',' << r.angle_degrees << ','
                << r.rank_comp << ",,,,\n";
        }
    }
    for (const auto& a : report.aggregates) {
        out << "aggregate," << a.theta << ',' << a.d << ',' << a.m << ",," << a.mean_mwe << ','
            << a.mean_intercept_deviation << ',' << a.mean_angle_degrees << ',' << a.mean_rank_comp
            << ',' << a.dispersion << ',' << a.dispersion_raw << ',' << a.count << ",\n";
    }
    return out.str();
}

json cv_report_to_json(const CvReport& report) {
    json j;
    j["format_version"] = report.format_version;
    j["kind"] = "cross_validation";
    j["config"] = report.config_echo;
    j["records"] = json::array();
    for (const auto& r : report.records) {
        j["records"].push_back(
            {{"theta", r.theta}, {"split", r.split}, {"fold", r.fold}, {"mwe", r.mwe}});
    }
    j["aggregates"] = json::array();
    for (const auto& a : report.aggregates) {
        j["aggregates"].push_back({{"theta", a.theta},
                                   {"mean_mwe", a.mean_mwe},
                                   {"stderr_mwe", a.stderr_mwe},
                                   {"records", a.records}});
    }
    return j;
}

std::string cv_report_to_csv(const CvReport& report) {
    std::ostringstream out;
    out << "# flame-report-v" << report.format_version << "\n";
    out << "row_type,theta,split,fold,mwe,stderr\n";
    out.precision(17);
    for (const auto& r : report.records) {
        out << "record," << r.theta << ',' << r.split << ',' << r.fold << ',' << r.mwe << ",\n";
    }
    for (const auto& a : report.aggregates) {
        out << "aggregate," << a.theta << ",,," << a.mean_mwe << ',' << a.stderr_mwe << "\n";
    }
    return out.str();
}

}  // namespace flame
