#include "flame/solver.hpp"

#include "flame/loss.hpp"
#include "flame/simgen.hpp"
#include "flame/socp.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace flame;

namespace {

LabeledDataset random_dataset(std::uint64_t seed, int n, int d, double separation = 1.0) {
    TwoClassGaussianSpec spec;
    spec.covariance = CovarianceSpec::identity(d);
    spec.mu_plus = Eigen::VectorXd::Zero(d);
    spec.mu_plus[0] = separation;
    spec.mu_minus = -spec.mu_plus;
    spec.n_plus = std::max(1, n / 2);
    spec.n_minus = std::max(1, n - n / 2);
    spec.seed = seed;
    return sample_two_class(spec);
}

double socp_objective_from_margins(const LabeledDataset& data, const LinearModel& model,
                                   double C, double theta) {
    double total = 0.0;
    const FunctionalMargins margins = functional_margins(model, data);
    for (Eigen::Index i = 0; i < margins.values.size(); ++i) {
        total += flame_loss(margins.values[i], C, theta);
    }
    return total;
}

// Independent feasibility / optimality audit of a cone solution.
void audit_socp_solution(const LabeledDataset& data, const socp::Solution& sol, double C,
                         double theta, double tol) {
    const Eigen::Index n = data.size();
    const double root_c = std::sqrt(C);
    CHECK(std::abs(sol.w - 1.0) <= tol * 10);
    CHECK(sol.omega.norm() <= 1.0 + 1e-6);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double margin =
            data.labels()[i] * (data.features().row(i).dot(sol.omega) + sol.beta);
        const double res_margin = margin + sol.xi[i] - sol.rho[i] - sol.sigma[i];
        const double res_loss = sol.rho[i] - sol.sigma[i] + C * sol.xi[i] - theta * root_c +
                                sol.eta[i] - sol.phi[i];
        CHECK(std::abs(res_margin) <= 1e-6);
        CHECK(std::abs(res_loss) <= 1e-6);
        CHECK(std::abs(sol.tau_cone[i] - 1.0) <= 1e-6);
        CHECK(sol.rho[i] >= std::sqrt(sol.sigma[i] * sol.sigma[i] +
                                      sol.tau_cone[i] * sol.tau_cone[i]) -
                                1e-6);
        CHECK(sol.xi[i] >= -1e-9);
        CHECK(sol.eta[i] >= -1e-9);
        CHECK(sol.phi[i] >= -1e-9);
    }
}

}  // namespace

TEST_CASE("two symmetric points saturate the norm ball with zero intercept") {
    Eigen::MatrixXd x(2, 1);
    x << 1.0, -1.0;
    Eigen::VectorXd y(2);
    y << 1.0, -1.0;
    const LabeledDataset data(x, y);

    FlameConfig config = FlameConfig::norm_ball(1.0);
    config.loss_scale = 1.0;
    const FitResult result = fit_socp(data, config);
    CHECK(result.diagnostics.converged);
    CHECK(result.model.direction[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(std::abs(result.model.intercept) <= 1e-5);
}

TEST_CASE("socp solution is feasible and matches the loss objective") {
    for (const double theta : {0.0, 0.3, 0.7, 1.0}) {
        const LabeledDataset data = random_dataset(42, 24, 3);
        const double C = 2.0;
        socp::Problem problem = socp::build_problem(data.features(), data.labels(), C, theta);
        const socp::Solution sol = socp::solve(problem, 1e-8, 200);
        CHECK(sol.converged);
        CHECK(sol.primal_residual <= 1e-8);
        CHECK(sol.dual_residual <= 1e-8);
        CHECK(sol.gap <= 1e-8);
        audit_socp_solution(data, sol, C, theta, 1e-8);

        LinearModel model{sol.omega, sol.beta, FlameConfig::norm_ball(theta)};
        const double from_losses = socp_objective_from_margins(data, model, C, theta);
        CHECK(sol.objective == doctest::Approx(from_losses).epsilon(1e-5));
    }
}

TEST_CASE("penalized solver beats a brute-force grid on a small instance") {
    const LabeledDataset data = random_dataset(7, 8, 2);
    FlameConfig config = FlameConfig::penalized(0.4, 0.3);
    config.loss_scale = 1.5;
    config.max_iterations = 60000;
    const FitResult result = fit_penalized(data, config);

    double grid_best = std::numeric_limits<double>::infinity();
    const int steps = 41;
    for (int a = 0; a < steps; ++a) {
        for (int b = 0; b < steps; ++b) {
            for (int c = 0; c < steps; ++c) {
                LinearModel probe;
                probe.direction = Eigen::VectorXd(2);
                probe.direction << -3.0 + 6.0 * a / (steps - 1), -3.0 + 6.0 * b / (steps - 1);
                probe.intercept = -3.0 + 6.0 * c / (steps - 1);
                grid_best = std::min(grid_best,
                                     penalized_objective(data, probe, 1.5, 0.4, 0.3));
            }
        }
    }
    CHECK(result.diagnostics.objective <= grid_best + 1e-6 * (1.0 + std::abs(grid_best)));
}

TEST_CASE("label-symmetric data forces a zero direction") {
    Eigen::MatrixXd x(6, 2);
    x << 1.0, 0.5, -0.3, 2.0, 0.7, -1.1, 1.0, 0.5, -0.3, 2.0, 0.7, -1.1;
    Eigen::VectorXd y(6);
    y << 1.0, 1.0, 1.0, -1.0, -1.0, -1.0;
    const LabeledDataset data(x, y);

    FlameConfig config = FlameConfig::penalized(0.5, 1.0);
    config.loss_scale = 1.0;
    config.max_iterations = 40000;
    const FitResult result = fit_penalized(data, config);
    CHECK(result.model.direction.norm() <= 1e-3);

    // The intercept minimizes the symmetric 1D problem. The minimizing set
    // is an interval here, so check membership by value against a fine scan.
    double best_val = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 4000; ++k) {
        const double b = -2.0 + 4.0 * k / 4000.0;
        LinearModel probe{Eigen::VectorXd::Zero(2), b, config};
        best_val = std::min(best_val, penalized_objective(data, probe, 1.0, 0.5, 1.0));
    }
    LinearModel at_beta{Eigen::VectorXd::Zero(2), result.model.intercept, config};
    CHECK(penalized_objective(data, at_beta, 1.0, 0.5, 1.0) <= best_val + 1e-4);
    CHECK(result.diagnostics.objective <= best_val + 1e-6);
}

TEST_CASE("dominant ridge collapses the direction") {
    const LabeledDataset data = random_dataset(11, 20, 3);
    FlameConfig config = FlameConfig::penalized(0.2, 1e6);
    config.loss_scale = 1.0;
    const FitResult result = fit_penalized(data, config);
    CHECK(result.model.direction.norm() <= 1e-3);
}

TEST_CASE("norm-ball and penalized formulations agree through the dual multiplier") {
    int matched = 0;
    for (std::uint64_t seed : {3u, 17u, 23u, 31u, 57u}) {
        const LabeledDataset data = random_dataset(seed, 14, 2, 0.6);
        const double C = 1.0;
        for (const double theta : {0.0, 0.5}) {
            FlameConfig ball = FlameConfig::norm_ball(theta);
            ball.loss_scale = C;
            const FitResult cone = fit_socp(data, ball);
            const double nu = cone.diagnostics.norm_ball_multiplier;
            if (cone.model.direction.norm() < 1.0 - 1e-6 || nu < 1e-4) continue;

            FlameConfig pen = FlameConfig::penalized(theta, nu / static_cast<double>(data.size()));
            pen.loss_scale = C;
            pen.max_iterations = 200000;
            pen.tolerance = 1e-7;
            const FitResult ridge = fit_penalized(data, pen);
            ++matched;
            for (Eigen::Index j = 0; j < data.dim(); ++j) {
                CHECK(std::abs(cone.model.direction[j] - ridge.model.direction[j]) <= 1e-3);
            }
            CHECK(std::abs(cone.model.intercept - ridge.model.intercept) <= 1e-3);
        }
    }
    CHECK(matched >= 5);
}

TEST_CASE("decision values, labels and margins") {
    LinearModel model;
    model.direction = Eigen::VectorXd(2);
    model.direction << 1.0, 0.0;
    model.intercept = -1.0;
    Eigen::VectorXd x(2);
    x << 1.0, 5.0;
    CHECK(decision_value(model, x) == doctest::Approx(0.0));
    CHECK(predict_label(model, x) == 1.0);  // sign(0) is +1

    LinearModel constant;
    constant.direction = Eigen::VectorXd::Zero(2);
    constant.intercept = 0.5;
    CHECK(decision_value(constant, x) == doctest::Approx(0.5));

    Eigen::VectorXd bad(3);
    CHECK_THROWS_AS(decision_value(model, bad), std::invalid_argument);

    const LabeledDataset data = random_dataset(5, 10, 2, 4.0);
    FlameConfig config = FlameConfig::norm_ball(0.0);
    config.loss_scale = 1.0;
    const FitResult separated = fit_socp(data, config);
    const FunctionalMargins margins = functional_margins(separated.model, data);
    for (Eigen::Index i = 0; i < margins.values.size(); ++i) {
        CHECK(margins.values[i] > 0.0);
    }

    // Flipping labels negates every margin.
    LabeledDataset flipped(data.features(), -data.labels());
    const FunctionalMargins neg = functional_margins(separated.model, flipped);
    for (Eigen::Index i = 0; i < margins.values.size(); ++i) {
        CHECK(neg.values[i] == doctest::Approx(-margins.values[i]));
    }
}

TEST_CASE("translation moves the intercept and leaves the direction") {
    const LabeledDataset data = random_dataset(29, 20, 3);
    FlameConfig config = FlameConfig::norm_ball(0.5);
    config.loss_scale = 1.0;
    const FitResult base = fit_socp(data, config);

    Eigen::VectorXd shift(3);
    shift << 0.7, -1.3, 2.1;
    Eigen::MatrixXd moved = data.features();
    moved.rowwise() += shift.transpose();
    const LabeledDataset shifted(moved, data.labels());
    const FitResult after = fit_socp(shifted, config);

    CHECK((after.model.direction - base.model.direction).norm() <= 1e-5);
    CHECK(after.model.intercept ==
          doctest::Approx(base.model.intercept - shift.dot(base.model.direction)).epsilon(1e-4));
}

TEST_CASE("permuting samples changes nothing beyond the tolerance") {
    const LabeledDataset data = random_dataset(31, 16, 2);
    FlameConfig config = FlameConfig::norm_ball(0.3);
    config.loss_scale = 1.0;
    const FitResult base = fit_socp(data, config);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(data.size()));
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 engine(99);
    for (std::size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[engine() % i]);
    }
    Eigen::MatrixXd px(data.size(), data.dim());
    Eigen::VectorXd py(data.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
        px.row(static_cast<Eigen::Index>(k)) = data.features().row(perm[k]);
        py[static_cast<Eigen::Index>(k)] = data.labels()[perm[k]];
    }
    const FitResult permuted = fit_socp(LabeledDataset(px, py), config);
    CHECK((permuted.model.direction - base.model.direction).norm() <= 1e-5);
    CHECK(std::abs(permuted.model.intercept - base.model.intercept) <= 1e-5);
}

TEST_CASE("fits are deterministic") {
    const LabeledDataset data = random_dataset(77, 18, 3);
    FlameConfig config = FlameConfig::norm_ball(0.4);
    const FitResult a = fit_socp(data, config);
    const FitResult b = fit_socp(data, config);
    CHECK(a.model.direction == b.model.direction);
    CHECK(a.model.intercept == b.model.intercept);
    CHECK(a.diagnostics.objective == b.diagnostics.objective);
    CHECK(a.diagnostics.iterations == b.diagnostics.iterations);

    FlameConfig pen = FlameConfig::penalized(0.4, 0.5);
    pen.max_iterations = 5000;
    const FitResult c = fit_penalized(data, pen);
    const FitResult d = fit_penalized(data, pen);
    CHECK(c.model.direction == d.model.direction);
    CHECK(c.model.intercept == d.model.intercept);
}

TEST_CASE("penalized best objective never increases") {
    const LabeledDataset data = random_dataset(13, 30, 4);
    FlameConfig config = FlameConfig::penalized(0.6, 0.2);
    config.max_iterations = 3000;
    double last = std::numeric_limits<double>::infinity();
    bool monotone = true;
    fit_penalized(data, config, nullptr, [&](int, double best) {
        if (best > last + 1e-15) monotone = false;
        last = best;
    });
    CHECK(monotone);
}

TEST_CASE("high-dimensional fits reduce onto the sample span") {
    const LabeledDataset data = random_dataset(101, 12, 40, 1.5);
    FlameConfig config = FlameConfig::norm_ball(0.2);
    config.loss_scale = 1.0;
    const FitResult result = fit_socp(data, config);
    CHECK(result.diagnostics.converged);
    CHECK(result.model.direction.size() == 40);
    CHECK(result.model.direction.norm() <= 1.0 + 1e-6);

    // The fitted direction must lie in the span of the training samples.
    Eigen::MatrixXd basis = data.features().transpose();  // d x n
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    const Eigen::VectorXd residual =
        result.model.direction -
        basis * qr.solve(result.model.direction);
    CHECK(residual.norm() <= 1e-6);
}

TEST_CASE("dense and low-rank KKT paths agree") {
    const LabeledDataset data = random_dataset(61, 60, 4, 0.8);
    socp::Problem problem = socp::build_problem(data.features(), data.labels(), 1.0, 0.5);
    const socp::Solution dense = socp::solve(problem, 1e-8, 200, socp::SolvePath::Dense);
    const socp::Solution lowrank = socp::solve(problem, 1e-5, 200, socp::SolvePath::LowRank);
    CHECK(dense.converged);
    CHECK(lowrank.primal_residual <= 1e-4);
    CHECK((dense.omega - lowrank.omega).norm() <= 1e-3);
    CHECK(std::abs(dense.beta - lowrank.beta) <= 1e-3);
}

TEST_CASE("single-class data is rejected at fit time") {
    Eigen::MatrixXd x(3, 1);
    x << 1.0, 2.0, 3.0;
    Eigen::VectorXd y(3);
    y << 1.0, 1.0, 1.0;
    const LabeledDataset data(x, y);
    CHECK_THROWS_AS(fit_socp(data, FlameConfig::norm_ball(0.0)), std::invalid_argument);
    CHECK_THROWS_AS(fit_penalized(data, FlameConfig::penalized(0.0, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("iteration caps flag non-convergence but still return a model") {
    const LabeledDataset data = random_dataset(55, 20, 3);
    FlameConfig config = FlameConfig::norm_ball(0.5);
    config.max_iterations = 2;
    const FitResult result = fit_socp(data, config);
    CHECK_FALSE(result.diagnostics.converged);
    CHECK(result.model.direction.allFinite());
    CHECK(std::isfinite(result.model.intercept));
}

TEST_CASE("config validation") {
    FlameConfig config = FlameConfig::norm_ball(0.5);
    config.theta = 1.5;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = FlameConfig::penalized(0.5, -1.0);
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = FlameConfig::norm_ball(0.5);
    config.loss_scale = 0.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config = FlameConfig::norm_ball(0.5);
    config.tolerance = 0.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("class margins filter by label") {
    Eigen::MatrixXd x(4, 1);
    x << 2.0, 1.0, -1.0, -2.0;
    Eigen::VectorXd y(4);
    y << 1.0, 1.0, -1.0, -1.0;
    const LabeledDataset data(x, y);
    LinearModel model{Eigen::VectorXd::Ones(1), 0.5, FlameConfig::norm_ball(0.0)};
    const FunctionalMargins margins = functional_margins(model, data);
    const Eigen::VectorXd majority = class_margins(margins, data, -1.0);
    REQUIRE(majority.size() == 2);
    CHECK(majority[0] == doctest::Approx(0.5));   // -(-1 + 0.5)
    CHECK(majority[1] == doctest::Approx(1.5));   // -(-2 + 0.5)
    const Eigen::VectorXd minority = class_margins(margins, data, 1.0);
    REQUIRE(minority.size() == 2);
    CHECK(minority[0] == doctest::Approx(2.5));
}
