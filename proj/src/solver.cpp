#include "flame/solver.hpp"

#include "flame/loss.hpp"
#include "flame/socp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace flame {

namespace {

// Subdifferential of the FLAME loss at u: [lo, hi] collapses to a point away
// from the zero-branch kink. Margins within kink_tol of a kink get the full
// interval so the certificate below reflects the true subdifferential.
struct SlopeInterval {
    double lo;
    double hi;
};

SlopeInterval loss_slope_interval(double u, double C, double theta, double kink_tol) {
    const double root_c = std::sqrt(C);
    if (theta > 0.0) {
        const double kink = 1.0 / (theta * root_c);
        if (std::abs(u - kink) <= kink_tol * std::max(1.0, kink)) {
            return {-theta * theta * C, 0.0};
        }
    }
    const double g = flame_subgradient(u, C, theta);
    return {g, g};
}

// Smallest-norm element of the subdifferential estimate at (omega, beta),
// found by projected gradient on the per-sample kink weights.
double min_subgradient_norm(const LabeledDataset& data, const Eigen::VectorXd& omega,
                            double beta, double C, double theta, double lambda) {
    const Eigen::Index n = data.size();
    const Eigen::Index d = data.dim();
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::VectorXd g_omega = lambda * omega;
    double g_beta = 0.0;
    std::vector<Eigen::Index> kink_samples;
    std::vector<double> width;  // hi - lo per kink sample

    for (Eigen::Index i = 0; i < n; ++i) {
        const double y = data.labels()[i];
        const double u = y * (data.features().row(i).dot(omega) + beta);
        const SlopeInterval iv = loss_slope_interval(u, C, theta, 1e-7);
        g_omega += inv_n * iv.lo * y * data.features().row(i).transpose();
        g_beta += inv_n * iv.lo * y;
        if (iv.hi > iv.lo) {
            kink_samples.push_back(i);
            width.push_back(iv.hi - iv.lo);
        }
    }
    if (kink_samples.empty()) {
        return std::sqrt(g_omega.squaredNorm() + g_beta * g_beta);
    }

    // g(t) = base + sum_k t_k v_k over t in [0,1]^K.
    const std::size_t K = kink_samples.size();
    Eigen::MatrixXd v(d + 1, static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
        const Eigen::Index i = kink_samples[k];
        const double y = data.labels()[i];
        v.col(static_cast<Eigen::Index>(k)).head(d) =
            inv_n * width[k] * y * data.features().row(i).transpose();
        v(d, static_cast<Eigen::Index>(k)) = inv_n * width[k] * y;
    }
    Eigen::VectorXd base(d + 1);
    base.head(d) = g_omega;
    base[d] = g_beta;

    Eigen::VectorXd t = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(K), 0.5);
    const double lip = std::max((v.transpose() * v).trace(), 1e-12);
    for (int pass = 0; pass < 200; ++pass) {
        const Eigen::VectorXd g_full = base + v * t;
        Eigen::VectorXd grad_t = v.transpose() * g_full;
        t = (t - grad_t / lip).cwiseMax(0.0).cwiseMin(1.0);
    }
    return (base + v * t).norm();
}

}  // namespace

FitResult fit_socp(const LabeledDataset& data, FlameConfig config) {
    config.validate();
    data.require_both_classes();
    const double C = resolve_loss_scale(config, data);
    config.loss_scale = C;
    config.formulation = Formulation::NormBall;

    socp::Problem problem =
        socp::build_problem(data.features(), data.labels(), C, config.theta);
    socp::Solution sol = socp::solve(problem, config.tolerance, config.max_iterations);

    if (!sol.omega.allFinite() || !std::isfinite(sol.beta)) {
        throw SolverError("fit_socp: solver produced non-finite iterates");
    }

    FitResult result{LinearModel{sol.omega, sol.beta, config}, FitDiagnostics{}};
    result.diagnostics.objective = sol.objective;
    result.diagnostics.iterations = sol.iterations;
    result.diagnostics.primal_residual = sol.primal_residual;
    result.diagnostics.dual_residual = std::max(sol.dual_residual, sol.gap);
    result.diagnostics.converged = sol.converged;
    result.diagnostics.norm_ball_multiplier = sol.norm_ball_multiplier;
    return result;
}

FitResult fit_penalized(const LabeledDataset& data, FlameConfig config,
                        const LinearModel* warm_start, const IterationObserver& observer) {
    config.validate();
    data.require_both_classes();
    const double C = resolve_loss_scale(config, data);
    config.loss_scale = C;
    config.formulation = Formulation::Penalized;

    const Eigen::Index n = data.size();
    const Eigen::Index d = data.dim();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double lambda = config.lambda;
    const double theta = config.theta;

    Eigen::VectorXd omega = Eigen::VectorXd::Zero(d);
    double beta = 0.0;
    if (warm_start != nullptr) {
        if (warm_start->dim() != d) {
            throw std::invalid_argument("fit_penalized: warm start dimension mismatch");
        }
        omega = warm_start->direction;
        beta = warm_start->intercept;
    }

    auto objective_at = [&](const Eigen::VectorXd& w, double b) {
        double loss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = data.labels()[i] * (data.features().row(i).dot(w) + b);
            loss += flame_loss(u, C, theta);
        }
        return inv_n * loss + 0.5 * lambda * w.squaredNorm();
    };

    Eigen::VectorXd best_omega = omega;
    double best_beta = beta;
    double best_objective = objective_at(omega, beta);

    const int max_iter = config.max_iterations;
    const int certificate_stride = 500;
    double certificate = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;

    for (int k = 0; k < max_iter; ++k) {
        iterations = k + 1;
        Eigen::VectorXd grad = lambda * omega;
        double grad_beta = 0.0;
        double current = 0.5 * lambda * omega.squaredNorm();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double y = data.labels()[i];
            const double u = y * (data.features().row(i).dot(omega) + beta);
            current += inv_n * flame_loss(u, C, theta);
            const double slope = flame_subgradient(u, C, theta);
            if (slope != 0.0) {
                grad += (inv_n * slope * y) * data.features().row(i).transpose();
                grad_beta += inv_n * slope * y;
            }
        }
        // Accept a new best only on a meaningful improvement; objectives can
        // carry whole faces of minimizers and rounding noise along such a
        // face must not drag the iterate away from a warm start.
        if (current < best_objective - 1e-9 * (1.0 + std::abs(best_objective))) {
            best_objective = current;
            best_omega = omega;
            best_beta = beta;
        }
        if (observer) observer(k, best_objective);

        const double grad_sq = grad.squaredNorm() + grad_beta * grad_beta;
        if (grad_sq < 1e-30) {
            converged = true;
            certificate = std::sqrt(grad_sq);
            break;
        }
        // Polyak step against a receding target below the best value seen.
        const double target_gap =
            (1.0 + std::abs(best_objective)) * 0.1 / std::sqrt(static_cast<double>(k + 1));
        const double step = (current - best_objective + target_gap) / grad_sq;
        omega -= step * grad;
        beta -= step * grad_beta;

        if ((k + 1) % certificate_stride == 0) {
            certificate = min_subgradient_norm(data, best_omega, best_beta, C, theta, lambda);
            if (certificate <= config.tolerance) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        certificate = min_subgradient_norm(data, best_omega, best_beta, C, theta, lambda);
        converged = certificate <= config.tolerance;
    }

    FitResult result{LinearModel{best_omega, best_beta, config}, FitDiagnostics{}};
    result.diagnostics.objective = best_objective;
    result.diagnostics.iterations = iterations;
    result.diagnostics.primal_residual = 0.0;
    result.diagnostics.dual_residual = certificate;
    result.diagnostics.certificate = certificate;
    result.diagnostics.converged = converged;
    return result;
}

FitResult fit(const LabeledDataset& data, const FlameConfig& config) {
    if (config.formulation == Formulation::NormBall) {
        return fit_socp(data, config);
    }
    return fit_penalized(data, config);
}

double decision_value(const LinearModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.direction.size()) {
        throw std::invalid_argument("decision_value: dimension mismatch");
    }
    return x.dot(model.direction) + model.intercept;
}

double predict_label(const LinearModel& model, const Eigen::VectorXd& x) {
    return decision_value(model, x) >= 0.0 ? 1.0 : -1.0;
}

FunctionalMargins functional_margins(const LinearModel& model, const LabeledDataset& data) {
    if (data.dim() != model.direction.size()) {
        throw std::invalid_argument("functional_margins: dimension mismatch");
    }
    Eigen::VectorXd f = data.features() * model.direction;
    f.array() += model.intercept;
    FunctionalMargins margins;
    margins.values = data.labels().cwiseProduct(f);
    return margins;
}

double penalized_objective(const LabeledDataset& data, const LinearModel& model,
                           double C, double theta, double lambda) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const double u =
            data.labels()[i] * (data.features().row(i).dot(model.direction) + model.intercept);
        loss += flame_loss(u, C, theta);
    }
    return loss / static_cast<double>(data.size()) + 0.5 * lambda * model.direction.squaredNorm();
}

}  // namespace flame
