#pragma once

#include "flame/types.hpp"

#include <functional>

namespace flame {

struct FitDiagnostics {
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool converged = false;

    /// Norm-ball fits: dual variable of the ||omega|| <= 1 cone; dividing by
    /// the sample count gives the ridge weight whose penalized fit matches.
    double norm_ball_multiplier = 0.0;

    /// Penalized fits: norm of the smallest subgradient found at the result.
    double certificate = 0.0;
};

struct FitResult {
    LinearModel model;
    FitDiagnostics diagnostics;
};

/// Norm-constrained FLAME fit through the second-order cone program.
/// Minimizes the summed FLAME losses subject to ||omega|| <= 1.
FitResult fit_socp(const LabeledDataset& data, FlameConfig config);

/// Called once per iteration with the best objective seen so far.
using IterationObserver = std::function<void(int iteration, double best_objective)>;

/// Ridge-penalized FLAME fit by projected subgradient descent with
/// Polyak-style diminishing steps and best-iterate tracking. Minimizes
///   (1/n) sum_i L(y_i f(x_i)) + (lambda/2) ||omega||^2.
/// Slow but dependable; doubles as an independent check on the cone solver.
FitResult fit_penalized(const LabeledDataset& data, FlameConfig config,
                        const LinearModel* warm_start = nullptr,
                        const IterationObserver& observer = nullptr);

/// Dispatches on config.formulation.
FitResult fit(const LabeledDataset& data, const FlameConfig& config);

/// f(x) = x'omega + beta.
double decision_value(const LinearModel& model, const Eigen::VectorXd& x);

/// sign(f(x)) with sign(0) = +1.
double predict_label(const LinearModel& model, const Eigen::VectorXd& x);

FunctionalMargins functional_margins(const LinearModel& model, const LabeledDataset& data);

/// Value of the penalized sample objective at the given model.
double penalized_objective(const LabeledDataset& data, const LinearModel& model,
                           double C, double theta, double lambda);

}  // namespace flame
