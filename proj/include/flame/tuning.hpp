#pragma once

#include "flame/cv.hpp"
#include "flame/solver.hpp"
#include "flame/types.hpp"

#include <utility>
#include <vector>

namespace flame {

/// One fitted step of the adaptive iteration.
struct AdaptiveStep {
    double theta = 0.0;
    LinearModel model;
    double objective = 0.0;              // s(omega_k, beta_k, theta_k)
    double majority_order_margin = 0.0;  // g_(n+)(theta_k)
};

struct AdaptiveTrace {
    std::vector<AdaptiveStep> steps;
    bool terminated = false;  // fixed point reached before the step budget
};

/// One update of the adaptive rule: theta <- min(1, max(theta, 1/(g sqrt(C)))),
/// with degenerate order margins (non-finite or <= 0) clamped straight to 1.
double adaptive_update(double theta, double order_margin, double C);

/// Algorithm: starting from theta = 0, alternate a penalized FLAME fit with
/// the adaptive update driven by the n_+-th smallest majority-class margin.
/// Each fit warm-starts from the previous solution, which keeps the sample
/// objective non-increasing along the trace. Requires the positive class to
/// be the minority; relabel upstream otherwise.
std::pair<double, AdaptiveTrace> adaptive_theta(const LabeledDataset& data,
                                                FlameConfig config, int max_steps);

struct TradeoffCurves {
    std::vector<double> grid;
    std::vector<double> error;                  // CV mean within-class error
    std::vector<double> rank_comp_curve;        // vs the reference direction
    std::vector<double> error_normalized;       // min-max to [0, 1]
    std::vector<double> rank_comp_normalized;
    double selected_theta = 0.0;
    bool crossing_found = false;
};

/// Crossing of a decreasing and an increasing normalized curve over a grid:
/// linear interpolation between grid points, exact ties and plateaus resolved
/// toward the smaller theta. Returns (theta, crossing_found); without a sign
/// change the fallback is the grid point minimizing the curve gap.
std::pair<double, bool> find_curve_crossing(const std::vector<double>& grid,
                                            const std::vector<double>& decreasing,
                                            const std::vector<double>& increasing);

/// Equal-trade-off parameter: fits the grid, estimates the error curve by
/// stratified CV and the RankComp curve on full-data fits, normalizes both
/// to [0, 1] and picks the crossing (linear interpolation between grid
/// points, ties toward smaller theta). Without a crossing, falls back to the
/// theta minimizing the curve gap and reports crossing_found = false.
std::pair<double, TradeoffCurves> equal_tradeoff_theta(const LabeledDataset& data,
                                                       const std::vector<double>& grid,
                                                       const CvConfig& cv,
                                                       const LinearModel& reference,
                                                       FlameConfig base_config);

}  // namespace flame
