#include "flame/tuning.hpp"

#include "flame/loss.hpp"
#include "flame/metrics.hpp"
#include "flame/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace flame {

namespace {

// The iteration stops once an update gains less than this. Loss curves are
// examined on 0.1-wide theta grids and fit jitter swamps finer resolution,
// so 1e-3 already over-resolves the fixed point.
constexpr double kThetaTerminationTol = 1e-3;

// n_+-th smallest functional margin of the majority (negative) class.
double majority_order_margin(const LabeledDataset& data, const LinearModel& model) {
    const FunctionalMargins margins = functional_margins(model, data);
    Eigen::VectorXd majority = class_margins(margins, data, -1.0);
    std::vector<double> values(majority.data(), majority.data() + majority.size());
    const auto rank = static_cast<std::ptrdiff_t>(data.positive_count()) - 1;
    std::nth_element(values.begin(), values.begin() + rank, values.end());
    return values[static_cast<std::size_t>(rank)];
}

std::vector<double> min_max_normalize(const std::vector<double>& values) {
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::vector<double> out(values.size(), 0.0);
    if (hi > lo) {
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
    }
    // A constant curve normalizes to all zeros and the crossing rule below
    // degenerates to the flagged fallback.
    return out;
}

}  // namespace

std::vector<std::vector<Eigen::Index>> make_stratified_folds(const Eigen::VectorXd& labels,
                                                             int folds, std::uint64_t seed) {
    if (folds < 2 || folds > labels.size()) {
        throw std::invalid_argument("make_stratified_folds: folds must lie in [2, n]");
    }
    std::vector<Eigen::Index> positives, negatives;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        (labels[i] == 1.0 ? positives : negatives).push_back(i);
    }
    std::mt19937_64 engine(derive_seed(seed, 0xf01d5));
    // Fisher-Yates with an explicit draw so assignments do not depend on the
    // standard library's shuffle implementation.
    auto shuffle_indices = [&engine](std::vector<Eigen::Index>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(engine() % i);
            std::swap(v[i - 1], v[j]);
        }
    };
    shuffle_indices(positives);
    shuffle_indices(negatives);

    std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(folds));
    std::size_t next = 0;
    for (Eigen::Index idx : positives) out[next++ % out.size()].push_back(idx);
    for (Eigen::Index idx : negatives) out[next++ % out.size()].push_back(idx);
    for (const auto& fold : out) {
        if (fold.empty()) {
            throw std::invalid_argument("make_stratified_folds: empty fold");
        }
    }
    return out;
}

LabeledDataset subset_dataset(const LabeledDataset& data,
                              const std::vector<Eigen::Index>& indices) {
    Eigen::MatrixXd features(static_cast<Eigen::Index>(indices.size()), data.dim());
    Eigen::VectorXd labels(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        features.row(static_cast<Eigen::Index>(k)) = data.features().row(indices[k]);
        labels[static_cast<Eigen::Index>(k)] = data.labels()[indices[k]];
    }
    return LabeledDataset(std::move(features), std::move(labels), data.feature_names());
}

double adaptive_update(double theta, double order_margin, double C) {
    if (!std::isfinite(order_margin) || order_margin <= 0.0) {
        return 1.0;
    }
    const double candidate = 1.0 / (order_margin * std::sqrt(C));
    return std::min(1.0, std::max(theta, candidate));
}

std::pair<double, AdaptiveTrace> adaptive_theta(const LabeledDataset& data,
                                                FlameConfig config, int max_steps) {
    data.require_both_classes();
    if (data.positive_count() > data.negative_count()) {
        throw std::invalid_argument(
            "adaptive_theta: the positive class must be the minority; relabel upstream");
    }
    if (max_steps < 1) {
        throw std::invalid_argument("adaptive_theta: max_steps must be at least 1");
    }
    const double C = resolve_loss_scale(config, data);
    config.loss_scale = C;
    config.formulation = Formulation::Penalized;

    AdaptiveTrace trace;
    double theta = 0.0;
    LinearModel warm;
    for (int k = 0; k < max_steps; ++k) {
        config.theta = theta;
        FitResult fitted;
        try {
            fitted = fit_penalized(data, config, k == 0 ? nullptr : &warm);
        } catch (const std::exception& err) {
            throw SolverError("adaptive_theta: fit failed at step " + std::to_string(k) +
                              ": " + err.what());
        }
        warm = fitted.model;
        AdaptiveStep step;
        step.theta = theta;
        step.model = fitted.model;
        step.objective = penalized_objective(data, fitted.model, C, theta, config.lambda);
        step.majority_order_margin = majority_order_margin(data, fitted.model);
        trace.steps.push_back(std::move(step));

        const double next = adaptive_update(theta, trace.steps.back().majority_order_margin, C);
        if (next <= theta + kThetaTerminationTol) {
            trace.terminated = true;
            return {theta, trace};
        }
        theta = next;
    }
    return {theta, trace};
}

std::pair<double, TradeoffCurves> equal_tradeoff_theta(const LabeledDataset& data,
                                                       const std::vector<double>& grid,
                                                       const CvConfig& cv,
                                                       const LinearModel& reference,
                                                       FlameConfig base_config) {
    data.require_both_classes();
    if (grid.size() < 3 || !std::is_sorted(grid.begin(), grid.end()) ||
        grid.front() < 0.0 || grid.back() > 1.0) {
        throw std::invalid_argument(
            "equal_tradeoff_theta: grid must be sorted within [0, 1] with at least 3 points");
    }
    if (reference.direction.size() != data.dim() || reference.direction.norm() == 0.0) {
        throw std::invalid_argument("equal_tradeoff_theta: reference direction must be nonzero");
    }
    if (cv.folds < 2 || cv.repeats < 1) {
        throw std::invalid_argument("equal_tradeoff_theta: invalid CV configuration");
    }
    const double C = resolve_loss_scale(base_config, data);
    base_config.loss_scale = C;

    TradeoffCurves curves;
    curves.grid = grid;
    curves.error.resize(grid.size());
    curves.rank_comp_curve.resize(grid.size());

    // Fold layout is shared across the grid so theta is the only thing that
    // changes between curve points.
    std::vector<std::vector<std::vector<Eigen::Index>>> splits;
    for (int rep = 0; rep < cv.repeats; ++rep) {
        splits.push_back(make_stratified_folds(data.labels(), cv.folds,
                                               derive_seed(cv.seed, 0xcf, static_cast<std::uint64_t>(rep))));
    }
    std::vector<Eigen::Index> all(static_cast<std::size_t>(data.size()));
    std::iota(all.begin(), all.end(), 0);

    for (std::size_t g = 0; g < grid.size(); ++g) {
        FlameConfig config = base_config;
        config.theta = grid[g];

        const FitResult full = fit(data, config);
        curves.rank_comp_curve[g] = rank_comp(full.model.direction, reference.direction);

        double error_sum = 0.0;
        int error_count = 0;
        for (const auto& folds : splits) {
            for (std::size_t f = 0; f < folds.size(); ++f) {
                std::vector<Eigen::Index> train;
                for (std::size_t other = 0; other < folds.size(); ++other) {
                    if (other == f) continue;
                    train.insert(train.end(), folds[other].begin(), folds[other].end());
                }
                const LabeledDataset train_data = subset_dataset(data, train);
                const FitResult fold_fit = fit(train_data, config);
                // Per-class error on the held-out fold; folds too small to
                // carry both classes contribute the error of the class present.
                double err_plus = 0.0, err_minus = 0.0;
                Eigen::Index n_plus = 0, n_minus = 0;
                for (Eigen::Index idx : folds[f]) {
                    const double predicted =
                        predict_label(fold_fit.model, data.features().row(idx).transpose());
                    if (data.labels()[idx] == 1.0) {
                        ++n_plus;
                        if (predicted != 1.0) err_plus += 1.0;
                    } else {
                        ++n_minus;
                        if (predicted != -1.0) err_minus += 1.0;
                    }
                }
                double fold_error = 0.0;
                if (n_plus > 0 && n_minus > 0) {
                    fold_error = 0.5 * err_plus / static_cast<double>(n_plus) +
                                 0.5 * err_minus / static_cast<double>(n_minus);
                } else if (n_plus > 0) {
                    fold_error = err_plus / static_cast<double>(n_plus);
                } else {
                    fold_error = err_minus / static_cast<double>(n_minus);
                }
                error_sum += fold_error;
                ++error_count;
            }
        }
        curves.error[g] = error_sum / static_cast<double>(error_count);
    }

    curves.error_normalized = min_max_normalize(curves.error);
    curves.rank_comp_normalized = min_max_normalize(curves.rank_comp_curve);

    const auto [selected, found] =
        find_curve_crossing(grid, curves.error_normalized, curves.rank_comp_normalized);
    curves.selected_theta = selected;
    curves.crossing_found = found;
    return {selected, curves};
}

std::pair<double, bool> find_curve_crossing(const std::vector<double>& grid,
                                            const std::vector<double>& decreasing,
                                            const std::vector<double>& increasing) {
    if (grid.size() != decreasing.size() || grid.size() != increasing.size() || grid.empty()) {
        throw std::invalid_argument("find_curve_crossing: curve lengths must match the grid");
    }
    const std::size_t G = grid.size();
    std::vector<double> delta(G);
    for (std::size_t i = 0; i < G; ++i) delta[i] = decreasing[i] - increasing[i];

    for (std::size_t i = 0; i < G; ++i) {
        if (delta[i] == 0.0) {
            return {grid[i], true};
        }
        if (i + 1 < G && delta[i] > 0.0 && delta[i + 1] < 0.0) {
            const double t = delta[i] / (delta[i] - delta[i + 1]);
            return {grid[i] + t * (grid[i + 1] - grid[i]), true};
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < G; ++i) {
        if (std::abs(delta[i]) < std::abs(delta[best])) best = i;
    }
    return {grid[best], false};
}

}  // namespace flame
