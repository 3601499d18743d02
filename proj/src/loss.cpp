#include "flame/loss.hpp"

#include <algorithm>
#include <cmath>

namespace flame {

namespace {

void check_loss_args(double u, double C) {
    if (!std::isfinite(u)) {
        throw std::invalid_argument("loss: functional margin must be finite");
    }
    if (!std::isfinite(C) || C <= 0.0) {
        throw std::invalid_argument("loss: C must be finite and positive");
    }
}

void check_theta(double theta) {
    if (!std::isfinite(theta) || theta < 0.0 || theta > 1.0) {
        throw std::invalid_argument("loss: theta must lie in [0, 1]");
    }
}

}  // namespace

double dwd_loss(double u, double C) {
    check_loss_args(u, C);
    const double root_c = std::sqrt(C);
    if (u <= 1.0 / root_c) {
        return 2.0 * root_c - C * u;
    }
    return 1.0 / u;
}

double modified_hinge(double u, double C) {
    check_loss_args(u, C);
    const double root_c = std::sqrt(C);
    if (u <= 1.0 / root_c) {
        return root_c - C * u;
    }
    return 0.0;
}

double flame_loss(double u, double C, double theta) {
    check_loss_args(u, C);
    check_theta(theta);
    const double root_c = std::sqrt(C);
    if (u <= 1.0 / root_c) {
        return (2.0 - theta) * root_c - C * u;
    }
    // For theta = 0 this threshold is +inf and the zero branch is empty.
    if (theta > 0.0 && u >= 1.0 / (theta * root_c)) {
        return 0.0;
    }
    return 1.0 / u - theta * root_c;
}

double flame_subgradient(double u, double C, double theta) {
    check_loss_args(u, C);
    check_theta(theta);
    const double root_c = std::sqrt(C);
    if (u < 1.0 / root_c) {
        return -C;
    }
    if (theta > 0.0 && u >= 1.0 / (theta * root_c)) {
        return 0.0;
    }
    return -1.0 / (u * u);
}

double default_loss_scale(const LabeledDataset& data) {
    data.require_both_classes();
    std::vector<double> distances;
    distances.reserve(static_cast<std::size_t>(data.positive_count() * data.negative_count()));
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        if (data.labels()[i] != 1.0) continue;
        for (Eigen::Index j = 0; j < data.size(); ++j) {
            if (data.labels()[j] != -1.0) continue;
            distances.push_back((data.features().row(i) - data.features().row(j)).norm());
        }
    }
    const std::size_t mid = distances.size() / 2;
    std::nth_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid),
                     distances.end());
    double median = distances[mid];
    if (distances.size() % 2 == 0) {
        const double below =
            *std::max_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + below);
    }
    if (median <= 0.0) {
        // Coincident classes; fall back to a neutral scale.
        return 100.0;
    }
    return 100.0 / (median * median);
}

double resolve_loss_scale(const FlameConfig& config, const LabeledDataset& data) {
    if (config.loss_scale) {
        return *config.loss_scale;
    }
    return default_loss_scale(data);
}

}  // namespace flame
