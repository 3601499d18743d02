#include "flame/types.hpp"

#include <cmath>

namespace flame {

FlameConfig FlameConfig::norm_ball(double theta) {
    FlameConfig config;
    config.theta = theta;
    config.formulation = Formulation::NormBall;
    config.tolerance = 1e-8;
    config.max_iterations = 200;
    return config;
}

FlameConfig FlameConfig::penalized(double theta, double lambda) {
    FlameConfig config;
    config.theta = theta;
    config.lambda = lambda;
    config.formulation = Formulation::Penalized;
    config.tolerance = 1e-5;
    config.max_iterations = 100000;
    return config;
}

void FlameConfig::validate() const {
    if (loss_scale && (!std::isfinite(*loss_scale) || *loss_scale <= 0.0)) {
        throw std::invalid_argument("FlameConfig: loss scale C must be finite and positive");
    }
    if (!std::isfinite(theta) || theta < 0.0 || theta > 1.0) {
        throw std::invalid_argument("FlameConfig: theta must lie in [0, 1]");
    }
    if (!std::isfinite(lambda) || lambda <= 0.0) {
        throw std::invalid_argument("FlameConfig: lambda must be positive");
    }
    if (!std::isfinite(tolerance) || tolerance <= 0.0) {
        throw std::invalid_argument("FlameConfig: tolerance must be positive");
    }
    if (max_iterations < 1) {
        throw std::invalid_argument("FlameConfig: max_iterations must be at least 1");
    }
}

LabeledDataset::LabeledDataset(Eigen::MatrixXd features, Eigen::VectorXd labels,
                               std::vector<std::string> feature_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)) {
    if (features_.rows() < 2) {
        throw std::invalid_argument("LabeledDataset: need at least two samples");
    }
    if (features_.cols() < 1) {
        throw std::invalid_argument("LabeledDataset: need at least one feature");
    }
    if (labels_.size() != features_.rows()) {
        throw std::invalid_argument("LabeledDataset: label count must match sample count");
    }
    if (!features_.allFinite()) {
        throw std::invalid_argument("LabeledDataset: features contain non-finite values");
    }
    if (!feature_names_.empty() &&
        static_cast<Eigen::Index>(feature_names_.size()) != features_.cols()) {
        throw std::invalid_argument("LabeledDataset: feature name count must match dimension");
    }
    for (Eigen::Index i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == 1.0) {
            ++n_plus_;
        } else if (labels_[i] == -1.0) {
            ++n_minus_;
        } else {
            throw std::invalid_argument("LabeledDataset: labels must be +1 or -1");
        }
    }
}

double LabeledDataset::imbalance_factor() const {
    require_both_classes();
    return static_cast<double>(n_minus_) / static_cast<double>(n_plus_);
}

void LabeledDataset::require_both_classes() const {
    if (n_plus_ == 0 || n_minus_ == 0) {
        throw std::invalid_argument("LabeledDataset: operation needs samples from both classes");
    }
}

Eigen::VectorXd class_margins(const FunctionalMargins& margins,
                              const LabeledDataset& data, double label) {
    if (margins.values.size() != data.size()) {
        throw std::invalid_argument("class_margins: margin count must match dataset size");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(data.size()));
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        if (data.labels()[i] == label) {
            out.push_back(margins.values[i]);
        }
    }
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace flame
