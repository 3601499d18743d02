#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flame {

/// Thrown when an input file or dataset is structurally unusable.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a solver cannot produce a usable model.
class SolverError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Formulation { NormBall, Penalized };

/// Loss and solver parameters for a FLAME fit.
///
/// theta interpolates between DWD (theta = 0) and SVM (theta = 1).
/// loss_scale is the constant C of the loss; when unset, fits derive it
/// from the data via default_loss_scale(). That default is a scale
/// heuristic in the spirit of the usual DWD default, not a universally
/// agreed constant, so it can always be overridden here.
struct FlameConfig {
    std::optional<double> loss_scale;  // C > 0
    double theta = 0.0;                // in [0, 1]
    double lambda = 1.0;               // ridge weight, penalized formulation only
    Formulation formulation = Formulation::NormBall;
    double tolerance = 1e-8;
    int max_iterations = 200;

    static FlameConfig norm_ball(double theta);
    static FlameConfig penalized(double theta, double lambda);

    void validate() const;
    double resolved_scale_or(double fallback) const {
        return loss_scale.value_or(fallback);
    }
};

/// n samples in R^d with labels in {+1, -1}.
class LabeledDataset {
  public:
    LabeledDataset(Eigen::MatrixXd features, Eigen::VectorXd labels,
                   std::vector<std::string> feature_names = {});

    const Eigen::MatrixXd& features() const { return features_; }
    const Eigen::VectorXd& labels() const { return labels_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    Eigen::Index size() const { return features_.rows(); }
    Eigen::Index dim() const { return features_.cols(); }
    Eigen::Index positive_count() const { return n_plus_; }
    Eigen::Index negative_count() const { return n_minus_; }

    /// Majority-to-minority sample size ratio m = n_- / n_+ when the
    /// negative class is the majority; callers relabel upstream otherwise.
    double imbalance_factor() const;

    /// Fit operations need at least one sample of each class.
    void require_both_classes() const;

  private:
    Eigen::MatrixXd features_;
    Eigen::VectorXd labels_;
    std::vector<std::string> feature_names_;
    Eigen::Index n_plus_ = 0;
    Eigen::Index n_minus_ = 0;
};

/// Direction omega and intercept beta of f(x) = x'omega + beta.
struct LinearModel {
    Eigen::VectorXd direction;
    double intercept = 0.0;
    FlameConfig config;

    Eigen::Index dim() const { return direction.size(); }
};

/// Per-sample functional margins u_i = y_i (x_i'omega + beta).
struct FunctionalMargins {
    Eigen::VectorXd values;
};

/// Margins of the samples carrying the given label.
Eigen::VectorXd class_margins(const FunctionalMargins& margins,
                              const LabeledDataset& data, double label);

}  // namespace flame
