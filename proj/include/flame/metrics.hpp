#pragma once

#include <Eigen/Core>

#include <vector>

namespace flame {

/// Average of the two per-class error rates; insensitive to class imbalance.
double mean_within_class_error(const Eigen::VectorXd& predictions,
                               const Eigen::VectorXd& labels);

/// Fraction of variable pairs whose absolute-coefficient order differs
/// between the two directions. Ties never count as discordant.
double rank_comp(const Eigen::VectorXd& w, const Eigen::VectorXd& w_ref);

/// Angle in degrees between two directions, in [0, 180].
double angle_between_degrees(const Eigen::VectorXd& w, const Eigen::VectorXd& w_ref);

double intercept_deviation(double beta, double beta_ref);

struct DispersionInput {
    std::vector<Eigen::VectorXd> directions;
};

enum class SignAlignment {
    None,
    // Flip each direction so its inner product with the first replicate is
    // nonnegative; +-omega describe the same axis, and unaligned signs would
    // inflate the spread.
    AlignToFirst,
};

/// Trace of the sample covariance of the replicate directions, each
/// normalized to unit length first.
double dispersion(const DispersionInput& input,
                  SignAlignment alignment = SignAlignment::AlignToFirst);

}  // namespace flame
