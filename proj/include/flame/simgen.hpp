#pragma once

#include "flame/types.hpp"

#include <cstdint>
#include <vector>

namespace flame {

struct CovarianceSpec {
    enum class Kind { Identity, Interchangeable, BlockInterchangeable };

    Kind kind = Kind::Identity;
    int dim = 1;
    double rho = 0.0;
    std::vector<int> block_sizes;  // BlockInterchangeable only; sums to dim

    static CovarianceSpec identity(int dim);
    static CovarianceSpec interchangeable(int dim, double rho);
    static CovarianceSpec block_interchangeable(std::vector<int> block_sizes, double rho);

    void validate() const;
};

/// Two Gaussian populations MVN(mu_plus, Sigma) and MVN(mu_minus, Sigma)
/// with class sizes n_plus / n_minus; the seed fixes the draw bit for bit.
struct TwoClassGaussianSpec {
    Eigen::VectorXd mu_plus;
    Eigen::VectorXd mu_minus;
    CovarianceSpec covariance;
    int n_plus = 1;
    int n_minus = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

Eigen::MatrixXd make_covariance(const CovarianceSpec& spec);

/// Returns c * mu1 with c > 0 such that the Mahalanobis distance between
/// +c*mu1 and -c*mu1 equals target: (2 c mu1)' Sigma^{-1} (2 c mu1) = target.
Eigen::VectorXd scale_mean_to_mahalanobis(const Eigen::VectorXd& mu1,
                                          const Eigen::MatrixXd& sigma, double target);

/// n_plus rows labeled +1 first, then n_minus rows labeled -1.
LabeledDataset sample_two_class(const TwoClassGaussianSpec& spec);

/// Bayes rule for equal-covariance Gaussian classes:
/// omega_B = Sigma^{-1}(mu_plus - mu_minus), beta_B = -(mu_plus+mu_minus)'omega_B / 2.
LinearModel bayes_rule(const Eigen::VectorXd& mu_plus, const Eigen::VectorXd& mu_minus,
                       const Eigen::MatrixXd& sigma);

/// Mean profile (d, d-1, ..., 1) rescaled to the requested Euclidean norm.
Eigen::VectorXd linear_profile_mean(int d, double norm);

/// Mean profile (k, k-1, ..., 1, 0, ..., 0) with k = ceil(d/4); callers scale
/// it to a target Mahalanobis distance.
Eigen::VectorXd tapered_mean(int d);

/// Three blocks of sizes (floor(d/2), floor(d/4), remainder).
std::vector<int> half_quarter_blocks(int d);

}  // namespace flame
