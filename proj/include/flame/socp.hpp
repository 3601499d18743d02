#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace flame::socp {

/// The FLAME norm-ball program in conic form.
///
/// Variables: intercept beta (free), direction cone (w; omega) in S_{r+1},
/// one (rho_i, sigma_i, tau_i) in S_3 per sample, and nonnegative slacks
/// xi_i, eta_i, phi_i. Constraints:
///   y_i (x_i'omega + beta) + xi_i - rho_i - sigma_i = 0
///   rho_i - sigma_i + C xi_i + eta_i - phi_i        = theta sqrt(C)
///   tau_i = 1,  w = 1
/// Objective: minimize sum_i phi_i.
///
/// When d > n the features are rotated onto an orthonormal basis of their
/// row span first; the optimal direction always lies in that span, and
/// back_map returns it to the original coordinates.
struct Problem {
    Eigen::MatrixXd features;  // n x r, reduced coordinates
    Eigen::VectorXd labels;    // n, +1/-1
    double C = 1.0;
    double theta = 0.0;
    Eigen::MatrixXd back_map;  // d x r when reduced, empty otherwise
    Eigen::Index original_dim = 0;

    Eigen::Index sample_count() const { return features.rows(); }
    Eigen::Index reduced_dim() const { return features.cols(); }
};

struct Solution {
    Eigen::VectorXd omega;  // original d coordinates
    double beta = 0.0;
    double w = 0.0;

    // Cone variables, one entry per sample.
    Eigen::VectorXd rho, sigma, tau_cone, xi, eta, phi;

    // Duals, normalized by the embedding scale.
    Eigen::VectorXd dual_y;
    double norm_ball_multiplier = 0.0;  // dual of the ||omega|| <= 1 cone

    double objective = 0.0;  // sum of per-sample FLAME losses
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
    bool converged = false;
};

Problem build_problem(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                      double C, double theta);

/// KKT strategy: Dense factors the full reduced system, LowRank factors the
/// per-sample blocks and treats the feature coupling as a low-rank update.
/// Auto picks by problem size.
enum class SolvePath { Auto, Dense, LowRank };

/// Primal-dual path-following solve of the homogeneous self-dual embedding.
Solution solve(const Problem& problem, double tolerance, int max_iterations,
               SolvePath path = SolvePath::Auto);

}  // namespace flame::socp
