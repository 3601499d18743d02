#include "flame/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flame {

double mean_within_class_error(const Eigen::VectorXd& predictions,
                               const Eigen::VectorXd& labels) {
    if (predictions.size() != labels.size() || labels.size() == 0) {
        throw std::invalid_argument("mean_within_class_error: length mismatch");
    }
    Eigen::Index n_plus = 0, n_minus = 0, wrong_plus = 0, wrong_minus = 0;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1.0) {
            ++n_plus;
            if (predictions[i] != 1.0) ++wrong_plus;
        } else if (labels[i] == -1.0) {
            ++n_minus;
            if (predictions[i] != -1.0) ++wrong_minus;
        } else {
            throw std::invalid_argument("mean_within_class_error: labels must be +1 or -1");
        }
    }
    if (n_plus == 0 || n_minus == 0) {
        throw std::invalid_argument("mean_within_class_error: both classes must be present");
    }
    return 0.5 * static_cast<double>(wrong_plus) / static_cast<double>(n_plus) +
           0.5 * static_cast<double>(wrong_minus) / static_cast<double>(n_minus);
}

double rank_comp(const Eigen::VectorXd& w, const Eigen::VectorXd& w_ref) {
    if (w.size() != w_ref.size()) {
        throw std::invalid_argument("rank_comp: dimension mismatch");
    }
    const Eigen::Index d = w.size();
    if (d < 2) {
        throw std::invalid_argument("rank_comp: need at least two variables");
    }
    const Eigen::VectorXd a = w.cwiseAbs();
    const Eigen::VectorXd b = w_ref.cwiseAbs();
    Eigen::Index discordant = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            if ((a[i] - a[j]) * (b[i] - b[j]) < 0.0) ++discordant;
        }
    }
    return static_cast<double>(discordant) / (0.5 * static_cast<double>(d) *
                                              static_cast<double>(d - 1));
}

double angle_between_degrees(const Eigen::VectorXd& w, const Eigen::VectorXd& w_ref) {
    if (w.size() != w_ref.size()) {
        throw std::invalid_argument("angle_between_degrees: dimension mismatch");
    }
    const double nw = w.norm();
    const double nr = w_ref.norm();
    if (nw == 0.0 || nr == 0.0) {
        throw std::invalid_argument("angle_between_degrees: zero direction");
    }
    const double cosine = std::clamp(w.dot(w_ref) / (nw * nr), -1.0, 1.0);
    return std::acos(cosine) * 180.0 / 3.14159265358979323846;
}

double intercept_deviation(double beta, double beta_ref) {
    if (!std::isfinite(beta) || !std::isfinite(beta_ref)) {
        throw std::invalid_argument("intercept_deviation: inputs must be finite");
    }
    return std::abs(beta - beta_ref);
}

double dispersion(const DispersionInput& input, SignAlignment alignment) {
    const std::size_t R = input.directions.size();
    if (R < 2) {
        throw std::invalid_argument("dispersion: need at least two replicates");
    }
    const Eigen::Index d = input.directions.front().size();
    Eigen::MatrixXd stacked(static_cast<Eigen::Index>(R), d);
    for (std::size_t r = 0; r < R; ++r) {
        if (input.directions[r].size() != d) {
            throw std::invalid_argument("dispersion: dimensions differ across replicates");
        }
        const double norm = input.directions[r].norm();
        if (norm == 0.0) {
            throw std::invalid_argument("dispersion: zero direction cannot be normalized");
        }
        Eigen::VectorXd unit = input.directions[r] / norm;
        if (alignment == SignAlignment::AlignToFirst && r > 0 &&
            unit.dot(stacked.row(0).transpose()) < 0.0) {
            unit = -unit;
        }
        stacked.row(static_cast<Eigen::Index>(r)) = unit.transpose();
    }
    const Eigen::RowVectorXd mean = stacked.colwise().mean();
    const Eigen::MatrixXd centered = stacked.rowwise() - mean;
    return centered.squaredNorm() / static_cast<double>(R - 1);
}

}  // namespace flame
