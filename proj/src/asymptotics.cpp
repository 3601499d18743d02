#include "flame/asymptotics.hpp"

#include "flame/solver.hpp"

#include <cmath>

namespace flame {

FisherMinimizer fisher_minimizer(double p, double C, double theta) {
    if (!std::isfinite(p) || p <= 0.0 || p >= 1.0) {
        throw std::invalid_argument("fisher_minimizer: p must lie strictly inside (0, 1)");
    }
    if (!std::isfinite(C) || C <= 0.0) {
        throw std::invalid_argument("fisher_minimizer: C must be positive");
    }
    if (!std::isfinite(theta) || theta < 0.0 || theta > 1.0) {
        throw std::invalid_argument("fisher_minimizer: theta must lie in [0, 1]");
    }
    const double root_c = std::sqrt(C);
    FisherMinimizer out;
    if (p == 0.5) {
        out.is_interval = true;
        out.lo = -1.0 / root_c;
        out.hi = 1.0 / root_c;
        return out;
    }
    const double odds = std::max(p, 1.0 - p) / std::min(p, 1.0 - p);
    double magnitude = std::sqrt(odds);
    if (theta > 0.0) {
        // Past the zero-branch kink the risk grows again, so the stationary
        // point saturates there.
        magnitude = std::min(magnitude, 1.0 / theta);
    }
    out.value = (p > 0.5 ? 1.0 : -1.0) * magnitude / root_c;
    return out;
}

double dwd_intercept_bound(const ImbalanceSummary& summary) {
    if (summary.n_plus < 1 || summary.n_minus < 1) {
        throw std::invalid_argument("dwd_intercept_bound: class sizes must be positive");
    }
    if (summary.gamma < 0.0 || summary.gamma >= 1.0) {
        throw std::invalid_argument("dwd_intercept_bound: gamma must lie in [0, 1)");
    }
    if (summary.C <= 0.0) {
        throw std::invalid_argument("dwd_intercept_bound: C must be positive");
    }
    const double m = static_cast<double>(summary.n_minus) / static_cast<double>(summary.n_plus);
    return -std::sqrt(summary.gamma * m / summary.C) - summary.mean_plus_margin;
}

bool dwd_intercept_bound_holds(const ImbalanceSummary& summary, double beta_hat) {
    return beta_hat < dwd_intercept_bound(summary);
}

double svm_support_fraction(const LinearModel& model, const LabeledDataset& majority_data) {
    if (majority_data.dim() != model.direction.size()) {
        throw std::invalid_argument("svm_support_fraction: dimension mismatch");
    }
    const double C = model.config.loss_scale.value_or(1.0);
    const double threshold = 1.0 / std::sqrt(C);
    Eigen::Index zero_loss = 0;
    Eigen::Index majority = 0;
    for (Eigen::Index i = 0; i < majority_data.size(); ++i) {
        if (majority_data.labels()[i] != -1.0) continue;
        ++majority;
        const double margin =
            -(majority_data.features().row(i).dot(model.direction) + model.intercept);
        if (margin >= threshold - 1e-9) ++zero_loss;
    }
    if (majority == 0) {
        throw std::invalid_argument("svm_support_fraction: no majority-class samples");
    }
    return static_cast<double>(zero_loss) / static_cast<double>(majority);
}

HdlssRegime hdlss_regime(double theta, double C, int d, double mu2, double sigma2,
                         double tau2, int n_plus, int n_minus) {
    if (mu2 <= 0.0 || sigma2 <= 0.0 || tau2 <= 0.0 || C <= 0.0 || d < 1) {
        throw std::invalid_argument("hdlss_regime: parameters must be positive");
    }
    if (n_plus < 1 || n_minus < n_plus) {
        throw std::invalid_argument("hdlss_regime: need 1 <= n_plus <= n_minus");
    }
    if (!std::isfinite(theta) || theta < 0.0 || theta > 1.0) {
        throw std::invalid_argument("hdlss_regime: theta must lie in [0, 1]");
    }
    const double np = static_cast<double>(n_plus);
    const double nm = static_cast<double>(n_minus);
    const double m = nm / np;

    HdlssRegime out;
    const double nu2 = mu2 + sigma2 / np + tau2 / nm;
    out.nu = std::sqrt(nu2);
    const double scale = out.nu * std::sqrt(static_cast<double>(d) * C);
    out.lower_boundary = (1.0 + std::sqrt(1.0 / m)) / scale;
    out.upper_boundary = 2.0 / scale;

    if (theta < out.lower_boundary) {
        out.interval = HdlssInterval::DwdLike;
    } else if (theta < out.upper_boundary) {
        out.interval = HdlssInterval::Intermediate;
    } else {
        out.interval = HdlssInterval::SvmLike;
    }

    double threshold = 0.0;
    switch (out.interval) {
        case HdlssInterval::DwdLike:
            threshold = std::sqrt(m) * sigma2 / np - tau2 / nm;
            break;
        case HdlssInterval::Intermediate: {
            const double dc = static_cast<double>(d) * C;
            const double half = 1.0 / (2.0 * theta * std::sqrt(dc));
            const double root = std::sqrt(1.0 / (4.0 * theta * theta * dc) + sigma2 / np);
            out.T = (half + root) * (half + root) - sigma2 / np;
            threshold = out.T - tau2 / nm;
            break;
        }
        case HdlssInterval::SvmLike:
            threshold = sigma2 / np - tau2 / nm;
            break;
    }
    out.positive_condition = mu2 > threshold;
    out.negative_condition = threshold > 0.0;
    return out;
}

SimplexGeometry simplex_geometry(double theta, double C, int d, double nu, double m) {
    if (nu <= 0.0 || C <= 0.0 || d < 1 || m < 1.0) {
        throw std::invalid_argument("simplex_geometry: parameters must be positive with m >= 1");
    }
    if (!std::isfinite(theta) || theta < 0.0 || theta > 1.0) {
        throw std::invalid_argument("simplex_geometry: theta must lie in [0, 1]");
    }
    const double span = nu * std::sqrt(static_cast<double>(d));
    const double scale = nu * std::sqrt(static_cast<double>(d) * C);
    const double lower = (1.0 + std::sqrt(1.0 / m)) / scale;
    const double upper = 2.0 / scale;

    SimplexGeometry out;
    if (theta < lower) {
        const double ratio = std::sqrt(1.0 / m);
        out.a = ratio / (1.0 + ratio) * span;
        out.b = span - out.a;
    } else if (theta < upper) {
        out.b = 1.0 / (theta * std::sqrt(C));
        out.a = span - out.b;
    } else {
        out.a = 0.5 * span;
        out.b = out.a;
    }
    return out;
}

}  // namespace flame
