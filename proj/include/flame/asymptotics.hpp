#pragma once

#include "flame/types.hpp"

namespace flame {

/// Population minimizer of the conditional FLAME risk
/// R(f) = p L(f) + (1-p) L(-f).
/// Away from p = 1/2 the minimizer is the point
///   sign(p - 1/2) * min( sqrt(max(p,1-p)/min(p,1-p)), 1/theta ) / sqrt(C),
/// the second term being the zero-branch kink that caps the stationary
/// point when theta > 0. At p = 1/2 every f in [-1/sqrt(C), 1/sqrt(C)]
/// minimizes the risk and the full interval is returned. In all cases
/// sign(f*) = sign(p - 1/2): the Fisher-consistency property.
struct FisherMinimizer {
    bool is_interval = false;
    double value = 0.0;  // point case
    double lo = 0.0;     // interval case
    double hi = 0.0;
};

FisherMinimizer fisher_minimizer(double p, double C, double theta = 0.0);

/// Summary statistics for the imbalanced-limit DWD intercept bound
/// beta_hat < -sqrt(gamma m / C) - mean_plus_margin.
struct ImbalanceSummary {
    int n_plus = 1;
    int n_minus = 1;
    double C = 1.0;
    double gamma = 0.0;             // half-space mass floor of the majority law
    double mean_plus_margin = 0.0;  // xbar_plus' omega
};

/// The bound itself; useful when composing reports.
double dwd_intercept_bound(const ImbalanceSummary& summary);

/// True iff beta_hat satisfies the divergence bound.
bool dwd_intercept_bound_holds(const ImbalanceSummary& summary, double beta_hat);

/// Fraction of majority samples with zero loss under an SVM-like fit
/// (theta = 1): functional margin at least 1/sqrt(C), equivalently
/// 1 + x' (sqrt(C) omega) + sqrt(C) beta <= 0 in hinge coordinates.
/// The imbalanced limit puts this at 1 - 1/m.
double svm_support_fraction(const LinearModel& model, const LabeledDataset& majority_data);

enum class HdlssInterval { DwdLike, Intermediate, SvmLike };

/// Classification of theta against the d-asymptotic regime boundaries
///   (1 + sqrt(1/m)) / (nu sqrt(dC))  and  2 / (nu sqrt(dC)),
/// with nu^2 = mu^2 + sigma^2/n_+ + tau^2/n_-, plus the sure-classification
/// predicates for fresh positive- and negative-class points.
struct HdlssRegime {
    HdlssInterval interval = HdlssInterval::DwdLike;
    double lower_boundary = 0.0;
    double upper_boundary = 0.0;
    double nu = 0.0;
    double T = 0.0;  // meaningful in the intermediate interval only
    bool positive_condition = false;
    bool negative_condition = false;
};

HdlssRegime hdlss_regime(double theta, double C, int d, double mu2, double sigma2,
                         double tau2, int n_plus, int n_minus);

/// Distances of the class simplices to the limiting separating hyperplane,
/// constrained by a + b = nu sqrt(d). DWD-like: a/b = sqrt(1/m);
/// intermediate: b = 1/(theta sqrt(C)); SVM-like: a = b.
struct SimplexGeometry {
    double a = 0.0;  // positive-class distance
    double b = 0.0;  // negative-class distance
};

SimplexGeometry simplex_geometry(double theta, double C, int d, double nu, double m);

}  // namespace flame
