#pragma once

#include <Eigen/Core>

#include <vector>

namespace flame {

/// Spearman rank correlation; average ranks on ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// Standard normal CDF.
double normal_cdf(double z);

/// Least-squares slope of ys against xs.
double regression_slope(const std::vector<double>& xs, const std::vector<double>& ys);

double mean(const std::vector<double>& xs);

/// Standard error of the mean (sample sd / sqrt(n)); 0 for fewer than two values.
double standard_error(const std::vector<double>& xs);

}  // namespace flame
