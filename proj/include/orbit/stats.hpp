#pragma once

#include <functional>
#include <vector>

namespace orbit::stats {

double mean(const std::vector<double>& v);

// Unbiased (n-1) sample variance.
double variance(const std::vector<double>& v);

// Linear-interpolation empirical quantile (the common "type 7" rule):
// index q*(n-1) interpolated between neighbors. q in [0,1].
double quantile(std::vector<double> values, double q);

// Same, for values that are already sorted ascending.
double quantile_sorted(const std::vector<double>& sorted, double q);

// Two-sided Kolmogorov-Smirnov statistic sup_x |F_n(x) - F(x)| against a
// reference CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

// KS statistic against the uniform law on [lo, hi].
double ks_statistic_uniform(std::vector<double> sample, double lo, double hi);

// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

// CDF of the chi-square law with dof degrees of freedom.
double chi_square_cdf(double x, double dof);

double normal_cdf(double x);

}  // namespace orbit::stats
