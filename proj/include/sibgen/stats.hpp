// Small statistics toolkit used by the pipelines and tests.
#pragma once

#include <vector>

namespace sibgen::stats {

double mean(const std::vector<double>& v);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(const std::vector<double>& v);
double standard_error(const std::vector<double>& v);

/// Type-7 (linear interpolation) quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);

/// Fraction of values <= x.
double empirical_cdf(const std::vector<double>& v, double x);

double normal_cdf(double x);

/// P(X >= k) and P(X <= k) for X ~ Binomial(n, p).
double binomial_upper_tail(int k, int n, double p);
double binomial_lower_tail(int k, int n, double p);

/// Two-sided pooled two-proportion z-test p-value.
double two_proportion_p_value(int k1, int n1, int k2, int n2);

/// Least-squares non-increasing fit (pool adjacent violators).
std::vector<double> isotonic_decreasing(const std::vector<double>& y);

}  // namespace sibgen::stats
