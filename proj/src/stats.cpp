#include "sibgen/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sibgen::stats {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double standard_error(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("standard error of empty sample");
  return stddev(v) / std::sqrt(static_cast<double>(v.size()));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double empirical_cdf(const std::vector<double>& v, double x) {
  if (v.empty()) throw std::invalid_argument("cdf of empty sample");
  const auto n = std::count_if(v.begin(), v.end(), [x](double a) { return a <= x; });
  return static_cast<double>(n) / static_cast<double>(v.size());
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

double binomial_log_pmf(int k, int n, double p) {
  if (p <= 0.0) return k == 0 ? 0.0 : -INFINITY;
  if (p >= 1.0) return k == n ? 0.0 : -INFINITY;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(p) + (n - k) * std::log1p(-p);
}

void check_binomial(int k, int n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("invalid binomial parameters");
  (void)k;
}

}  // namespace

double binomial_upper_tail(int k, int n, double p) {
  check_binomial(k, n, p);
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  double s = 0.0;
  for (int j = k; j <= n; ++j) s += std::exp(binomial_log_pmf(j, n, p));
  return std::min(s, 1.0);
}

double binomial_lower_tail(int k, int n, double p) {
  check_binomial(k, n, p);
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  double s = 0.0;
  for (int j = 0; j <= k; ++j) s += std::exp(binomial_log_pmf(j, n, p));
  return std::min(s, 1.0);
}

double two_proportion_p_value(int k1, int n1, int k2, int n2) {
  if (n1 <= 0 || n2 <= 0) throw std::invalid_argument("two-proportion test needs n > 0");
  const double p1 = static_cast<double>(k1) / n1;
  const double p2 = static_cast<double>(k2) / n2;
  const double pooled = static_cast<double>(k1 + k2) / (n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
  if (se == 0.0) return p1 == p2 ? 1.0 : 0.0;
  return 2.0 * normal_cdf(-std::abs(p1 - p2) / se);
}

std::vector<double> isotonic_decreasing(const std::vector<double>& y) {
  struct Block {
    double sum;
    int n;
  };
  std::vector<Block> blocks;
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / a.n >= b.sum / b.n) break;
      const Block merged{a.sum + b.sum, a.n + b.n};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), static_cast<std::size_t>(b.n), b.sum / b.n);
  return out;
}

}  // namespace sibgen::stats
