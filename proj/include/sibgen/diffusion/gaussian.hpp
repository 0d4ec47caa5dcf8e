// Exact denoiser for a low-rank Gaussian fitted to a dataset (probabilistic
// PCA): N(mu, U diag(lambda) U^T + s^2 (I - U U^T)).
#pragma once

#include <algorithm>
#include <stdexcept>

#include <Eigen/Dense>

#include "sibgen/diffusion/denoiser.hpp"

namespace sibgen {

template <typename Scalar>
struct LowRankGaussian {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector mean;
  Matrix basis;            // dim x r, orthonormal columns
  Eigen::VectorXd lambda;  // r principal variances, descending
  double residual_std = 0.0;

  [[nodiscard]] Eigen::Index dim() const { return mean.size(); }
  [[nodiscard]] Eigen::Index rank() const { return basis.cols(); }
};

/// Fits mean and principal axes of the columns of `data` (sample covariance,
/// n - 1). Keeps at most `max_rank` axes (0 = all) with variance above
/// `min_variance`.
template <typename Scalar>
LowRankGaussian<Scalar> fit_low_rank_gaussian(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& data, int max_rank = 0,
    double residual_std = 0.0, double min_variance = 1e-10) {
  const Eigen::Index m = data.cols();
  if (m < 2) throw std::invalid_argument("low-rank Gaussian needs at least two samples");
  if (residual_std < 0) throw std::invalid_argument("residual_std must be >= 0");
  const Eigen::MatrixXd x = data.template cast<double>();
  const Eigen::VectorXd mu = x.rowwise().mean();
  const Eigen::MatrixXd c = x.colwise() - mu;
  // Eigen-decompose the m x m Gram matrix instead of the dim x dim covariance.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.transpose() * c);
  if (es.info() != Eigen::Success) throw std::runtime_error("low-rank Gaussian: eigensolver failed");
  const double denom = static_cast<double>(m - 1);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = m - 1; k >= 0; --k) {
    if (es.eigenvalues()[k] / denom <= min_variance) break;
    keep.push_back(k);
    if (max_rank > 0 && static_cast<int>(keep.size()) == max_rank) break;
  }
  LowRankGaussian<Scalar> g;
  g.mean = mu.cast<Scalar>();
  g.residual_std = residual_std;
  g.lambda.resize(static_cast<Eigen::Index>(keep.size()));
  Eigen::MatrixXd u(x.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const double ev = es.eigenvalues()[keep[j]];
    const auto jj = static_cast<Eigen::Index>(j);
    u.col(jj) = c * es.eigenvectors().col(keep[j]) / std::sqrt(ev);
    g.lambda[jj] = ev / denom;
  }
  g.basis = u.cast<Scalar>();
  return g;
}

/// Posterior mean: mu + U diag(l / (l + s^2)) U^T r + s0^2 / (s0^2 + s^2) (r - U U^T r),
/// with r = z - mu.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> low_rank_gaussian_denoise(
    const Eigen::MatrixBase<Derived>& z, double sigma, const LowRankGaussian<Scalar>& g) {
  if (sigma < 0) throw std::invalid_argument("gaussian denoise: sigma must be >= 0");
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Vector r = z - g.mean;
  const Vector coef = g.basis.transpose() * r;
  const double s2 = sigma * sigma;
  const double res2 = g.residual_std * g.residual_std;
  Vector shrunk(coef.size());
  for (Eigen::Index k = 0; k < coef.size(); ++k) {
    shrunk[k] = static_cast<Scalar>(g.lambda[k] / (g.lambda[k] + s2)) * coef[k];
  }
  Vector out = g.mean + g.basis * shrunk;
  const double keep_res = (res2 + s2) > 0 ? res2 / (res2 + s2) : 1.0;
  if (keep_res > 0) out += static_cast<Scalar>(keep_res) * (r - g.basis * coef);
  return out;
}

template <typename Scalar>
class LowRankGaussianDenoiser final : public Denoiser<Scalar> {
 public:
  using typename Denoiser<Scalar>::Vector;
  explicit LowRankGaussianDenoiser(LowRankGaussian<Scalar> g) : g_(std::move(g)) {}
  [[nodiscard]] Vector denoise(const Vector& z, Scalar sigma) const override {
    return low_rank_gaussian_denoise(z, static_cast<double>(sigma), g_);
  }
  [[nodiscard]] const LowRankGaussian<Scalar>& model() const { return g_; }

 private:
  LowRankGaussian<Scalar> g_;
};

}  // namespace sibgen
