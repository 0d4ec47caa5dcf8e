// Isotropic Gaussian mixture data model with its exact posterior-mean
// denoiser and analytic score. Responsibilities are computed in log space.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "sibgen/diffusion/denoiser.hpp"

namespace sibgen {

template <typename Scalar>
struct GaussianMixture {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix means;    // dim x K, one component mean per column
  Vector weights;  // K, positive, sums to 1
  Vector stds;     // K, isotropic standard deviation s_k >= 0

  [[nodiscard]] Eigen::Index dim() const { return means.rows(); }
  [[nodiscard]] Eigen::Index components() const { return means.cols(); }

  void validate() const {
    if (means.cols() == 0 || means.rows() == 0) {
      throw std::invalid_argument("mixture needs at least one component");
    }
    if (weights.size() != means.cols() || stds.size() != means.cols()) {
      throw std::invalid_argument("mixture weights/stds size mismatch");
    }
    if ((weights.array() <= 0).any()) throw std::invalid_argument("mixture weights must be positive");
    if ((stds.array() < 0).any()) throw std::invalid_argument("mixture stds must be non-negative");
    const double tol = std::max(
        1e-9, 4.0 * static_cast<double>(means.cols()) * std::numeric_limits<Scalar>::epsilon());
    if (std::abs(static_cast<double>(weights.sum()) - 1.0) > tol) {
      throw std::invalid_argument("mixture weights must sum to 1");
    }
  }
};

namespace detail {

/// log N(z; mu_k, v_k I) + log pi_k for every component, in double.
template <typename Scalar, typename Derived>
Eigen::VectorXd mixture_log_joint(const Eigen::MatrixBase<Derived>& z, double sigma,
                                  const GaussianMixture<Scalar>& gm) {
  const double d = static_cast<double>(gm.dim());
  Eigen::VectorXd out(gm.components());
  for (Eigen::Index k = 0; k < gm.components(); ++k) {
    const double dist2 = static_cast<double>((gm.means.col(k) - z).squaredNorm());
    const double s = static_cast<double>(gm.stds[k]);
    const double v = s * s + sigma * sigma;
    out[k] = std::log(static_cast<double>(gm.weights[k])) -
             0.5 * d * std::log(2.0 * std::numbers::pi * v) - dist2 / (2.0 * v);
  }
  return out;
}

inline double log_sum_exp(const Eigen::VectorXd& a) {
  const double m = a.maxCoeff();
  return m + std::log((a.array() - m).exp().sum());
}

}  // namespace detail

/// Posterior responsibilities gamma_k(z_sigma) at noise level sigma > 0.
template <typename Scalar, typename Derived>
Eigen::VectorXd gm_responsibilities(const Eigen::MatrixBase<Derived>& z, double sigma,
                                    const GaussianMixture<Scalar>& gm) {
  const Eigen::VectorXd lj = detail::mixture_log_joint(z, sigma, gm);
  return (lj.array() - detail::log_sum_exp(lj)).exp().matrix();
}

/// log p(z; sigma) of the mixture convolved with N(0, sigma^2 I).
template <typename Scalar, typename Derived>
double gm_log_density(const Eigen::MatrixBase<Derived>& z, double sigma,
                      const GaussianMixture<Scalar>& gm) {
  return detail::log_sum_exp(detail::mixture_log_joint(z, sigma, gm));
}

/// grad_z log p(z; sigma) = sum_k gamma_k (mu_k - z) / (s_k^2 + sigma^2).
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gm_score(const Eigen::MatrixBase<Derived>& z,
                                                  double sigma,
                                                  const GaussianMixture<Scalar>& gm) {
  const Eigen::VectorXd gamma = gm_responsibilities(z, sigma, gm);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(gm.dim());
  const Eigen::VectorXd zd = z.template cast<double>();
  for (Eigen::Index k = 0; k < gm.components(); ++k) {
    if (gamma[k] == 0.0) continue;
    const double s = static_cast<double>(gm.stds[k]);
    acc += gamma[k] / (s * s + sigma * sigma) *
           (gm.means.col(k).template cast<double>() - zd);
  }
  return acc.cast<Scalar>();
}

/// Exact posterior mean E[z | z_sigma] under the mixture.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gm_denoise(const Eigen::MatrixBase<Derived>& z,
                                                    double sigma,
                                                    const GaussianMixture<Scalar>& gm) {
  if (sigma < 0) throw std::invalid_argument("gm_denoise: sigma must be >= 0");
  if (sigma == 0) return z;
  const Eigen::VectorXd gamma = gm_responsibilities(z, sigma, gm);
  const double s2 = sigma * sigma;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(gm.dim());
  const Eigen::VectorXd zd = z.template cast<double>();
  for (Eigen::Index k = 0; k < gm.components(); ++k) {
    if (gamma[k] == 0.0) continue;
    const double sk2 = static_cast<double>(gm.stds[k]) * static_cast<double>(gm.stds[k]);
    const double v = sk2 + s2;
    acc += gamma[k] * ((sk2 / v) * zd + (s2 / v) * gm.means.col(k).template cast<double>());
  }
  return acc.cast<Scalar>();
}

template <typename Scalar>
class MixtureDenoiser final : public Denoiser<Scalar> {
 public:
  using typename Denoiser<Scalar>::Vector;
  explicit MixtureDenoiser(GaussianMixture<Scalar> gm) : gm_(std::move(gm)) { gm_.validate(); }
  [[nodiscard]] Vector denoise(const Vector& z, Scalar sigma) const override {
    return gm_denoise(z, static_cast<double>(sigma), gm_);
  }
  [[nodiscard]] const GaussianMixture<Scalar>& mixture() const { return gm_; }

 private:
  GaussianMixture<Scalar> gm_;
};

/// Kernel-smoothed empirical distribution: one component of std `bandwidth`
/// per data column, equal weights.
template <typename Scalar>
GaussianMixture<Scalar> kde_mixture(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& data,
                                    Scalar bandwidth) {
  const auto m = data.cols();
  if (m == 0) throw std::invalid_argument("kde_mixture: empty dataset");
  GaussianMixture<Scalar> gm;
  gm.means = data;
  gm.weights = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(m, Scalar(1) / static_cast<Scalar>(m));
  gm.stds = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(m, bandwidth);
  return gm;
}

}  // namespace sibgen
