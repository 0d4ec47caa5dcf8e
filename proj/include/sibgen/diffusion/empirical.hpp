// Exact minimiser of the denoising loss when the data distribution is the
// empirical distribution of a finite latent dataset.
#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "sibgen/diffusion/denoiser.hpp"

namespace sibgen {

/// Softmax weights w_i proportional to exp(-|z - z_i|^2 / (2 sigma^2)).
template <typename Scalar, typename Derived>
Eigen::VectorXd empirical_weights(
    const Eigen::MatrixBase<Derived>& z, double sigma,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& data) {
  if (data.cols() == 0) throw std::invalid_argument("empirical_denoise: empty dataset");
  if (!(sigma > 0)) throw std::invalid_argument("empirical_denoise: sigma must be > 0");
  Eigen::VectorXd logits(data.cols());
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    logits[i] = static_cast<double>((data.col(i) - z).squaredNorm());
  }
  logits *= -1.0 / (2.0 * sigma * sigma);
  const double m = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - m).exp().matrix();
  return w / w.sum();
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> empirical_denoise(
    const Eigen::MatrixBase<Derived>& z, double sigma,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& data) {
  const Eigen::VectorXd w = empirical_weights(z, sigma, data);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(data.rows());
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    if (w[i] == 0.0) continue;
    out += static_cast<Scalar>(w[i]) * data.col(i);
  }
  return out;
}

template <typename Scalar>
class EmpiricalDenoiser final : public Denoiser<Scalar> {
 public:
  using typename Denoiser<Scalar>::Vector;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit EmpiricalDenoiser(Matrix data) : data_(std::move(data)) {
    if (data_.cols() == 0) throw std::invalid_argument("empirical_denoise: empty dataset");
  }
  [[nodiscard]] Vector denoise(const Vector& z, Scalar sigma) const override {
    return empirical_denoise(z, static_cast<double>(sigma), data_);
  }
  [[nodiscard]] const Matrix& data() const { return data_; }

 private:
  Matrix data_;
};

}  // namespace sibgen
