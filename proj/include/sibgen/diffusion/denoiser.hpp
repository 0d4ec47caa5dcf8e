// Denoiser interface D(z_sigma; sigma) -> clean-data estimate, plus the
// trivial denoisers used as baselines.
#pragma once

#include <functional>
#include <utility>

#include <Eigen/Dense>

namespace sibgen {

template <typename Scalar>
class Denoiser {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  virtual ~Denoiser() = default;
  [[nodiscard]] virtual Vector denoise(const Vector& z_sigma, Scalar sigma) const = 0;
};

template <typename Scalar>
class IdentityDenoiser final : public Denoiser<Scalar> {
 public:
  using typename Denoiser<Scalar>::Vector;
  [[nodiscard]] Vector denoise(const Vector& z, Scalar) const override { return z; }
};

template <typename Scalar>
class ConstantDenoiser final : public Denoiser<Scalar> {
 public:
  using typename Denoiser<Scalar>::Vector;
  explicit ConstantDenoiser(Vector value) : value_(std::move(value)) {}
  [[nodiscard]] Vector denoise(const Vector&, Scalar) const override { return value_; }

 private:
  Vector value_;
};

template <typename Scalar>
class FunctionDenoiser final : public Denoiser<Scalar> {
 public:
  using typename Denoiser<Scalar>::Vector;
  using Fn = std::function<Vector(const Vector&, Scalar)>;
  explicit FunctionDenoiser(Fn fn) : fn_(std::move(fn)) {}
  [[nodiscard]] Vector denoise(const Vector& z, Scalar s) const override { return fn_(z, s); }

 private:
  Fn fn_;
};

}  // namespace sibgen
