// Deterministic reverse-ODE sampler, dz/dsigma = (z - D(z; sigma)) / sigma,
// integrated along a descending noise schedule.
#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

#include "sibgen/core.hpp"
#include "sibgen/diffusion/denoiser.hpp"
#include "sibgen/diffusion/schedule.hpp"

namespace sibgen {

enum class SolverOrder { Euler, Heun };

SolverOrder solver_order_from_name(std::string_view name);
std::string_view solver_order_name(SolverOrder order);

/// Called after every step with the state at `sigma_next`; may modify it.
template <typename Scalar>
using StepHook =
    std::function<void(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z, double sigma_next, int step)>;

/// Integrates from sigmas.front() to sigmas.back(). Heun uses a trapezoidal
/// corrector on every step except the last, which is a plain Euler step.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> integrate(const Denoiser<Scalar>& denoiser,
                                                   std::span<const double> sigmas,
                                                   Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z,
                                                   SolverOrder order,
                                                   const StepHook<Scalar>& hook = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (sigmas.empty()) throw std::invalid_argument("integrate: empty sigma list");
  const std::size_t n = sigmas.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Scalar s = static_cast<Scalar>(sigmas[i]);
    const Scalar sn = static_cast<Scalar>(sigmas[i + 1]);
    const Scalar dt = sn - s;
    const Vector d = (z - denoiser.denoise(z, s)) / s;
    Vector z_euler = z + dt * d;
    if (order == SolverOrder::Heun && i + 2 < n) {
      const Vector d2 = (z_euler - denoiser.denoise(z_euler, sn)) / sn;
      z += (dt * Scalar(0.5)) * (d + d2);
    } else {
      z = std::move(z_euler);
    }
    if (hook) hook(z, sigmas[i + 1], static_cast<int>(i));
  }
  return z;
}

/// Unconditional sample: z ~ sigma_max * N(0, I), integrate the full schedule,
/// return the final denoised estimate D(z; sigma_min).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sample_vector(const Denoiser<Scalar>& denoiser,
                                                       const NoiseSchedule& schedule,
                                                       Eigen::Index dim, RngStream& rng,
                                                       SolverOrder order) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z =
      static_cast<Scalar>(schedule.sigmas.front()) * standard_normal<Scalar>(dim, rng);
  z = integrate(denoiser, std::span<const double>(schedule.sigmas), std::move(z), order);
  return denoiser.denoise(z, static_cast<Scalar>(schedule.sigmas.back()));
}

template <typename Scalar>
LatentT<Scalar> sample(const Denoiser<Scalar>& denoiser, const NoiseSchedule& schedule,
                       int channels, Dims3 dims, RngStream& rng, SolverOrder order) {
  const Eigen::Index dim = channels * static_cast<Eigen::Index>(dims.size());
  return LatentT<Scalar>(channels, dims, sample_vector(denoiser, schedule, dim, rng, order));
}

}  // namespace sibgen
