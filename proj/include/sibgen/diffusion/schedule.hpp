// Descending noise-level schedule and the preconditioning coefficients that
// go with it.
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace sibgen {

struct NoiseSchedule {
  int steps = 0;
  double rho = 3.0;
  double sigma_min = 2e-3;
  double sigma_max = 80.0;
  /// sigmas[0] == sigma_max, sigmas[steps - 1] == sigma_min, strictly decreasing.
  std::vector<double> sigmas;

  [[nodiscard]] std::span<const double> from(int i) const {
    return std::span<const double>(sigmas).subspan(static_cast<std::size_t>(i));
  }
};

/// sigma_i = (smax^(1/rho) + i/(N-1) * (smin^(1/rho) - smax^(1/rho)))^rho,
/// i = 0..N-1, with both endpoints pinned exactly.
inline NoiseSchedule build_schedule(int steps, double rho = 3.0,
                                    double sigma_min = 2e-3,
                                    double sigma_max = 80.0) {
  if (steps < 2) throw std::invalid_argument("schedule needs at least 2 levels");
  if (!(rho > 0.0)) throw std::invalid_argument("schedule rho must be positive");
  if (!(sigma_min > 0.0) || !(sigma_min < sigma_max) || !std::isfinite(sigma_max)) {
    throw std::invalid_argument("schedule requires 0 < sigma_min < sigma_max");
  }
  NoiseSchedule s{steps, rho, sigma_min, sigma_max, {}};
  s.sigmas.resize(static_cast<std::size_t>(steps));
  const double hi = std::pow(sigma_max, 1.0 / rho);
  const double lo = std::pow(sigma_min, 1.0 / rho);
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    s.sigmas[static_cast<std::size_t>(i)] = std::pow(hi + t * (lo - hi), rho);
  }
  s.sigmas.front() = sigma_max;
  s.sigmas.back() = sigma_min;
  for (int i = 1; i < steps; ++i) {
    if (!(s.sigmas[i] < s.sigmas[i - 1])) {
      throw std::invalid_argument("schedule is not strictly decreasing at this resolution");
    }
  }
  return s;
}

// Preconditioning (skip / output / input / noise-conditioning scalings).

template <typename Scalar>
Scalar c_skip(Scalar sigma, Scalar sigma_data) {
  return sigma_data * sigma_data / (sigma * sigma + sigma_data * sigma_data);
}
template <typename Scalar>
Scalar c_out(Scalar sigma, Scalar sigma_data) {
  return sigma * sigma_data / std::sqrt(sigma * sigma + sigma_data * sigma_data);
}
template <typename Scalar>
Scalar c_in(Scalar sigma, Scalar sigma_data) {
  return Scalar(1) / std::sqrt(sigma * sigma + sigma_data * sigma_data);
}
/// Undefined at sigma = 0.
template <typename Scalar>
Scalar c_noise(Scalar sigma) {
  if (!(sigma > 0)) throw std::domain_error("c_noise is undefined for sigma <= 0");
  return std::log(sigma) / Scalar(4);
}
/// Loss weight lambda(sigma) = 1 / c_out(sigma)^2.
template <typename Scalar>
Scalar loss_weight(Scalar sigma, Scalar sigma_data) {
  const Scalar co = c_out(sigma, sigma_data);
  return Scalar(1) / (co * co);
}

template <typename Scalar>
struct Precond {
  Scalar c_skip;
  Scalar c_out;
  Scalar c_in;
  Scalar c_noise;
  Scalar weight;
};

template <typename Scalar>
Precond<Scalar> precond_coeffs(Scalar sigma, Scalar sigma_data) {
  if (!(sigma_data > 0)) throw std::invalid_argument("sigma_data must be positive");
  if (!(sigma > 0)) throw std::domain_error("precond_coeffs requires sigma > 0");
  return {sibgen::c_skip(sigma, sigma_data), sibgen::c_out(sigma, sigma_data),
          sibgen::c_in(sigma, sigma_data), sibgen::c_noise(sigma),
          loss_weight(sigma, sigma_data)};
}

}  // namespace sibgen
