// Monte-Carlo estimate of the weighted denoising loss
// E[lambda(sigma) |D(z + n; sigma) - z|^2].
#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "sibgen/core.hpp"
#include "sibgen/diffusion/denoiser.hpp"
#include "sibgen/diffusion/schedule.hpp"

namespace sibgen {

struct SigmaDistribution {
  enum class Kind { Fixed, LogNormalLogSpace, LogNormalLinearSpace };
  Kind kind = Kind::LogNormalLogSpace;
  /// Fixed: the value. LogNormalLogSpace: ln(sigma) ~ N(ln(mean), stddev^2).
  /// LogNormalLinearSpace: sigma has the given linear mean and stddev.
  double mean = 1.0;
  double stddev = 1.2;

  static SigmaDistribution fixed(double sigma) { return {Kind::Fixed, sigma, 0.0}; }

  double draw(RngStream& rng) const {
    switch (kind) {
      case Kind::Fixed:
        return mean;
      case Kind::LogNormalLogSpace:
        return std::exp(std::log(mean) + stddev * rng.normal());
      case Kind::LogNormalLinearSpace: {
        const double s2 = std::log(1.0 + (stddev * stddev) / (mean * mean));
        const double mu = std::log(mean) - 0.5 * s2;
        return std::exp(mu + std::sqrt(s2) * rng.normal());
      }
    }
    return mean;
  }
};

/// Draw order per sample: data index (uniform), sigma, then the noise vector.
template <typename Scalar>
double loss_eval(const Denoiser<Scalar>& denoiser,
                 const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& dataset,
                 const SigmaDistribution& sigmas, int draws, RngStream& rng,
                 double sigma_data = 0.5) {
  if (dataset.cols() == 0) throw std::invalid_argument("loss_eval: empty dataset");
  if (draws <= 0) throw std::invalid_argument("loss_eval: draws must be positive");
  const auto m = static_cast<std::uint64_t>(dataset.cols());
  double total = 0.0;
  for (int t = 0; t < draws; ++t) {
    const auto idx = static_cast<Eigen::Index>(
        std::min<std::uint64_t>(m - 1, static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(m))));
    const double sigma = sigmas.draw(rng);
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> clean = dataset.col(idx);
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> noisy =
        clean + static_cast<Scalar>(sigma) * standard_normal<Scalar>(dataset.rows(), rng);
    const auto out = denoiser.denoise(noisy, static_cast<Scalar>(sigma));
    total += loss_weight(sigma, sigma_data) *
             static_cast<double>((out - clean).squaredNorm());
  }
  return total / draws;
}

}  // namespace sibgen
