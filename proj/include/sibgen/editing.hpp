// Seed editing. Perturbational: noise the encoded seed to an intermediate
// level and rerun the tail of the schedule. Localized: sample from scratch
// while pinning masked cells to the equivalently noised seed.
#pragma once

#include <set>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "sibgen/codec.hpp"
#include "sibgen/core.hpp"
#include "sibgen/diffusion.hpp"

namespace sibgen {

struct PerturbSpec {
  double psi = 1.0;  // sampling ratio in (0, 1]
  void validate() const {
    if (!(psi > 0.0 && psi <= 1.0)) throw std::invalid_argument("psi must be in (0, 1]");
  }
};

/// Schedule index the edit starts from: round((1 - psi) * N), clamped to
/// [0, N - 1].
int perturb_start_index(double psi, int steps);

struct EditMaskSpec {
  std::set<TissueId> preserve;
  int dilation_rounds = 2;
  void validate() const;
};

/// Mask spec that preserves every foreground tissue except `edit` and Myo.
EditMaskSpec edit_mask_spec(const std::set<TissueId>& edit, int dilation_rounds = 2);

/// One round of 6-connected binary dilation.
LatentMask dilate6(const LatentMask& m);

/// Preserve-tissue voxels, block-any downsampled by `factor`, then dilated.
LatentMask build_mask(const LabelMap& seed, const EditMaskSpec& spec, int factor);
inline LatentMask build_mask(const LabelMap& seed, const EditMaskSpec& spec, const Codec& codec) {
  return build_mask(seed, spec, codec.downsample_factor());
}

/// Salt of the child stream that supplies per-step replacement noise.
inline constexpr std::uint64_t kReplacementNoiseSalt = 0x5eed'0f'10ca1ULL;

template <typename Scalar>
LatentT<Scalar> perturb_latent(const LatentT<Scalar>& z_seed, const PerturbSpec& spec,
                               const Denoiser<Scalar>& denoiser, const NoiseSchedule& schedule,
                               RngStream& rng, SolverOrder order = SolverOrder::Heun) {
  spec.validate();
  const int i = perturb_start_index(spec.psi, schedule.steps);
  const auto tail = schedule.from(i);
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector z = z_seed.values +
             static_cast<Scalar>(tail.front()) * standard_normal<Scalar>(z_seed.values.size(), rng);
  z = integrate(denoiser, tail, std::move(z), order);
  return LatentT<Scalar>(z_seed.channels, z_seed.dims,
                         denoiser.denoise(z, static_cast<Scalar>(tail.back())));
}

template <typename Scalar>
LatentT<Scalar> local_edit_latent(const LatentT<Scalar>& z_seed, const LatentMask& mask,
                                  const Denoiser<Scalar>& denoiser, const NoiseSchedule& schedule,
                                  RngStream& rng, SolverOrder order = SolverOrder::Heun) {
  if (!(mask.dims == z_seed.dims)) throw std::invalid_argument("local_edit: mask dims mismatch");
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto keep = mask.broadcast(z_seed.channels);
  const Eigen::Index dim = z_seed.values.size();

  Vector z = static_cast<Scalar>(schedule.sigmas.front()) * standard_normal<Scalar>(dim, rng);
  RngStream fresh = rng.derive(kReplacementNoiseSalt);
  const bool any = keep.any();
  StepHook<Scalar> replace;
  if (any) {
    replace = [&](Vector& state, double sigma_next, int) {
      const Vector noised =
          z_seed.values + static_cast<Scalar>(sigma_next) * standard_normal<Scalar>(dim, fresh);
      state = keep.select(noised, state);
    };
  }
  z = integrate(denoiser, std::span<const double>(schedule.sigmas), std::move(z), order, replace);
  Vector out = denoiser.denoise(z, static_cast<Scalar>(schedule.sigmas.back()));
  if (any) out = keep.select(z_seed.values, out);
  return LatentT<Scalar>(z_seed.channels, z_seed.dims, std::move(out));
}

LabelMap perturb_edit(const LabelMap& seed, const PerturbSpec& spec, const Denoiser<double>& denoiser,
                      const NoiseSchedule& schedule, const Codec& codec, RngStream& rng,
                      SolverOrder order = SolverOrder::Heun);

LabelMap local_edit(const LabelMap& seed, const LatentMask& mask, const Denoiser<double>& denoiser,
                    const NoiseSchedule& schedule, const Codec& codec, RngStream& rng,
                    SolverOrder order = SolverOrder::Heun);

}  // namespace sibgen
