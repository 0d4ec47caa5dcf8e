#include "sibgen/editing.hpp"

#include <algorithm>
#include <cmath>

namespace sibgen {

int perturb_start_index(double psi, int steps) {
  if (!(psi > 0.0 && psi <= 1.0)) throw std::invalid_argument("psi must be in (0, 1]");
  if (steps < 2) throw std::invalid_argument("schedule needs at least 2 steps");
  const auto i = static_cast<int>(std::lround((1.0 - psi) * steps));
  return std::clamp(i, 0, steps - 1);
}

void EditMaskSpec::validate() const {
  if (preserve.count(TissueId::Background)) {
    throw std::invalid_argument("mask preserve set must not contain Background");
  }
  if (dilation_rounds < 0) throw std::invalid_argument("dilation_rounds must be >= 0");
}

EditMaskSpec edit_mask_spec(const std::set<TissueId>& edit, int dilation_rounds) {
  EditMaskSpec spec;
  spec.dilation_rounds = dilation_rounds;
  for (int t = 1; t < kTissueCount; ++t) {
    const auto id = static_cast<TissueId>(t);
    if (id == TissueId::Myo || edit.count(id)) continue;
    spec.preserve.insert(id);
  }
  return spec;
}

LatentMask dilate6(const LatentMask& m) {
  LatentMask out = m;
  const Dims3& d = m.dims;
  constexpr int kOff[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        if (!m.values[d.index(x, y, z)]) continue;
        for (const auto& o : kOff) {
          const int xx = x + o[0], yy = y + o[1], zz = z + o[2];
          if (d.contains(xx, yy, zz)) out.values[d.index(xx, yy, zz)] = 1;
        }
      }
  return out;
}

LatentMask build_mask(const LabelMap& seed, const EditMaskSpec& spec, int factor) {
  spec.validate();
  const Dims3 ld = latent_dims(seed.dims(), factor);
  LatentMask mask(ld);
  const Dims3& d = seed.dims();
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        if (spec.preserve.count(seed.at(x, y, z))) {
          mask.values[ld.index(x / factor, y / factor, z / factor)] = 1;
        }
      }
  for (int r = 0; r < spec.dilation_rounds; ++r) mask = dilate6(mask);
  return mask;
}

LabelMap perturb_edit(const LabelMap& seed, const PerturbSpec& spec, const Denoiser<double>& denoiser,
                      const NoiseSchedule& schedule, const Codec& codec, RngStream& rng,
                      SolverOrder order) {
  const Latent z = codec.encode(seed);
  return codec.decode(perturb_latent(z, spec, denoiser, schedule, rng, order));
}

LabelMap local_edit(const LabelMap& seed, const LatentMask& mask, const Denoiser<double>& denoiser,
                    const NoiseSchedule& schedule, const Codec& codec, RngStream& rng,
                    SolverOrder order) {
  const Latent z = codec.encode(seed);
  return codec.decode(local_edit_latent(z, mask, denoiser, schedule, rng, order));
}

}  // namespace sibgen
