#include "sibgen/codec.hpp"

#include <algorithm>
#include <cmath>

namespace sibgen {

Dims3 latent_dims(Dims3 full, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  if (full.nx % factor || full.ny % factor || full.nz % factor) {
    throw std::invalid_argument("label map dims not divisible by downsample factor");
  }
  return {full.nx / factor, full.ny / factor, full.nz / factor};
}

namespace detail {

AxisTaps axis_taps(int full, int coarse, int factor) {
  AxisTaps t;
  t.lo.resize(full);
  t.hi.resize(full);
  t.w.resize(full);
  for (int i = 0; i < full; ++i) {
    // Voxel centre expressed in coarse cell-centre coordinates.
    double s = (i + 0.5) / factor - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(coarse - 1));
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, coarse - 1);
    t.lo[i] = lo;
    t.hi[i] = hi;
    t.w[i] = s - lo;
  }
  return t;
}

}  // namespace detail

PooledSimplexCodec::PooledSimplexCodec(CodecConfig cfg) : cfg_(cfg) {
  if (cfg_.downsample_factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  if (cfg_.channels != kTissueCount) throw std::invalid_argument("codec channels must be 7");
}

Latent PooledSimplexCodec::encode(const LabelMap& map) const {
  return sibgen::encode<double>(map, cfg_);
}

LabelMap PooledSimplexCodec::decode(const Latent& z) const {
  return sibgen::decode(z, cfg_);
}

Dims3 PooledSimplexCodec::latent_dims(Dims3 full) const {
  return sibgen::latent_dims(full, cfg_.downsample_factor);
}

double dice(const LabelMap& a, const LabelMap& b, TissueId t) {
  if (!(a.dims() == b.dims())) throw std::invalid_argument("dice: dims mismatch");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ia = a[i] == t;
    const bool ib = b[i] == t;
    na += ia;
    nb += ib;
    both += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

}  // namespace sibgen
