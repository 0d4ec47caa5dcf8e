// Label map <-> latent codec. The pooled-simplex codec block-averages the
// one-hot view (encode) and trilinearly upsamples + argmaxes (decode).
#pragma once

#include <cmath>
#include <vector>

#include "sibgen/core.hpp"

namespace sibgen {

struct CodecConfig {
  int downsample_factor = 2;
  int channels = kTissueCount;
  double voxel_size_mm = 1.4;
  /// decode rounds cell values to multiples of 1 / (snap * factor^3) before
  /// upsampling; 0 disables. Encoded values lie on this lattice, so small
  /// perturbations of an encoding decode to the same map.
  int snap = 8;
};

Dims3 latent_dims(Dims3 full, int factor);

template <typename Scalar = double>
LatentT<Scalar> encode(const LabelMap& map, const CodecConfig& cfg);

template <typename Scalar>
LabelMap decode(const LatentT<Scalar>& z, const CodecConfig& cfg);

/// Trilinear upsample of every channel by `factor`, cell-centre aligned
/// with edge clamping. Exposed for heatmap and test use.
template <typename Scalar>
LatentT<Scalar> upsample_trilinear(const LatentT<Scalar>& z, int factor);

/// Codec seam: editing and pipelines only see this interface.
class Codec {
 public:
  virtual ~Codec() = default;
  [[nodiscard]] virtual Latent encode(const LabelMap& map) const = 0;
  [[nodiscard]] virtual LabelMap decode(const Latent& z) const = 0;
  [[nodiscard]] virtual Dims3 latent_dims(Dims3 full) const = 0;
  [[nodiscard]] virtual int channels() const = 0;
  [[nodiscard]] virtual int downsample_factor() const = 0;
};

class PooledSimplexCodec final : public Codec {
 public:
  explicit PooledSimplexCodec(CodecConfig cfg);

  [[nodiscard]] Latent encode(const LabelMap& map) const override;
  [[nodiscard]] LabelMap decode(const Latent& z) const override;
  [[nodiscard]] Dims3 latent_dims(Dims3 full) const override;
  [[nodiscard]] int channels() const override { return cfg_.channels; }
  [[nodiscard]] int downsample_factor() const override { return cfg_.downsample_factor; }
  [[nodiscard]] const CodecConfig& config() const { return cfg_; }

 private:
  CodecConfig cfg_;
};

/// Dice overlap of one tissue between two maps; 1 when absent in both.
double dice(const LabelMap& a, const LabelMap& b, TissueId t);

// ---------------------------------------------------------------------------

template <typename Scalar>
LatentT<Scalar> encode(const LabelMap& map, const CodecConfig& cfg) {
  const int f = cfg.downsample_factor;
  const Dims3 ld = latent_dims(map.dims(), f);
  LatentT<Scalar> z(kTissueCount, ld);
  const auto cells = z.cells();
  const Dims3& d = map.dims();
  for (int zz = 0; zz < d.nz; ++zz) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const auto cell = static_cast<Eigen::Index>(ld.index(x / f, y / f, zz / f));
        z.values[index_of(map.at(x, y, zz)) * cells + cell] += Scalar(1);
      }
    }
  }
  z.values /= static_cast<Scalar>(f * f * f);
  return z;
}

namespace detail {
struct AxisTaps {
  std::vector<int> lo, hi;
  std::vector<double> w;  // weight of hi
};
AxisTaps axis_taps(int full, int coarse, int factor);
}  // namespace detail

template <typename Scalar>
LatentT<Scalar> upsample_trilinear(const LatentT<Scalar>& z, int factor) {
  const Dims3 fd{z.dims.nx * factor, z.dims.ny * factor, z.dims.nz * factor};
  LatentT<Scalar> out(z.channels, fd, z.sigma_tag);
  const auto tx = detail::axis_taps(fd.nx, z.dims.nx, factor);
  const auto ty = detail::axis_taps(fd.ny, z.dims.ny, factor);
  const auto tz = detail::axis_taps(fd.nz, z.dims.nz, factor);
  const auto in_cells = z.cells();
  const auto out_cells = out.cells();
  for (int c = 0; c < z.channels; ++c) {
    const Scalar* src = z.values.data() + c * in_cells;
    Scalar* dst = out.values.data() + c * out_cells;
    for (int k = 0; k < fd.nz; ++k) {
      const double wz = tz.w[k];
      for (int j = 0; j < fd.ny; ++j) {
        const double wy = ty.w[j];
        for (int i = 0; i < fd.nx; ++i) {
          const double wx = tx.w[i];
          auto v = [&](int a, int b, int cc) {
            return static_cast<double>(src[z.dims.index(a, b, cc)]);
          };
          const double c00 = v(tx.lo[i], ty.lo[j], tz.lo[k]) * (1 - wx) + v(tx.hi[i], ty.lo[j], tz.lo[k]) * wx;
          const double c10 = v(tx.lo[i], ty.hi[j], tz.lo[k]) * (1 - wx) + v(tx.hi[i], ty.hi[j], tz.lo[k]) * wx;
          const double c01 = v(tx.lo[i], ty.lo[j], tz.hi[k]) * (1 - wx) + v(tx.hi[i], ty.lo[j], tz.hi[k]) * wx;
          const double c11 = v(tx.lo[i], ty.hi[j], tz.hi[k]) * (1 - wx) + v(tx.hi[i], ty.hi[j], tz.hi[k]) * wx;
          const double c0 = c00 * (1 - wy) + c10 * wy;
          const double c1 = c01 * (1 - wy) + c11 * wy;
          dst[fd.index(i, j, k)] = static_cast<Scalar>(c0 * (1 - wz) + c1 * wz);
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
LabelMap decode(const LatentT<Scalar>& z, const CodecConfig& cfg) {
  if (z.channels != kTissueCount) {
    throw std::invalid_argument("decode expects a 7-channel latent");
  }
  const int f = cfg.downsample_factor;
  if (cfg.snap <= 0) {
    return f == 1 ? argmax(z, cfg.voxel_size_mm) : argmax(upsample_trilinear(z, f), cfg.voxel_size_mm);
  }
  LatentT<Scalar> q = z;
  const double steps = static_cast<double>(cfg.snap) * f * f * f;
  for (Eigen::Index i = 0; i < q.values.size(); ++i) {
    q.values[i] = static_cast<Scalar>(std::round(static_cast<double>(q.values[i]) * steps) / steps);
  }
  if (f == 1) return argmax(q, cfg.voxel_size_mm);
  return argmax(upsample_trilinear(q, f), cfg.voxel_size_mm);
}

}  // namespace sibgen
