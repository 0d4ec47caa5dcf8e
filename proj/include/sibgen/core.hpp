// Shared domain types: label maps, latents, masks, cohorts and the
// deterministic random-stream contract used by every stochastic operation.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sibgen {

enum class TissueId : std::uint8_t { Background = 0, Ao, Myo, RV, LV, RA, LA };

inline constexpr int kTissueCount = 7;

inline constexpr std::array<std::string_view, kTissueCount> kTissueNames = {
    "Background", "Ao", "Myo", "RV", "LV", "RA", "LA"};

constexpr int index_of(TissueId t) { return static_cast<int>(t); }
std::string_view tissue_name(TissueId t);
/// Throws std::invalid_argument on unknown names (case-sensitive).
TissueId tissue_from_name(std::string_view name);

struct Dims3 {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(nx) * ny * nz;
  }
  [[nodiscard]] bool positive() const { return nx > 0 && ny > 0 && nz > 0; }
  [[nodiscard]] std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) +
                                           static_cast<std::size_t>(ny) * z);
  }
  [[nodiscard]] bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
  }
  friend bool operator==(const Dims3&, const Dims3&) = default;
};

/// Dense 3D tissue labels, one byte per voxel, x-fastest.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(Dims3 dims, double voxel_size_mm,
           TissueId fill = TissueId::Background);
  LabelMap(Dims3 dims, double voxel_size_mm, std::vector<std::uint8_t> labels);

  [[nodiscard]] const Dims3& dims() const { return dims_; }
  [[nodiscard]] double voxel_size() const { return voxel_size_; }
  /// Voxel volume in millilitres.
  [[nodiscard]] double voxel_volume_ml() const {
    return voxel_size_ * voxel_size_ * voxel_size_ * 1e-3;
  }
  [[nodiscard]] std::size_t size() const { return labels_.size(); }

  [[nodiscard]] TissueId at(int x, int y, int z) const {
    return static_cast<TissueId>(labels_[dims_.index(x, y, z)]);
  }
  [[nodiscard]] TissueId operator[](std::size_t i) const {
    return static_cast<TissueId>(labels_[i]);
  }
  void set(int x, int y, int z, TissueId t) {
    labels_[dims_.index(x, y, z)] = static_cast<std::uint8_t>(t);
  }
  void set(std::size_t i, TissueId t) {
    labels_[i] = static_cast<std::uint8_t>(t);
  }

  [[nodiscard]] std::span<const std::uint8_t> raw() const { return labels_; }
  [[nodiscard]] std::size_t count(TissueId t) const;

  friend bool operator==(const LabelMap& a, const LabelMap& b) {
    return a.dims_ == b.dims_ && a.voxel_size_ == b.voxel_size_ &&
           a.labels_ == b.labels_;
  }

 private:
  Dims3 dims_{};
  double voxel_size_ = 1.0;
  std::vector<std::uint8_t> labels_;
};

/// Multi-channel real grid. Values are channel-major: channel c occupies
/// values[c * cells .. (c + 1) * cells), cells in x-fastest order.
/// sigma_tag is the noise level the latent is considered noised at.
template <typename Scalar>
struct LatentT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int channels = 0;
  Dims3 dims{};
  Vector values;
  Scalar sigma_tag = 0;

  LatentT() = default;
  LatentT(int c, Dims3 d, Scalar tag = 0)
      : channels(c), dims(d), values(Vector::Zero(c * static_cast<Eigen::Index>(d.size()))),
        sigma_tag(tag) {
    if (c <= 0 || !d.positive()) {
      throw std::invalid_argument("latent dims must be positive");
    }
  }
  LatentT(int c, Dims3 d, Vector v, Scalar tag = 0)
      : channels(c), dims(d), values(std::move(v)), sigma_tag(tag) {
    if (c <= 0 || !d.positive()) {
      throw std::invalid_argument("latent dims must be positive");
    }
    if (values.size() != c * static_cast<Eigen::Index>(d.size())) {
      throw std::invalid_argument("latent value count does not match dims");
    }
  }

  [[nodiscard]] Eigen::Index cells() const {
    return static_cast<Eigen::Index>(dims.size());
  }
  auto channel(int c) { return values.segment(c * cells(), cells()); }
  auto channel(int c) const { return values.segment(c * cells(), cells()); }
  [[nodiscard]] bool all_finite() const { return values.allFinite(); }

  template <typename Other>
  [[nodiscard]] LatentT<Other> cast() const {
    return LatentT<Other>(channels, dims, values.template cast<Other>(),
                          static_cast<Other>(sigma_tag));
  }
};

using Latent = LatentT<double>;

/// Binary per-cell mask over a latent's spatial grid; 1 = preserve.
struct LatentMask {
  Dims3 dims{};
  std::vector<std::uint8_t> values;

  LatentMask() = default;
  explicit LatentMask(Dims3 d, std::uint8_t fill = 0)
      : dims(d), values(d.size(), fill) {}

  [[nodiscard]] std::size_t count() const;
  /// Boolean array over all channel cells of a latent with `channels` channels.
  [[nodiscard]] Eigen::Array<bool, Eigen::Dynamic, 1> broadcast(int channels) const;
};

/// Per-stream deterministic randomness. The same (master_seed, stream_index)
/// always reproduces the same sequence.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  [[nodiscard]] std::uint64_t master_seed() const { return master_; }
  [[nodiscard]] std::uint64_t stream_index() const { return stream_; }
  /// Seed actually fed to the engine (recorded in provenance).
  [[nodiscard]] std::uint64_t engine_seed() const { return engine_seed_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }

  /// Child stream with an independent sequence, derived from this stream's
  /// identity only (not from its consumed state).
  [[nodiscard]] RngStream derive(std::uint64_t salt) const;

 private:
  std::uint64_t master_;
  std::uint64_t stream_;
  std::uint64_t engine_seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

struct Provenance {
  std::string seed_id;
  std::string method;
  std::map<std::string, double> params;
  std::uint64_t rng_seed = 0;
  std::uint64_t stream_index = 0;
};

class Cohort {
 public:
  void add(LabelMap map, Provenance prov);
  [[nodiscard]] std::size_t size() const { return members_.size(); }
  [[nodiscard]] bool empty() const { return members_.empty(); }
  [[nodiscard]] const std::vector<LabelMap>& members() const { return members_; }
  [[nodiscard]] const std::vector<Provenance>& provenance() const { return provenance_; }
  [[nodiscard]] const LabelMap& operator[](std::size_t i) const { return members_[i]; }

 private:
  std::vector<LabelMap> members_;
  std::vector<Provenance> provenance_;
};

/// One-hot view as a 7-channel latent at full resolution.
template <typename Scalar = double>
LatentT<Scalar> onehot(const LabelMap& map) {
  LatentT<Scalar> out(kTissueCount, map.dims());
  const auto cells = out.cells();
  for (Eigen::Index i = 0; i < cells; ++i) {
    out.values[index_of(map[static_cast<std::size_t>(i)]) * cells + i] = Scalar(1);
  }
  return out;
}

/// Per-voxel argmax over channels; ties go to the lowest TissueId.
template <typename Scalar>
LabelMap argmax(const LatentT<Scalar>& grid, double voxel_size_mm) {
  if (grid.channels != kTissueCount) {
    throw std::invalid_argument("argmax expects 7 channels");
  }
  const auto cells = grid.cells();
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(cells));
  for (Eigen::Index i = 0; i < cells; ++i) {
    int best = 0;
    Scalar best_v = grid.values[i];
    for (int c = 1; c < kTissueCount; ++c) {
      const Scalar v = grid.values[c * cells + i];
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(best);
  }
  return LabelMap(grid.dims, voxel_size_mm, std::move(labels));
}

/// i.i.d. N(0, sigma^2) cells, drawn in storage order from `rng`.
template <typename Scalar = double>
LatentT<Scalar> gaussian_noise(int channels, Dims3 dims, double sigma,
                               RngStream& rng) {
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("noise sigma must be non-negative");
  }
  LatentT<Scalar> out(channels, dims, static_cast<Scalar>(sigma));
  if (sigma == 0.0) return out;
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    out.values[i] = static_cast<Scalar>(sigma * rng.normal());
  }
  return out;
}

/// Standard-normal vector of length n, drawn in order from `rng`.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> standard_normal(Eigen::Index n,
                                                         RngStream& rng) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<Scalar>(rng.normal());
  return v;
}

}  // namespace sibgen
