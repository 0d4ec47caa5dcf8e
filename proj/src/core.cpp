#include "sibgen/core.hpp"

#include <algorithm>

namespace sibgen {

std::string_view tissue_name(TissueId t) { return kTissueNames[index_of(t)]; }

TissueId tissue_from_name(std::string_view name) {
  for (int i = 0; i < kTissueCount; ++i) {
    if (kTissueNames[i] == name) return static_cast<TissueId>(i);
  }
  throw std::invalid_argument("unknown tissue name: " + std::string(name));
}

LabelMap::LabelMap(Dims3 dims, double voxel_size_mm, TissueId fill)
    : dims_(dims), voxel_size_(voxel_size_mm) {
  if (!dims.positive()) throw std::invalid_argument("label map dims must be positive");
  if (!(voxel_size_mm > 0.0)) throw std::invalid_argument("voxel size must be positive");
  labels_.assign(dims.size(), static_cast<std::uint8_t>(fill));
}

LabelMap::LabelMap(Dims3 dims, double voxel_size_mm, std::vector<std::uint8_t> labels)
    : dims_(dims), voxel_size_(voxel_size_mm), labels_(std::move(labels)) {
  if (!dims.positive()) throw std::invalid_argument("label map dims must be positive");
  if (!(voxel_size_mm > 0.0)) throw std::invalid_argument("voxel size must be positive");
  if (labels_.size() != dims.size()) {
    throw std::invalid_argument("label count does not match dims");
  }
  for (auto v : labels_) {
    if (v >= kTissueCount) throw std::invalid_argument("label value out of range");
  }
}

std::size_t LabelMap::count(TissueId t) const {
  const auto v = static_cast<std::uint8_t>(t);
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), v));
}

std::size_t LatentMask::count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                                [](auto v) { return v != 0; }));
}

Eigen::Array<bool, Eigen::Dynamic, 1> LatentMask::broadcast(int channels) const {
  const auto cells = static_cast<Eigen::Index>(values.size());
  Eigen::Array<bool, Eigen::Dynamic, 1> out(channels * cells);
  for (int c = 0; c < channels; ++c) {
    for (Eigen::Index i = 0; i < cells; ++i) {
      out[c * cells + i] = values[static_cast<std::size_t>(i)] != 0;
    }
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_(master_seed),
      stream_(stream_index),
      engine_seed_(splitmix64(splitmix64(master_seed) ^ splitmix64(~stream_index))),
      engine_(engine_seed_) {}

RngStream RngStream::derive(std::uint64_t salt) const {
  return RngStream(splitmix64(master_ ^ splitmix64(salt + 0x5851f42d4c957f2dULL)),
                   stream_);
}

void Cohort::add(LabelMap map, Provenance prov) {
  if (!members_.empty()) {
    const auto& first = members_.front();
    if (!(first.dims() == map.dims()) || first.voxel_size() != map.voxel_size()) {
      throw std::invalid_argument("cohort members must share dims and voxel size");
    }
  }
  members_.push_back(std::move(map));
  provenance_.push_back(std::move(prov));
}

}  // namespace sibgen
