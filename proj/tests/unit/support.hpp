// Hand-rolled generators shared by the unit tests.
#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "sibgen/core.hpp"

namespace sibgen::testing {

inline Dims3 random_dims(std::mt19937_64& g, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return {d(g), d(g), d(g)};
}

/// Uniform labels over `labels` tissue ids (0 .. labels - 1).
inline LabelMap random_map(std::mt19937_64& g, Dims3 dims, int labels = kTissueCount,
                           double voxel_size = 1.0) {
  std::uniform_int_distribution<int> d(0, labels - 1);
  std::vector<std::uint8_t> v(dims.size());
  for (auto& x : v) x = static_cast<std::uint8_t>(d(g));
  return LabelMap(dims, voxel_size, std::move(v));
}

/// Sparse blobs: each voxel foreground with probability `fill`, labels from `pool`.
inline LabelMap sparse_map(std::mt19937_64& g, Dims3 dims, double fill,
                           const std::vector<TissueId>& pool) {
  std::bernoulli_distribution on(fill);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  LabelMap m(dims, 1.0);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (on(g)) m.set(i, pool[pick(g)]);
  }
  return m;
}

inline Eigen::MatrixXd random_points(std::mt19937_64& g, Eigen::Index n, Eigen::Index dim,
                                     double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::MatrixXd m(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = nd(g);
  return m;
}

}  // namespace sibgen::testing
