// Cohort-vs-cohort comparison: k-NN manifold precision/recall, Frechet
// distance between Gaussian moment fits, and voxel occupancy heatmaps.
#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sibgen/anatomy_metrics.hpp"
#include "sibgen/core.hpp"

namespace sibgen {

/// Rows are members. Normalisation constants belong to a reference cohort.
struct FeatureCloud {
  Eigen::MatrixXd rows;
  [[nodiscard]] Eigen::Index size() const { return rows.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return rows.cols(); }
};

struct FeatureNormalizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd stddev;  // zero-variance dimensions are left unscaled

  static FeatureNormalizer fit(const Eigen::MatrixXd& reference);
  [[nodiscard]] FeatureCloud apply(const Eigen::MatrixXd& raw) const;
};

Eigen::MatrixXd morph_matrix(const std::vector<MorphVector>& features);
Eigen::MatrixXd morph_matrix(const Cohort& cohort);

/// Distance from each row to its k-th nearest other row of the same cloud.
Eigen::VectorXd knn_radii(const FeatureCloud& cloud, int k);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Improved precision/recall: a point is covered by a cloud when it lies
/// within some member's k-NN radius (inclusive).
PrecisionRecall precision_recall(const FeatureCloud& real, const FeatureCloud& synth, int k = 3);

/// Squared Frechet distance between N(mu_a, S_a) and N(mu_b, S_b) fitted to
/// the clouds, with `ridge` added to both covariance diagonals.
double frechet_distance(const FeatureCloud& a, const FeatureCloud& b, double ridge = 1e-6);

/// Same distance from explicit moments.
double frechet_distance(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& cov_a,
                        const Eigen::VectorXd& mu_b, const Eigen::MatrixXd& cov_b);

/// Per-channel voxel-wise mean of one-hot maps.
struct Heatmap {
  Latent occupancy;  // 7 channels at full resolution

  /// 1 - P_background.
  [[nodiscard]] Eigen::VectorXd foreground() const;
};

Heatmap occupancy_heatmap(const Cohort& cohort);
Heatmap occupancy_heatmap(const std::vector<LabelMap>& maps);

struct HeatmapDiff {
  Dims3 dims{};
  Eigen::VectorXd diff;             // foreground(a) - foreground(b)
  std::vector<std::uint8_t> masked;  // 1 where either foreground is 0
  Latent per_channel;               // P_a - P_b per channel, unmasked
};

HeatmapDiff heatmap_diff(const Heatmap& a, const Heatmap& b);

}  // namespace sibgen
