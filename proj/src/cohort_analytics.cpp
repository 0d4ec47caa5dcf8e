#include "sibgen/cohort_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sibgen {

FeatureNormalizer FeatureNormalizer::fit(const Eigen::MatrixXd& reference) {
  if (reference.rows() < 2) throw std::invalid_argument("normaliser needs >= 2 reference rows");
  FeatureNormalizer n;
  n.mean = reference.colwise().mean();
  const Eigen::MatrixXd centred = reference.rowwise() - n.mean;
  n.stddev = (centred.colwise().squaredNorm() / static_cast<double>(reference.rows() - 1))
                 .cwiseSqrt();
  for (Eigen::Index j = 0; j < n.stddev.size(); ++j) {
    if (n.stddev[j] == 0.0) n.stddev[j] = 1.0;
  }
  return n;
}

FeatureCloud FeatureNormalizer::apply(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != mean.size()) throw std::invalid_argument("normaliser: dimension mismatch");
  return {(raw.rowwise() - mean).array().rowwise() / stddev.array()};
}

Eigen::MatrixXd morph_matrix(const std::vector<MorphVector>& features) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(features.size()), 12);
  for (std::size_t i = 0; i < features.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = features[i].transpose();
  }
  return m;
}

Eigen::MatrixXd morph_matrix(const Cohort& cohort) {
  std::vector<MorphVector> f;
  f.reserve(cohort.size());
  for (const auto& m : cohort.members()) f.push_back(morph_features(m));
  return morph_matrix(f);
}

namespace {

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      d(i, j) = (a.row(i) - b.row(j)).norm();
    }
  }
  return d;
}

/// Fraction of `points` rows inside at least one ball (centre row, radius).
double coverage(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centres,
                const Eigen::VectorXd& radii) {
  const Eigen::MatrixXd d = pairwise_distances(points, centres);
  Eigen::Index covered = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    covered += ((d.row(i).transpose().array() <= radii.array()).any()) ? 1 : 0;
  }
  return static_cast<double>(covered) / static_cast<double>(points.rows());
}

}  // namespace

Eigen::VectorXd knn_radii(const FeatureCloud& cloud, int k) {
  if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
  if (cloud.size() <= k) throw std::invalid_argument("knn: cloud must have more than k members");
  const Eigen::MatrixXd d = pairwise_distances(cloud.rows, cloud.rows);
  Eigen::VectorXd r(cloud.size());
  std::vector<double> row;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < cloud.size(); ++j) {
      if (j != i) row.push_back(d(i, j));
    }
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    r[i] = row[static_cast<std::size_t>(k - 1)];
  }
  return r;
}

PrecisionRecall precision_recall(const FeatureCloud& real, const FeatureCloud& synth, int k) {
  if (real.dim() != synth.dim()) throw std::invalid_argument("precision_recall: dim mismatch");
  if (real.size() <= k || synth.size() <= k) {
    throw std::invalid_argument("precision_recall: both clouds need more than k members");
  }
  const Eigen::VectorXd r_real = knn_radii(real, k);
  const Eigen::VectorXd r_synth = knn_radii(synth, k);
  return {coverage(synth.rows, real.rows, r_real), coverage(real.rows, synth.rows, r_synth)};
}

double frechet_distance(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& cov_a,
                        const Eigen::VectorXd& mu_b, const Eigen::MatrixXd& cov_b) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(cov_a);
  if (ea.info() != Eigen::Success || ea.eigenvalues().minCoeff() <= 0.0) {
    throw std::runtime_error("frechet_distance: degenerate covariance");
  }
  const Eigen::MatrixXd sqrt_a = ea.operatorSqrt();
  const Eigen::MatrixXd inner = sqrt_a * cov_b * sqrt_a;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ei(0.5 * (inner + inner.transpose()),
                                                          Eigen::EigenvaluesOnly);
  if (ei.info() != Eigen::Success) throw std::runtime_error("frechet_distance: eigensolver failed");
  const double tr_sqrt = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value =
      (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
  return std::max(value, 0.0);
}

namespace {

std::pair<Eigen::VectorXd, Eigen::MatrixXd> moments(const FeatureCloud& c, double ridge) {
  if (c.size() < c.dim() + 1) {
    throw std::invalid_argument("frechet_distance: cloud needs at least dim + 1 members");
  }
  const Eigen::VectorXd mu = c.rows.colwise().mean().transpose();
  const Eigen::MatrixXd centred = c.rows.rowwise() - mu.transpose();
  Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(c.size() - 1);
  cov.diagonal().array() += ridge;
  return {mu, cov};
}

}  // namespace

double frechet_distance(const FeatureCloud& a, const FeatureCloud& b, double ridge) {
  if (a.dim() != b.dim()) throw std::invalid_argument("frechet_distance: dim mismatch");
  const auto [mu_a, cov_a] = moments(a, ridge);
  const auto [mu_b, cov_b] = moments(b, ridge);
  return frechet_distance(mu_a, cov_a, mu_b, cov_b);
}

Eigen::VectorXd Heatmap::foreground() const {
  return (1.0 - occupancy.channel(0).array()).matrix();
}

Heatmap occupancy_heatmap(const std::vector<LabelMap>& maps) {
  if (maps.empty()) throw std::invalid_argument("occupancy_heatmap: empty cohort");
  Latent acc(kTissueCount, maps.front().dims());
  for (const auto& m : maps) {
    if (!(m.dims() == acc.dims)) throw std::invalid_argument("occupancy_heatmap: dims mismatch");
    acc.values += onehot<double>(m).values;
  }
  acc.values /= static_cast<double>(maps.size());
  return {std::move(acc)};
}

Heatmap occupancy_heatmap(const Cohort& cohort) { return occupancy_heatmap(cohort.members()); }

HeatmapDiff heatmap_diff(const Heatmap& a, const Heatmap& b) {
  if (!(a.occupancy.dims == b.occupancy.dims) || a.occupancy.channels != b.occupancy.channels) {
    throw std::invalid_argument("heatmap_diff: dims mismatch");
  }
  HeatmapDiff out;
  out.dims = a.occupancy.dims;
  const Eigen::VectorXd fa = a.foreground();
  const Eigen::VectorXd fb = b.foreground();
  out.diff = fa - fb;
  out.masked.resize(static_cast<std::size_t>(fa.size()));
  for (Eigen::Index i = 0; i < fa.size(); ++i) {
    out.masked[static_cast<std::size_t>(i)] = (fa[i] == 0.0 || fb[i] == 0.0) ? 1 : 0;
  }
  out.per_channel = Latent(a.occupancy.channels, a.occupancy.dims,
                           a.occupancy.values - b.occupancy.values);
  return out;
}

}  // namespace sibgen
