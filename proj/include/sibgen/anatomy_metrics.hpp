// Per-anatomy morphology (volume and principal axis lengths per chamber) and
// the 12-check topology validator.
#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sibgen/core.hpp"

namespace sibgen {

/// LV, RV, LA, RA x (volume ml, major axis mm, minor axis mm), in that order.
using MorphVector = Eigen::Matrix<double, 12, 1>;

inline constexpr std::array<TissueId, 4> kMorphTissues = {TissueId::LV, TissueId::RV,
                                                          TissueId::LA, TissueId::RA};
std::array<std::string, 12> morph_feature_names();

/// Axis length from a second-moment eigenvalue: the full axis of a solid
/// ellipsoid with that variance, sqrt(20 * lambda).
double axis_length_from_variance(double lambda);

MorphVector morph_features(const LabelMap& map);
inline double lv_volume(const MorphVector& m) { return m[0]; }
inline double rv_volume(const MorphVector& m) { return m[3]; }
inline double la_volume(const MorphVector& m) { return m[6]; }
inline double ra_volume(const MorphVector& m) { return m[9]; }

enum class Connectivity { Six = 6, TwentySix = 26 };

/// Connected components of one tissue; each component is a sorted list of
/// voxel indices, components ordered by their smallest index.
std::vector<std::vector<std::size_t>> tissue_components(const LabelMap& map, TissueId t,
                                                        Connectivity conn);

/// Symmetric 7x7 table: adjacent(a, b) iff some voxel of a and some voxel of b
/// are neighbours under `conn`.
using AdjacencyTable = std::array<std::array<bool, kTissueCount>, kTissueCount>;
AdjacencyTable tissue_adjacency(const LabelMap& map, Connectivity conn);

struct TopologyOptions {
  Connectivity components = Connectivity::TwentySix;
  Connectivity adjacency = Connectivity::Six;
};

inline constexpr int kTopologyChecks = 12;

struct TopologyReport {
  /// Myo, LV, RV, LA, RA count checks; LV&Ao, LV&Myo, LV&LA, RV&Myo, RV&RA
  /// required; LV&RV, LA&RA forbidden.
  std::array<bool, kTopologyChecks> passed{};
  /// Component sizes per counted tissue (Myo, LV, RV, LA, RA), descending.
  std::array<std::vector<std::size_t>, 5> component_sizes{};

  [[nodiscard]] int violation_count() const;
  [[nodiscard]] bool valid() const { return violation_count() == 0; }
};

std::array<std::string, kTopologyChecks> topology_check_names();

TopologyReport check_topology(const LabelMap& map, const TopologyOptions& opts = {});

struct ViolationRate {
  double per_check_percent = 0.0;  // failed checks / (12 * maps) * 100
  double per_map_percent = 0.0;    // maps with >= 1 failure / maps * 100
  std::array<int, kTopologyChecks> failures_per_check{};
};

ViolationRate cohort_violation_rate(const std::vector<TopologyReport>& reports);
ViolationRate cohort_violation_rate(const Cohort& cohort, const TopologyOptions& opts = {});

}  // namespace sibgen
