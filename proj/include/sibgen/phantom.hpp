// Procedural cardiac-like phantoms: ellipsoidal chambers, a myocardial shell
// around the LV and a cylindrical aorta, laid out so every rasterised map in
// the valid envelope passes the 12 topology checks.
//
// Frame: +x points from the RV to the LV, +z from the ventricles to the atria.
// All lengths are millimetres; voxel (i, j, k) has its centre at
// ((i + 0.5) * vs, (j + 0.5) * vs, (k + 0.5) * vs).
#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

#include "sibgen/core.hpp"

namespace sibgen {

struct Ellipsoid {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d semi = Eigen::Vector3d::Ones();

  [[nodiscard]] bool contains(const Eigen::Vector3d& p) const {
    return ((p - center).array() / semi.array()).square().sum() <= 1.0;
  }
  [[nodiscard]] Ellipsoid grown(double t) const {
    return {center, semi.array() + t};
  }
  [[nodiscard]] double volume_ml() const;
};

enum class PhantomMode : int { Dominant = 0, Rare = 1 };

/// Chamber sizes before layout.
struct PhantomShape {
  Eigen::Vector3d lv_semi{7.0, 7.0, 9.1};
  Eigen::Vector3d rv_semi{6.3, 8.4, 9.1};
  Eigen::Vector3d la_semi{4.9, 4.9, 4.2};
  Eigen::Vector3d ra_semi{4.9, 4.9, 4.2};
  double myo_thickness = 3.0;
  double ao_radius = 2.5;
  double ao_length = 12.0;
};

struct PhantomParams {
  Ellipsoid lv, rv, la, ra;
  double myo_thickness = 3.0;
  Eigen::Vector3d ao_base = Eigen::Vector3d::Zero();  // bottom of the aortic axis
  double ao_radius = 2.5;
  double ao_length = 12.0;
  PhantomMode mode = PhantomMode::Dominant;

  [[nodiscard]] bool in_aorta(const Eigen::Vector3d& p) const {
    const double dz = p.z() - ao_base.z();
    if (dz < 0.0 || dz > ao_length) return false;
    const double dx = p.x() - ao_base.x();
    const double dy = p.y() - ao_base.y();
    return dx * dx + dy * dy <= ao_radius * ao_radius;
  }
};

/// Places chambers relative to each other and centres the bounding box on the
/// grid centre shifted by `offset_mm`.
PhantomParams layout(const PhantomShape& shape, Dims3 dims, double voxel_size_mm,
                     const Eigen::Vector3d& offset_mm = Eigen::Vector3d::Zero(),
                     PhantomMode mode = PhantomMode::Dominant);

/// True when the phantom's bounding box keeps `margin` voxels to every face.
bool fits_grid(const PhantomParams& p, Dims3 dims, double voxel_size_mm, int margin = 2);

/// Valid-by-construction envelope: positive sizes, myocardium at least one
/// voxel thick, atria separated by at least 1.5 voxels along x, and a 2-voxel
/// grid margin.
bool within_envelope(const PhantomParams& p, Dims3 dims, double voxel_size_mm);

PhantomParams canonical_params(Dims3 dims, double voxel_size_mm);

struct LogNormalParam {
  double location = 1.0;  // median
  double scale = 0.0;     // standard deviation of the log

  [[nodiscard]] double draw(RngStream& rng) const;
  [[nodiscard]] double mean() const;
};

using LogNormal3 = std::array<LogNormalParam, 3>;

struct PopulationSpec {
  LogNormal3 lv_semi{{{7.0, 0.08}, {7.0, 0.08}, {9.1, 0.08}}};
  LogNormal3 rv_semi{{{6.3, 0.08}, {8.4, 0.08}, {9.1, 0.08}}};
  LogNormal3 la_semi{{{4.9, 0.06}, {4.9, 0.06}, {4.2, 0.06}}};
  LogNormal3 ra_semi{{{4.9, 0.06}, {4.9, 0.06}, {4.2, 0.06}}};
  LogNormalParam myo_thickness{3.0, 0.05};
  LogNormalParam ao_radius{2.5, 0.05};
  LogNormalParam ao_length{12.0, 0.05};
  double jitter_mm = 1.0;  // per-axis translation std
  /// Mixture of the dominant mode and a rare large-RV mode.
  double rare_weight = 0.1;
  Eigen::Vector3d rare_rv_scale{1.25, 1.3, 1.25};
  Dims3 dims{32, 32, 32};
  double voxel_size_mm = 1.4;
  int max_attempts = 1000;

  void validate() const;
  /// Analytic mean RV ellipsoid volume (ml) of one mode, before clipping.
  [[nodiscard]] double mode_rv_volume_mean_ml(PhantomMode mode) const;
};

/// Draws a mode, then every size parameter and the jitter, resampling until
/// the result is inside the valid envelope.
PhantomParams sample_params(const PopulationSpec& spec, RngStream& rng);

LabelMap rasterize(const PhantomParams& params, Dims3 dims, double voxel_size_mm);

/// Named corruptions that trip exactly one topology check each.
enum class Defect {
  SplitLV,      // LV cut into two components by a slab of Myo
  BridgeAtria,  // LA extended along a voxel path until it touches RA
  DetachLA,     // LA voxels touching the LV removed
};

LabelMap inject_defect(const LabelMap& map, Defect defect);

}  // namespace sibgen
