#include "sibgen/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "sibgen/anatomy_metrics.hpp"

namespace sibgen {

double Ellipsoid::volume_ml() const {
  return 4.0 / 3.0 * std::numbers::pi * semi.prod() * 1e-3;
}

namespace {

struct Box {
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity());
  void add(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    lo = lo.cwiseMin(a);
    hi = hi.cwiseMax(b);
  }
  void add(const Ellipsoid& e) { add(e.center - e.semi, e.center + e.semi); }
};

Box bounds(const PhantomParams& p) {
  Box b;
  b.add(p.lv.grown(p.myo_thickness));
  b.add(p.rv);
  b.add(p.la);
  b.add(p.ra);
  const Eigen::Vector3d r(p.ao_radius, p.ao_radius, 0.0);
  b.add(p.ao_base - r, p.ao_base + r + Eigen::Vector3d(0, 0, p.ao_length));
  return b;
}

void translate(PhantomParams& p, const Eigen::Vector3d& t) {
  p.lv.center += t;
  p.rv.center += t;
  p.la.center += t;
  p.ra.center += t;
  p.ao_base += t;
}

Eigen::Vector3d voxel_centre(int x, int y, int z, double vs) {
  return {(x + 0.5) * vs, (y + 0.5) * vs, (z + 0.5) * vs};
}

bool has_six_neighbour(const LabelMap& m, int x, int y, int z, TissueId t) {
  static constexpr int kOff[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                     {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  const Dims3& d = m.dims();
  for (const auto& o : kOff) {
    const int xx = x + o[0], yy = y + o[1], zz = z + o[2];
    if (d.contains(xx, yy, zz) && m.at(xx, yy, zz) == t) return true;
  }
  return false;
}

/// Relabels every voxel of `from` that has a 6-neighbour of `guard` as `to`.
void strip_contact(LabelMap& m, TissueId from, TissueId guard, TissueId to) {
  const Dims3& d = m.dims();
  std::vector<std::size_t> hits;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (m.at(x, y, z) == from && has_six_neighbour(m, x, y, z, guard)) {
          hits.push_back(d.index(x, y, z));
        }
  for (auto i : hits) m.set(i, to);
}

void keep_largest_component(LabelMap& m, TissueId t) {
  auto comps = tissue_components(m, t, Connectivity::TwentySix);
  if (comps.size() <= 1) return;
  std::size_t best = 0;
  for (std::size_t i = 1; i < comps.size(); ++i) {
    if (comps[i].size() > comps[best].size()) best = i;
  }
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (i == best) continue;
    for (auto v : comps[i]) m.set(v, TissueId::Background);
  }
}

}  // namespace

PhantomParams layout(const PhantomShape& s, Dims3 dims, double vs,
                     const Eigen::Vector3d& offset_mm, PhantomMode mode) {
  PhantomParams p;
  p.mode = mode;
  p.myo_thickness = s.myo_thickness;
  p.ao_radius = s.ao_radius;
  p.ao_length = s.ao_length;

  const Eigen::Vector3d& lv = s.lv_semi;
  const Eigen::Vector3d& rv = s.rv_semi;
  p.lv = {Eigen::Vector3d::Zero(), lv};
  // The RV overlaps the outer myocardial surface so that, once clipped, it
  // rests against the septal wall.
  const double septal_overlap = 0.35 * std::min(lv.x(), rv.x());
  const double rv_x = -(lv.x() + s.myo_thickness + rv.x() - septal_overlap);
  p.rv = {Eigen::Vector3d(rv_x, 0.0, 0.0), rv};
  p.la = {Eigen::Vector3d(0.0, 0.35 * lv.y(), lv.z() + 0.4 * s.la_semi.z()), s.la_semi};
  p.ra = {Eigen::Vector3d(rv_x, 0.2 * rv.y(), rv.z() + 0.4 * s.ra_semi.z()), s.ra_semi};
  p.ao_base = Eigen::Vector3d(0.0, -0.4 * lv.y(), 0.5 * lv.z());

  const Box b = bounds(p);
  const Eigen::Vector3d grid_centre =
      0.5 * vs * Eigen::Vector3d(dims.nx, dims.ny, dims.nz);
  translate(p, grid_centre + offset_mm - 0.5 * (b.lo + b.hi));
  return p;
}

bool fits_grid(const PhantomParams& p, Dims3 dims, double vs, int margin) {
  const Box b = bounds(p);
  // Voxel i is touched iff its centre (i + 0.5) * vs lies inside the box.
  const Eigen::Vector3d lo_idx = (b.lo / vs).array() - 0.5;
  const Eigen::Vector3d hi_idx = (b.hi / vs).array() - 0.5;
  const Eigen::Vector3d n(dims.nx, dims.ny, dims.nz);
  for (int a = 0; a < 3; ++a) {
    if (std::ceil(lo_idx[a]) < margin) return false;
    if (std::floor(hi_idx[a]) > n[a] - 1 - margin) return false;
  }
  return true;
}

bool within_envelope(const PhantomParams& p, Dims3 dims, double vs) {
  for (const Ellipsoid* e : {&p.lv, &p.rv, &p.la, &p.ra}) {
    if (!(e->semi.array() > 0.0).all()) return false;
  }
  if (!(p.myo_thickness >= vs) || !(p.ao_radius >= vs) || !(p.ao_length > 0.0)) return false;
  const double atrial_gap =
      (p.la.center.x() - p.la.semi.x()) - (p.ra.center.x() + p.ra.semi.x());
  if (atrial_gap < 1.5 * vs) return false;
  return fits_grid(p, dims, vs, 2);
}

PhantomParams canonical_params(Dims3 dims, double vs) {
  return layout(PhantomShape{}, dims, vs);
}

double LogNormalParam::draw(RngStream& rng) const {
  return location * std::exp(scale * rng.normal());
}

double LogNormalParam::mean() const { return location * std::exp(0.5 * scale * scale); }

void PopulationSpec::validate() const {
  auto check = [](const LogNormalParam& q) {
    if (!(q.location > 0.0) || !(q.scale >= 0.0)) {
      throw std::invalid_argument("population: log-normal location must be > 0, scale >= 0");
    }
  };
  for (const auto* arr : {&lv_semi, &rv_semi, &la_semi, &ra_semi}) {
    for (const auto& q : *arr) check(q);
  }
  check(myo_thickness);
  check(ao_radius);
  check(ao_length);
  if (!(rare_weight >= 0.0 && rare_weight <= 1.0)) {
    throw std::invalid_argument("population: mixing weight must lie in [0, 1]");
  }
  if (!(jitter_mm >= 0.0)) throw std::invalid_argument("population: jitter must be >= 0");
  if (!(rare_rv_scale.array() > 0.0).all()) {
    throw std::invalid_argument("population: rare RV scale must be positive");
  }
  if (!dims.positive() || !(voxel_size_mm > 0.0)) {
    throw std::invalid_argument("population: invalid grid");
  }
  if (max_attempts < 1) throw std::invalid_argument("population: max_attempts must be >= 1");
}

double PopulationSpec::mode_rv_volume_mean_ml(PhantomMode mode) const {
  double prod = 1.0;
  for (int a = 0; a < 3; ++a) {
    prod *= rv_semi[a].mean() * (mode == PhantomMode::Rare ? rare_rv_scale[a] : 1.0);
  }
  return 4.0 / 3.0 * std::numbers::pi * prod * 1e-3;
}

PhantomParams sample_params(const PopulationSpec& spec, RngStream& rng) {
  spec.validate();
  auto draw3 = [&](const LogNormal3& q) {
    return Eigen::Vector3d(q[0].draw(rng), q[1].draw(rng), q[2].draw(rng));
  };
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    const PhantomMode mode =
        rng.uniform() < spec.rare_weight ? PhantomMode::Rare : PhantomMode::Dominant;
    PhantomShape s;
    s.lv_semi = draw3(spec.lv_semi);
    s.rv_semi = draw3(spec.rv_semi);
    if (mode == PhantomMode::Rare) s.rv_semi = s.rv_semi.cwiseProduct(spec.rare_rv_scale);
    s.la_semi = draw3(spec.la_semi);
    s.ra_semi = draw3(spec.ra_semi);
    s.myo_thickness = spec.myo_thickness.draw(rng);
    s.ao_radius = spec.ao_radius.draw(rng);
    s.ao_length = spec.ao_length.draw(rng);
    Eigen::Vector3d offset;
    for (int a = 0; a < 3; ++a) offset[a] = spec.jitter_mm * rng.normal();
    PhantomParams p = layout(s, spec.dims, spec.voxel_size_mm, offset, mode);
    if (within_envelope(p, spec.dims, spec.voxel_size_mm)) return p;
  }
  throw std::runtime_error("sample_params: resampling budget exhausted");
}

LabelMap rasterize(const PhantomParams& p, Dims3 dims, double vs) {
  if (!fits_grid(p, dims, vs, 2)) {
    throw std::out_of_range("rasterize: phantom does not fit the grid with a 2-voxel margin");
  }
  LabelMap m(dims, vs);
  const Ellipsoid shell = p.lv.grown(p.myo_thickness);
  for (int z = 0; z < dims.nz; ++z)
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        const Eigen::Vector3d c = voxel_centre(x, y, z, vs);
        TissueId t = TissueId::Background;
        if (p.lv.contains(c)) t = TissueId::LV;
        else if (p.in_aorta(c)) t = TissueId::Ao;
        else if (p.la.contains(c)) t = TissueId::LA;
        else if (shell.contains(c)) t = TissueId::Myo;
        else if (p.rv.contains(c)) t = TissueId::RV;
        else if (p.ra.contains(c)) t = TissueId::RA;
        if (t != TissueId::Background) m.set(x, y, z, t);
      }
  strip_contact(m, TissueId::RV, TissueId::LV, TissueId::Background);
  strip_contact(m, TissueId::RA, TissueId::LA, TissueId::Background);
  for (auto t : {TissueId::Ao, TissueId::Myo, TissueId::RV, TissueId::LV, TissueId::RA,
                 TissueId::LA}) {
    keep_largest_component(m, t);
  }
  return m;
}

namespace {

LabelMap split_lv(const LabelMap& in) {
  LabelMap m = in;
  const Dims3& d = m.dims();
  int zlo = d.nz, zhi = -1;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (m.at(x, y, z) == TissueId::LV) {
          zlo = std::min(zlo, z);
          zhi = std::max(zhi, z);
        }
  if (zhi - zlo < 2) throw std::invalid_argument("split defect: LV too thin to split");
  const int cut = (zlo + zhi) / 2;
  for (int y = 0; y < d.ny; ++y)
    for (int x = 0; x < d.nx; ++x)
      if (m.at(x, y, cut) == TissueId::LV) m.set(x, y, cut, TissueId::Myo);
  return m;
}

LabelMap bridge_atria(const LabelMap& in) {
  LabelMap m = in;
  const Dims3& d = m.dims();
  std::vector<Eigen::Vector3i> la, ra;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        if (m.at(x, y, z) == TissueId::LA) la.emplace_back(x, y, z);
        if (m.at(x, y, z) == TissueId::RA) ra.emplace_back(x, y, z);
      }
  if (la.empty() || ra.empty()) throw std::invalid_argument("bridge defect: missing atrium");
  Eigen::Vector3i from = la.front(), to = ra.front();
  int best = std::numeric_limits<int>::max();
  for (const auto& a : la)
    for (const auto& b : ra) {
      const int dist = (a - b).cwiseAbs().sum();
      if (dist < best) {
        best = dist;
        from = a;
        to = b;
      }
    }
  // Walk a 6-connected path from the LA voxel towards the RA voxel, painting
  // LA until the path is face-adjacent to RA.
  Eigen::Vector3i cur = from;
  while ((to - cur).cwiseAbs().sum() > 1) {
    for (int a = 0; a < 3; ++a) {
      if (cur[a] != to[a]) {
        cur[a] += to[a] > cur[a] ? 1 : -1;
        break;
      }
    }
    m.set(cur.x(), cur.y(), cur.z(), TissueId::LA);
  }
  return m;
}

LabelMap detach_la(const LabelMap& in) {
  LabelMap m = in;
  strip_contact(m, TissueId::LA, TissueId::LV, TissueId::Background);
  return m;
}

}  // namespace

LabelMap inject_defect(const LabelMap& map, Defect defect) {
  switch (defect) {
    case Defect::SplitLV:
      return split_lv(map);
    case Defect::BridgeAtria:
      return bridge_atria(map);
    case Defect::DetachLA:
      return detach_la(map);
  }
  throw std::invalid_argument("unknown defect");
}

}  // namespace sibgen
