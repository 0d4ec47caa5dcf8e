#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "sibgen/anatomy_metrics.hpp"
#include "sibgen/phantom.hpp"
#include "support.hpp"

using namespace sibgen;

namespace {

bool neighbours(const Dims3& d, std::size_t a, std::size_t b, Connectivity conn) {
  auto coord = [&](std::size_t i) {
    const int x = static_cast<int>(i % d.nx);
    const int y = static_cast<int>((i / d.nx) % d.ny);
    const int z = static_cast<int>(i / (static_cast<std::size_t>(d.nx) * d.ny));
    return std::array<int, 3>{x, y, z};
  };
  const auto p = coord(a), q = coord(b);
  int l1 = 0, linf = 0;
  for (int k = 0; k < 3; ++k) {
    const int dd = std::abs(p[k] - q[k]);
    l1 += dd;
    linf = std::max(linf, dd);
  }
  if (a == b) return false;
  return conn == Connectivity::Six ? l1 == 1 : linf == 1;
}

// Label propagation by repeated all-pairs relaxation until nothing changes.
std::vector<std::vector<std::size_t>> brute_components(const LabelMap& m, TissueId t,
                                                       Connectivity conn) {
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] == t) cells.push_back(i);
  std::vector<std::size_t> label(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) label[i] = i;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < cells.size(); ++i)
      for (std::size_t j = 0; j < cells.size(); ++j)
        if (label[j] < label[i] && neighbours(m.dims(), cells[i], cells[j], conn)) {
          label[i] = label[j];
          changed = true;
        }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cells.size(); ++i) groups[label[i]].push_back(cells[i]);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [k, v] : groups) out.push_back(v);  // cells are sorted, so are groups
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

AdjacencyTable brute_adjacency(const LabelMap& m, Connectivity conn) {
  AdjacencyTable t{};
  for (std::size_t a = 0; a < m.size(); ++a)
    for (std::size_t b = 0; b < m.size(); ++b)
      if (m[a] != m[b] && neighbours(m.dims(), a, b, conn)) t[index_of(m[a])][index_of(m[b])] = true;
  return t;
}

LabelMap solid_ellipsoid(Dims3 d, Eigen::Vector3d semi_vox) {
  LabelMap m(d, 1.0);
  const Eigen::Vector3d c(d.nx / 2.0, d.ny / 2.0, d.nz / 2.0);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const Eigen::Vector3d p(x + 0.5, y + 0.5, z + 0.5);
        if (((p - c).array() / semi_vox.array()).square().sum() <= 1.0) m.set(x, y, z, TissueId::LV);
      }
  return m;
}

}  // namespace

TEST_SUITE("anatomy_metrics") {
  TEST_CASE("components and adjacency match the brute-force oracle on random grids") {
    std::mt19937_64 g(21);
    std::uniform_real_distribution<double> fill(0.1, 0.6);
    const std::vector<TissueId> pool{TissueId::LV, TissueId::RV, TissueId::Myo};
    for (int trial = 0; trial < 200; ++trial) {
      const auto d = testing::random_dims(g, 1, 8);
      const auto m = testing::sparse_map(g, d, fill(g), pool);
      for (auto conn : {Connectivity::Six, Connectivity::TwentySix}) {
        for (auto t : pool) CHECK(tissue_components(m, t, conn) == brute_components(m, t, conn));
        CHECK(tissue_adjacency(m, conn) == brute_adjacency(m, conn));
      }
    }
  }

  TEST_CASE("ellipsoid volume and axes within 5 percent") {
    const Eigen::Vector3d shapes[] = {{12, 8, 6}, {6, 6, 6},  {10, 7, 6}, {8, 8, 7},  {14, 9, 6},
                                      {9, 6, 6},  {11, 11, 8}, {7, 6, 6}, {13, 10, 7}, {6.5, 6, 6}};
    for (const auto& s : shapes) {
      const double vs = 1.3;
      LabelMap m = solid_ellipsoid(Dims3{32, 32, 32}, s);
      m = LabelMap(m.dims(), vs, std::vector<std::uint8_t>(m.raw().begin(), m.raw().end()));
      const auto f = morph_features(m);
      const double vol = 4.0 / 3.0 * std::numbers::pi * s.prod() * m.voxel_volume_ml();
      CHECK(std::abs(f[0] - vol) <= 0.05 * vol);
      CHECK(std::abs(f[1] - 2 * s.maxCoeff() * vs) <= 0.05 * 2 * s.maxCoeff() * vs);
      CHECK(std::abs(f[2] - 2 * s.minCoeff() * vs) <= 0.05 * 2 * s.minCoeff() * vs);
    }
  }

  TEST_CASE("degenerate morphology") {
    LabelMap m(Dims3{4, 4, 4}, 2.0);
    auto f = morph_features(m);
    CHECK(f.segment<3>(0).isZero());
    m.set(1, 1, 1, TissueId::LV);
    f = morph_features(m);
    CHECK(f[0] == doctest::Approx(0.008));
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.0);
    CHECK(axis_length_from_variance(1.0) == doctest::Approx(std::sqrt(20.0)));
  }

  TEST_CASE("hand-built valid fixture passes all checks") {
    // RA RV Myo LV LA along x, Ao beside the LV.
    LabelMap m(Dims3{8, 1, 1}, 1.0);
    const TissueId strip[] = {TissueId::RA, TissueId::RV, TissueId::Myo, TissueId::LV,
                              TissueId::LA, TissueId::Background, TissueId::Background, TissueId::Background};
    for (int x = 0; x < 8; ++x) m.set(x, 0, 0, strip[x]);
    LabelMap full(Dims3{8, 2, 1}, 1.0);
    for (int x = 0; x < 8; ++x) full.set(x, 0, 0, strip[x]);
    full.set(3, 1, 0, TissueId::Ao);  // Ao touches LV from +y
    const auto r = check_topology(full);
    CHECK(r.valid());
    const auto bad = check_topology(m);  // no Ao: only the LV&Ao requirement fails
    CHECK(bad.violation_count() == 1);
    CHECK_FALSE(bad.passed[5]);
  }

  TEST_CASE("violation rates") {
    std::vector<TopologyReport> reps(1);
    reps[0].passed.fill(true);
    CHECK(cohort_violation_rate(reps).per_check_percent == 0.0);
    reps[0].passed[0] = reps[0].passed[4] = reps[0].passed[11] = false;
    const auto r = cohort_violation_rate(reps);
    CHECK(r.per_check_percent == doctest::Approx(25.0));
    CHECK(r.per_map_percent == doctest::Approx(100.0));
  }

  TEST_CASE("mixed cohort with injected defects matches the hand count") {
    PopulationSpec spec;
    Cohort c;
    const Defect plan[] = {Defect::SplitLV, Defect::BridgeAtria, Defect::DetachLA, Defect::SplitLV};
    for (int i = 0; i < 10; ++i) {
      RngStream rng(31, static_cast<std::uint64_t>(i));
      auto map = rasterize(sample_params(spec, rng), spec.dims, spec.voxel_size_mm);
      if (i < 4) map = inject_defect(map, plan[i]);
      c.add(std::move(map), Provenance{});
    }
    const auto r = cohort_violation_rate(c);
    CHECK(r.per_map_percent == doctest::Approx(40.0));
    CHECK(r.per_check_percent == doctest::Approx(4.0 / 120.0 * 100.0));
    CHECK(r.failures_per_check[1] == 2);
    CHECK(r.failures_per_check[7] == 1);
    CHECK(r.failures_per_check[11] == 1);
  }
}
