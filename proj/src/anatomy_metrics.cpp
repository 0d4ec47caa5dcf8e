#include "sibgen/anatomy_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sibgen {

namespace {

struct Offset {
  int dx, dy, dz;
};

std::vector<Offset> neighbourhood(Connectivity conn) {
  std::vector<Offset> out;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (conn == Connectivity::Six && manhattan != 1) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

constexpr std::array<TissueId, 5> kCounted = {TissueId::Myo, TissueId::LV, TissueId::RV,
                                              TissueId::LA, TissueId::RA};

struct Pair {
  TissueId a, b;
};
constexpr std::array<Pair, 5> kRequired = {{{TissueId::LV, TissueId::Ao},
                                            {TissueId::LV, TissueId::Myo},
                                            {TissueId::LV, TissueId::LA},
                                            {TissueId::RV, TissueId::Myo},
                                            {TissueId::RV, TissueId::RA}}};
constexpr std::array<Pair, 2> kForbidden = {{{TissueId::LV, TissueId::RV},
                                             {TissueId::LA, TissueId::RA}}};

}  // namespace

std::array<std::string, 12> morph_feature_names() {
  std::array<std::string, 12> names;
  int i = 0;
  for (auto t : kMorphTissues) {
    const std::string n(tissue_name(t));
    names[i++] = n + "_volume_ml";
    names[i++] = n + "_major_mm";
    names[i++] = n + "_minor_mm";
  }
  return names;
}

double axis_length_from_variance(double lambda) {
  return std::sqrt(20.0 * std::max(lambda, 0.0));
}

MorphVector morph_features(const LabelMap& map) {
  MorphVector out = MorphVector::Zero();
  const Dims3& d = map.dims();
  const double vs = map.voxel_size();
  for (std::size_t ti = 0; ti < kMorphTissues.size(); ++ti) {
    const auto t = kMorphTissues[ti];
    std::size_t n = 0;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x)
          if (map.at(x, y, z) == t) {
            ++n;
            sum += Eigen::Vector3d(x, y, z);
          }
    if (n == 0) continue;
    const Eigen::Vector3d mean = sum / static_cast<double>(n);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x)
          if (map.at(x, y, z) == t) {
            const Eigen::Vector3d r = Eigen::Vector3d(x, y, z) - mean;
            cov.noalias() += r * r.transpose();
          }
    cov *= vs * vs / static_cast<double>(n);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov, Eigen::EigenvaluesOnly);
    const Eigen::Vector3d ev = es.eigenvalues();  // ascending
    out[3 * ti + 0] = static_cast<double>(n) * map.voxel_volume_ml();
    out[3 * ti + 1] = axis_length_from_variance(ev[2]);
    out[3 * ti + 2] = axis_length_from_variance(ev[0]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> tissue_components(const LabelMap& map, TissueId t,
                                                        Connectivity conn) {
  const Dims3& d = map.dims();
  const auto nb = neighbourhood(conn);
  std::vector<std::uint8_t> seen(map.size(), 0);
  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < map.size(); ++start) {
    if (seen[start] || map[start] != t) continue;
    std::vector<std::size_t> comp;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      const int x = static_cast<int>(v % d.nx);
      const int y = static_cast<int>((v / d.nx) % d.ny);
      const int z = static_cast<int>(v / (static_cast<std::size_t>(d.nx) * d.ny));
      for (const auto& o : nb) {
        const int xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
        if (!d.contains(xx, yy, zz)) continue;
        const std::size_t w = d.index(xx, yy, zz);
        if (seen[w] || map[w] != t) continue;
        seen[w] = 1;
        stack.push_back(w);
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

AdjacencyTable tissue_adjacency(const LabelMap& map, Connectivity conn) {
  AdjacencyTable adj{};
  const Dims3& d = map.dims();
  // Half of the neighbourhood suffices because the relation is symmetrised.
  std::vector<Offset> half;
  for (const auto& o : neighbourhood(conn)) {
    if (o.dz > 0 || (o.dz == 0 && (o.dy > 0 || (o.dy == 0 && o.dx > 0)))) half.push_back(o);
  }
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const int a = index_of(map.at(x, y, z));
        for (const auto& o : half) {
          const int xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
          if (!d.contains(xx, yy, zz)) continue;
          const int b = index_of(map.at(xx, yy, zz));
          if (a == b) continue;
          adj[a][b] = true;
          adj[b][a] = true;
        }
      }
  return adj;
}

int TopologyReport::violation_count() const {
  return static_cast<int>(std::count(passed.begin(), passed.end(), false));
}

std::array<std::string, kTopologyChecks> topology_check_names() {
  std::array<std::string, kTopologyChecks> names;
  int i = 0;
  for (auto t : kCounted) names[i++] = "count_" + std::string(tissue_name(t));
  for (auto p : kRequired) {
    names[i++] = "adj_" + std::string(tissue_name(p.a)) + "_" + std::string(tissue_name(p.b));
  }
  for (auto p : kForbidden) {
    names[i++] = "sep_" + std::string(tissue_name(p.a)) + "_" + std::string(tissue_name(p.b));
  }
  return names;
}

TopologyReport check_topology(const LabelMap& map, const TopologyOptions& opts) {
  TopologyReport r;
  int i = 0;
  for (std::size_t k = 0; k < kCounted.size(); ++k) {
    const auto comps = tissue_components(map, kCounted[k], opts.components);
    auto& sizes = r.component_sizes[k];
    for (const auto& c : comps) sizes.push_back(c.size());
    std::sort(sizes.rbegin(), sizes.rend());
    r.passed[i++] = comps.size() == 1;
  }
  const auto adj = tissue_adjacency(map, opts.adjacency);
  for (auto p : kRequired) r.passed[i++] = adj[index_of(p.a)][index_of(p.b)];
  for (auto p : kForbidden) r.passed[i++] = !adj[index_of(p.a)][index_of(p.b)];
  return r;
}

ViolationRate cohort_violation_rate(const std::vector<TopologyReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("violation rate of an empty cohort");
  ViolationRate v;
  int failed = 0;
  int maps_failing = 0;
  for (const auto& r : reports) {
    for (int c = 0; c < kTopologyChecks; ++c) {
      if (!r.passed[c]) {
        ++failed;
        ++v.failures_per_check[c];
      }
    }
    maps_failing += r.valid() ? 0 : 1;
  }
  const double n = static_cast<double>(reports.size());
  v.per_check_percent = 100.0 * failed / (kTopologyChecks * n);
  v.per_map_percent = 100.0 * maps_failing / n;
  return v;
}

ViolationRate cohort_violation_rate(const Cohort& cohort, const TopologyOptions& opts) {
  std::vector<TopologyReport> reports;
  reports.reserve(cohort.size());
  for (const auto& m : cohort.members()) reports.push_back(check_topology(m, opts));
  return cohort_violation_rate(reports);
}

}  // namespace sibgen
