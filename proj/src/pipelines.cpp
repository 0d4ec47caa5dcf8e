#include "sibgen/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sibgen/parallel.hpp"
#include "sibgen/stats.hpp"

namespace sibgen {

namespace {

// Stream families. Member i of family `tag` uses RngStream(master, i).derive(tag).
constexpr std::uint64_t kTagReal = kRealCohortTag;
constexpr std::uint64_t kTagUncond = 0x756e636fULL;
constexpr std::uint64_t kTagPsi = 0x70736900ULL;
constexpr std::uint64_t kTagMask = 0x6d61736bULL;
constexpr std::uint64_t kTagAugment = 0x61756700ULL;
constexpr std::uint64_t kTagSteps = 0x73746570ULL;
constexpr std::uint64_t kTagBootstrap = 0x626f6f74ULL;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }
std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return mix(mix(a, b), c); }

constexpr int kLvVol = 0;
constexpr int kRvVol = 3;
constexpr int kFdMinMembers = 13;

bool is_rare(const Provenance& p) {
  const auto it = p.params.find("mode");
  return it != p.params.end() && it->second == static_cast<double>(PhantomMode::Rare);
}

}  // namespace

std::string_view denoiser_kind_name(DenoiserKind k) {
  switch (k) {
    case DenoiserKind::Empirical: return "empirical";
    case DenoiserKind::Kde: return "kde";
    case DenoiserKind::LowRankGaussian: return "gaussian";
  }
  return "?";
}

DenoiserKind denoiser_kind_from_name(std::string_view name) {
  if (name == "empirical") return DenoiserKind::Empirical;
  if (name == "kde") return DenoiserKind::Kde;
  if (name == "gaussian") return DenoiserKind::LowRankGaussian;
  throw std::invalid_argument("unknown denoiser kind: " + std::string(name));
}

void ExperimentConfig::validate() const {
  population.validate();
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw std::invalid_argument(std::string(what) + " must be > 0");
  };
  positive(codec_factor, "codec_factor");
  if (!(latent_scale > 0)) throw std::invalid_argument("latent_scale must be > 0");
  if (population.dims.nx % codec_factor || population.dims.ny % codec_factor ||
      population.dims.nz % codec_factor) {
    throw std::invalid_argument("grid dims must be divisible by codec_factor");
  }
  positive(real_size, "real_size");
  if (unconditional_size < 0 || edit_cohort_size < 0 || mask_cohort_size < 0 || augment_size < 0) {
    throw std::invalid_argument("cohort sizes must be >= 0");
  }
  positive(budget_factor, "budget_factor");
  if (steps < 2) throw std::invalid_argument("steps must be >= 2");
  if (!(rho > 0) || !(sigma_min > 0) || !(sigma_max > sigma_min)) {
    throw std::invalid_argument("invalid noise schedule parameters");
  }
  for (double p : psi_grid) PerturbSpec{p}.validate();
  if (gaussian_rank < 0 || gaussian_residual_std < 0) {
    throw std::invalid_argument("gaussian_rank and gaussian_residual_std must be >= 0");
  }
  if (mask_dilation < 0) throw std::invalid_argument("mask_dilation must be >= 0");
  if (denoiser == DenoiserKind::Kde && !(kde_bandwidth > 0)) {
    throw std::invalid_argument("kde_bandwidth must be > 0");
  }
  if (!(threshold_quantile > 0.0 && threshold_quantile < 1.0)) {
    throw std::invalid_argument("threshold_quantile must be in (0, 1)");
  }
  if (!std::isfinite(threshold_ml)) throw std::invalid_argument("threshold_ml must be finite");
  if (pr_k < 1) throw std::invalid_argument("pr_k must be >= 1");
  if (!(fd_ridge >= 0)) throw std::invalid_argument("fd_ridge must be >= 0");
  for (int s : sensitivity_steps) {
    if (s < 2) throw std::invalid_argument("sensitivity steps must be >= 2");
  }
  for (int n : sensitivity_sizes) positive(n, "sensitivity size");
}

ExperimentConfig ExperimentConfig::preset_named(std::string_view name) {
  ExperimentConfig c;
  if (name == "full") {
    c.preset = "full";
    c.real_size = 300;
    c.unconditional_size = 360;
    c.edit_cohort_size = 60;
    c.mask_cohort_size = 60;
    c.augment_size = 140;
    c.sensitivity_steps = {5, 10, 20, 50, 100, 200};
    c.sensitivity_sizes = {25, 50, 100, 200, 360};
  } else if (name == "desk") {
    c.preset = "desk";
    c.real_size = 100;
    c.unconditional_size = 100;
    c.edit_cohort_size = 30;
    c.mask_cohort_size = 30;
    c.augment_size = 40;
    c.sensitivity_steps = {5, 10, 20, 50};
    c.sensitivity_sizes = {25, 50, 100};
  } else if (name == "acceptance") {
    c.preset = "acceptance";
    c.real_size = 100;
    c.unconditional_size = 300;
    c.edit_cohort_size = 40;
    c.mask_cohort_size = 20;
    c.augment_size = 20;
    c.budget_factor = 40;
    c.sensitivity_steps = {5, 10, 20};
    c.sensitivity_sizes = {20, 40};
  } else {
    throw std::invalid_argument("unknown preset: " + std::string(name));
  }
  return c;
}

std::vector<double> MemberSet::feature(int j) const {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f[j]);
  return out;
}

MemberSet measure(std::vector<LabelMap> maps, std::vector<Provenance> prov, int workers) {
  if (maps.size() != prov.size()) throw std::invalid_argument("measure: provenance count mismatch");
  MemberSet out;
  out.features.resize(maps.size());
  out.topology.resize(maps.size());
  parallel_for(maps.size(), workers, [&](std::size_t i) {
    out.features[i] = morph_features(maps[i]);
    out.topology[i] = check_topology(maps[i]);
  });
  for (std::size_t i = 0; i < maps.size(); ++i) out.cohort.add(std::move(maps[i]), std::move(prov[i]));
  return out;
}

MemberSet phantom_cohort(const PopulationSpec& spec, std::uint64_t master_seed, std::uint64_t tag,
                         int n, const std::string& id_prefix, int workers) {
  const auto count = static_cast<std::size_t>(std::max(n, 0));
  std::vector<LabelMap> maps(count);
  std::vector<Provenance> prov(count);
  parallel_for(count, workers, [&](std::size_t i) {
    RngStream rng = RngStream(master_seed, i).derive(tag);
    const PhantomParams p = sample_params(spec, rng);
    maps[i] = rasterize(p, spec.dims, spec.voxel_size_mm);
    Provenance& pv = prov[i];
    pv.seed_id = id_prefix + "-" + std::to_string(i);
    pv.method = "phantom";
    pv.params["mode"] = static_cast<double>(p.mode);
    pv.rng_seed = rng.engine_seed();
    pv.stream_index = i;
  });
  return measure(std::move(maps), std::move(prov), workers);
}

CohortReport make_report(const std::string& name, const MemberSet& members,
                         const std::string& reference_name, const MemberSet& reference, int k,
                         double ridge) {
  if (members.size() == 0) throw std::invalid_argument("report refused: empty cohort '" + name + "'");
  if (reference.size() < 2) throw std::invalid_argument("report needs a reference of >= 2 members");
  CohortReport r;
  r.name = name;
  r.reference = reference_name;
  r.size = members.size();
  r.violations = cohort_violation_rate(members.topology);

  const Eigen::MatrixXd raw = morph_matrix(members.features);
  const Eigen::MatrixXd ref_raw = morph_matrix(reference.features);
  r.morph_mean = raw.colwise().mean().transpose();
  if (raw.rows() > 1) {
    const Eigen::MatrixXd c = raw.rowwise() - raw.colwise().mean();
    r.morph_std = (c.colwise().squaredNorm() / static_cast<double>(raw.rows() - 1))
                      .cwiseSqrt()
                      .transpose();
  }
  const FeatureNormalizer norm = FeatureNormalizer::fit(ref_raw);
  const FeatureCloud synth = norm.apply(raw);
  const FeatureCloud ref = norm.apply(ref_raw);
  if (synth.size() > k && ref.size() > k) r.pr = precision_recall(ref, synth, k);
  if (synth.size() >= kFdMinMembers && ref.size() >= kFdMinMembers) {
    r.fd = frechet_distance(ref, synth, ridge);
  }
  return r;
}

// ---- Experiment --------------------------------------------------------------

Experiment::Experiment(ExperimentConfig cfg, int workers)
    : cfg_(std::move(cfg)), workers_(std::max(workers, 1)) {
  cfg_.validate();
  real_ = phantom_cohort(cfg_.population, cfg_.master_seed, kTagReal, cfg_.real_size, "real",
                         workers_);
  schedule_ = build_schedule(cfg_.steps, cfg_.rho, cfg_.sigma_min, cfg_.sigma_max);
  codec_ = CodecConfig{cfg_.codec_factor, kTissueCount, cfg_.population.voxel_size_mm};

  const Dims3 ld = latent_dims();
  const Eigen::Index dim = kTissueCount * static_cast<Eigen::Index>(ld.size());
  Eigen::Matrix<PScalar, Eigen::Dynamic, Eigen::Dynamic> data(dim, cfg_.real_size);
  std::vector<LabelMap> decoded(real_.size());
  parallel_for(real_.size(), workers_, [&](std::size_t i) {
    const PLatent z = encode(real_.cohort[i]);
    data.col(static_cast<Eigen::Index>(i)) = z.values;
    decoded[i] = decode(z);
  });
  reference_ = measure(std::move(decoded), real_.cohort.provenance(), workers_);
  switch (cfg_.denoiser) {
    case DenoiserKind::Empirical:
      denoiser_ = std::make_unique<EmpiricalDenoiser<PScalar>>(std::move(data));
      break;
    case DenoiserKind::Kde:
      denoiser_ = std::make_unique<MixtureDenoiser<PScalar>>(
          kde_mixture<PScalar>(data, static_cast<PScalar>(cfg_.kde_bandwidth)));
      break;
    case DenoiserKind::LowRankGaussian:
      denoiser_ = std::make_unique<LowRankGaussianDenoiser<PScalar>>(fit_low_rank_gaussian<PScalar>(
          data, cfg_.gaussian_rank, cfg_.gaussian_residual_std));
      break;
  }
  normalizer_ = FeatureNormalizer::fit(morph_matrix(reference_.features));
}

Dims3 Experiment::latent_dims() const {
  return sibgen::latent_dims(cfg_.population.dims, cfg_.codec_factor);
}

PLatent Experiment::encode(const LabelMap& map) const {
  PLatent z = sibgen::encode<PScalar>(map, codec_);
  z.values *= static_cast<PScalar>(cfg_.latent_scale);
  return z;
}

LabelMap Experiment::decode(const PLatent& z) const {
  PLatent unscaled = z;
  unscaled.values /= static_cast<PScalar>(cfg_.latent_scale);
  return sibgen::decode(unscaled, codec_);
}

double Experiment::rv_threshold() const {
  if (cfg_.threshold_ml >= 0) return cfg_.threshold_ml;
  return stats::quantile(reference_.feature(kRvVol), cfg_.threshold_quantile);
}

double Experiment::dominant_mean(int j) const {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < reference_.size(); ++i) {
    if (is_rare(reference_.cohort.provenance()[i])) continue;
    sum += reference_.features[i][j];
    ++n;
  }
  if (n == 0) throw std::runtime_error("reference cohort has no dominant-mode members");
  return sum / n;
}

RngStream Experiment::stream(std::uint64_t tag, std::uint64_t index) const {
  return RngStream(cfg_.master_seed, index).derive(tag);
}

CohortReport Experiment::report(const std::string& name, const MemberSet& members) const {
  return make_report(name, members, "real", reference_, cfg_.pr_k, cfg_.fd_ridge);
}

// ---- unconditional -------------------------------------------------------------

namespace {

MemberSet generate_unconditional(const Experiment& exp, int count, const NoiseSchedule& schedule,
                                 std::uint64_t tag, const std::string& id_prefix) {
  const auto n = static_cast<std::size_t>(std::max(count, 0));
  std::vector<LabelMap> maps(n);
  std::vector<Provenance> prov(n);
  const Dims3 ld = exp.latent_dims();
  parallel_for(n, exp.workers(), [&](std::size_t i) {
    RngStream rng = exp.stream(tag, i);
    const PLatent z =
        sample(exp.denoiser(), schedule, kTissueCount, ld, rng, exp.config().solver);
    maps[i] = exp.decode(z);
    prov[i] = Provenance{id_prefix + "-" + std::to_string(i), "unconditional",
                         {{"steps", static_cast<double>(schedule.steps)}}, rng.engine_seed(), i};
  });
  return measure(std::move(maps), std::move(prov), exp.workers());
}

/// Large-RV cut: reference RV quantile at 1 - rare_weight, so the
/// reference share above it matches the mixture weight.
double rare_cut(const Experiment& exp) {
  const auto& ref = exp.reference();
  std::vector<double> rv(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) rv[i] = ref.features[i][kRvVol];
  return stats::quantile(rv, 1.0 - exp.config().population.rare_weight);
}

}  // namespace

UnconditionalResult run_unconditional(const Experiment& exp, int count, int steps) {
  if (count < 0) throw std::invalid_argument("count must be >= 0");
  const auto& cfg = exp.config();
  const NoiseSchedule schedule =
      steps > 0 ? build_schedule(steps, cfg.rho, cfg.sigma_min, cfg.sigma_max) : exp.schedule();
  UnconditionalResult res;
  res.members = generate_unconditional(exp, count, schedule,
                                       steps > 0 ? mix(kTagUncond, steps) : kTagUncond, "uncond");
  res.rare_rv_cut = rare_cut(exp);
  if (count == 0) return res;
  res.report = exp.report("unconditional", res.members);
  for (const auto& f : res.members.features) res.rare_count += f[kRvVol] >= res.rare_rv_cut ? 1 : 0;
  res.rare_share = static_cast<double>(res.rare_count) / count;
  res.p_over = stats::binomial_upper_tail(res.rare_count, count, cfg.population.rare_weight);
  return res;
}

// ---- seeds ---------------------------------------------------------------------

namespace {

struct Band {
  double lo, hi, centre;
};

Band band(const SeedBands& b, char which) {
  switch (which) {
    case 'u': return {b.up, 1.0, 0.5 * (b.up + 1.0)};
    case 'd': return {0.0, b.down, 0.5 * b.down};
    default: return {b.mid_lo, b.mid_hi, 0.5 * (b.mid_lo + b.mid_hi)};
  }
}

Seed make_seed(const Experiment& exp, const std::string& name, std::size_t index) {
  Seed s;
  s.name = name;
  s.real_index = index;
  s.map = exp.real().cohort[index];
  s.decoded = exp.reference().cohort[index];
  s.roundtrip_features = exp.reference().features[index];
  return s;
}

}  // namespace

Seed seed_from_map(const Experiment& exp, const std::string& name, const LabelMap& map,
                   std::size_t stream_key) {
  if (map.dims() != exp.config().population.dims) {
    throw std::invalid_argument("seed map dims do not match the experiment grid");
  }
  Seed s;
  s.name = name;
  s.real_index = stream_key;
  s.map = map;
  s.decoded = exp.decode(exp.encode(map));
  s.roundtrip_features = morph_features(s.decoded);
  return s;
}

std::vector<Seed> select_archetype_seeds(const Experiment& exp) {
  const auto& real = exp.reference();
  const auto lv_ref = real.feature(kLvVol);
  const auto rv_ref = real.feature(kRvVol);
  struct Spec {
    const char* name;
    char lv, rv;
  };
  constexpr Spec kSpecs[] = {{"LupRup", 'u', 'u'}, {"LdownRdown", 'd', 'd'},
                             {"LupRmid", 'u', 'm'}, {"LmidRmid", 'm', 'm'}};
  std::vector<Seed> out;
  for (const auto& sp : kSpecs) {
    const Band bl = band(exp.config().bands, sp.lv);
    const Band br = band(exp.config().bands, sp.rv);
    std::size_t best = 0;
    std::pair<int, double> best_key{2, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < real.size(); ++i) {
      const double rl = stats::empirical_cdf(lv_ref, real.features[i][kLvVol]);
      const double rr = stats::empirical_cdf(rv_ref, real.features[i][kRvVol]);
      const bool inside = rl >= bl.lo && rl <= bl.hi && rr >= br.lo && rr <= br.hi;
      const std::pair<int, double> key{inside ? 0 : 1, std::hypot(rl - bl.centre, rr - br.centre)};
      if (key < best_key) {
        best_key = key;
        best = i;
      }
    }
    out.push_back(make_seed(exp, sp.name, best));
  }
  return out;
}

Seed select_rare_seed(const Experiment& exp) {
  const auto& real = exp.reference();
  const auto rv_ref = real.feature(kRvVol);
  const double target = exp.config().bands.rare_rank;
  std::optional<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (!is_rare(real.cohort.provenance()[i])) continue;
    const double d = std::abs(stats::empirical_cdf(rv_ref, real.features[i][kRvVol]) - target);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (!best) throw std::runtime_error("reference cohort contains no rare-mode member");
  return make_seed(exp, "rare", *best);
}

// ---- psi sweep -----------------------------------------------------------------

PsiSweepResult run_psi_sweep(const Experiment& exp, const std::vector<Seed>& seeds,
                             const std::vector<double>& psi_grid, int cohort_size) {
  if (cohort_size <= 0) throw std::invalid_argument("psi sweep cohort size must be > 0");
  PsiSweepResult res;
  res.seeds = seeds;
  for (const auto& seed : seeds) {
    const PLatent z_seed = exp.encode(seed.map);
    const Heatmap seed_heat = occupancy_heatmap(std::vector<LabelMap>{seed.decoded});
    for (std::size_t p = 0; p < psi_grid.size(); ++p) {
      const double psi = psi_grid[p];
      const PerturbSpec spec{psi};
      spec.validate();
      const std::uint64_t tag = mix(kTagPsi, seed.real_index, std::llround(psi * 1e6));
      const auto n = static_cast<std::size_t>(cohort_size);
      std::vector<LabelMap> maps(n);
      std::vector<Provenance> prov(n);
      parallel_for(n, exp.workers(), [&](std::size_t i) {
        RngStream rng = exp.stream(tag, i);
        maps[i] = exp.decode(
            perturb_latent(z_seed, spec, exp.denoiser(), exp.schedule(), rng, exp.config().solver));
        prov[i] = Provenance{seed.name, "perturb", {{"psi", psi}}, rng.engine_seed(), i};
      });
      PsiCohort c;
      c.seed = seed.name;
      c.psi = psi;
      c.members = measure(std::move(maps), std::move(prov), exp.workers());
      c.report = exp.report(seed.name + "_psi" + std::to_string(psi), c.members);
      std::vector<double> dev;
      for (const auto& f : c.members.features) {
        dev.push_back(std::abs(f[kLvVol] - seed.roundtrip_features[kLvVol]));
      }
      c.lv_abs_dev_mean = stats::mean(dev);
      c.lv_abs_dev_se = stats::standard_error(dev);
      c.rv_mean = stats::mean(c.members.feature(kRvVol));
      c.heatmap = heatmap_diff(seed_heat, occupancy_heatmap(c.members.cohort));
      res.cohorts.push_back(std::move(c));
    }
  }
  return res;
}

// ---- mask sweep ----------------------------------------------------------------

std::vector<NamedMask> default_masks() {
  return {{"editLV", {TissueId::LV}}, {"editRV", {TissueId::RV}}};
}

MaskSweepResult run_mask_sweep(const Experiment& exp, const std::vector<Seed>& seeds,
                               const std::vector<NamedMask>& masks, int cohort_size) {
  if (cohort_size <= 0) throw std::invalid_argument("mask sweep cohort size must be > 0");
  MaskSweepResult res;
  res.seeds = seeds;
  for (const auto& seed : seeds) {
    const PLatent z_seed = exp.encode(seed.map);
    const Heatmap seed_heat = occupancy_heatmap(std::vector<LabelMap>{seed.decoded});
    for (std::size_t m = 0; m < masks.size(); ++m) {
      const LatentMask mask =
          build_mask(seed.map, edit_mask_spec(masks[m].edit, exp.config().mask_dilation),
                     exp.config().codec_factor);
      const std::uint64_t tag = mix(kTagMask, seed.real_index, m);
      const auto n = static_cast<std::size_t>(cohort_size);
      std::vector<LabelMap> maps(n);
      std::vector<Provenance> prov(n);
      parallel_for(n, exp.workers(), [&](std::size_t i) {
        RngStream rng = exp.stream(tag, i);
        maps[i] = exp.decode(
            local_edit_latent(z_seed, mask, exp.denoiser(), exp.schedule(), rng, exp.config().solver));
        prov[i] = Provenance{seed.name, "local:" + masks[m].name, {}, rng.engine_seed(), i};
      });
      MaskCohort c;
      c.seed = seed.name;
      c.mask = masks[m].name;
      c.mask_cells = mask.count();
      c.members = measure(std::move(maps), std::move(prov), exp.workers());
      c.report = exp.report(seed.name + "_" + masks[m].name, c.members);
      c.heatmap = heatmap_diff(seed_heat, occupancy_heatmap(c.members.cohort));
      res.cohorts.push_back(std::move(c));
    }
  }
  return res;
}

// ---- augmentation --------------------------------------------------------------

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Unconditional: return "unconditional";
    case Strategy::Perturbational: return "perturbational";
    case Strategy::Localized: return "localized";
  }
  return "?";
}

namespace {

/// Draws candidates 0, 1, 2, ... (in parallel chunks) until `size` pass the
/// filter; keeps the first `size` passing candidates by index.
template <typename Gen>
MemberSet fill_filtered(const Experiment& exp, Strategy strategy, int size, double threshold,
                        Gen&& gen, int& generated) {
  const auto want = static_cast<std::size_t>(size);
  const auto budget = want * static_cast<std::size_t>(exp.config().budget_factor);
  const std::size_t chunk = std::max<std::size_t>(8, 2 * static_cast<std::size_t>(exp.workers()));
  std::vector<LabelMap> kept;
  std::vector<Provenance> kept_prov;
  std::size_t next = 0;
  while (kept.size() < want && next < budget) {
    const std::size_t n = std::min(chunk, budget - next);
    std::vector<LabelMap> maps(n);
    std::vector<Provenance> prov(n);
    std::vector<double> rv(n);
    parallel_for(n, exp.workers(), [&](std::size_t k) {
      const std::size_t j = next + k;
      gen(j, maps[k], prov[k]);
      rv[k] = rv_volume(morph_features(maps[k]));
    });
    for (std::size_t k = 0; k < n && kept.size() < want; ++k) {
      generated = static_cast<int>(next + k + 1);
      if (rv[k] >= threshold) {
        kept.push_back(std::move(maps[k]));
        kept_prov.push_back(std::move(prov[k]));
      }
    }
    next += n;
  }
  if (kept.size() < want) {
    throw std::runtime_error("augmentation: " + std::string(strategy_name(strategy)) +
                             " filter yield insufficient (" +
                             std::to_string(kept.size()) + "/" + std::to_string(want) +
                             " within a budget of " + std::to_string(budget) + ")");
  }
  return measure(std::move(kept), std::move(kept_prov), exp.workers());
}

}  // namespace

AugmentationResult run_augmentation(const Experiment& exp, int size) {
  const auto& cfg = exp.config();
  if (size <= 0) size = cfg.augment_size;
  AugmentationResult res;
  res.threshold_ml = exp.rv_threshold();

  std::vector<LabelMap> tmaps;
  std::vector<Provenance> tprov;
  std::vector<std::size_t> tidx;
  for (std::size_t i = 0; i < exp.reference().size(); ++i) {
    if (exp.reference().features[i][kRvVol] >= res.threshold_ml) {
      tmaps.push_back(exp.reference().cohort[i]);
      tprov.push_back(exp.reference().cohort.provenance()[i]);
      tidx.push_back(i);
    }
  }
  if (tmaps.empty()) throw std::runtime_error("augmentation: target cohort is empty");
  res.target = measure(tmaps, tprov, exp.workers());
  const std::size_t t = tmaps.size();

  std::vector<PLatent> z_targets;
  std::array<std::vector<LatentMask>, 2> masks;
  const auto named = default_masks();
  for (std::size_t i = 0; i < t; ++i) {
    const LabelMap& twin = exp.real().cohort[tidx[i]];
    z_targets.push_back(exp.encode(twin));
    for (int m = 0; m < 2; ++m) {
      masks[m].push_back(build_mask(twin, edit_mask_spec(named[m].edit, cfg.mask_dilation),
                                    cfg.codec_factor));
    }
  }
  const Dims3 ld = exp.latent_dims();
  const std::uint64_t tag_a = mix(kTagAugment, 0), tag_b = mix(kTagAugment, 1),
                      tag_c = mix(kTagAugment, 2);

  auto gen_a = [&](std::size_t j, LabelMap& out, Provenance& pv) {
    RngStream rng = exp.stream(tag_a, j);
    out = exp.decode(sample(exp.denoiser(), exp.schedule(), kTissueCount, ld, rng, cfg.solver));
    pv = Provenance{"none", "unconditional", {}, rng.engine_seed(), j};
  };
  // Every pass over the targets alternates the variant, so both halves cover
  // all targets.
  auto variant = [t](std::size_t j) { return static_cast<int>((j + j / t) % 2); };
  auto gen_b = [&](std::size_t j, LabelMap& out, Provenance& pv) {
    RngStream rng = exp.stream(tag_b, j);
    const double psi = variant(j) == 0 ? 0.5 : 0.35;
    const std::size_t s = j % t;
    out = exp.decode(perturb_latent(z_targets[s], PerturbSpec{psi}, exp.denoiser(), exp.schedule(),
                                    rng, cfg.solver));
    pv = Provenance{tprov[s].seed_id, "perturb", {{"psi", psi}}, rng.engine_seed(), j};
  };
  auto gen_c = [&](std::size_t j, LabelMap& out, Provenance& pv) {
    RngStream rng = exp.stream(tag_c, j);
    const int m = variant(j);
    const std::size_t s = j % t;
    out = exp.decode(local_edit_latent(z_targets[s], masks[m][s], exp.denoiser(), exp.schedule(),
                                       rng, cfg.solver));
    pv = Provenance{tprov[s].seed_id, "local:" + named[m].name, {}, rng.engine_seed(), j};
  };

  const std::array<Strategy, 3> order{Strategy::Unconditional, Strategy::Perturbational,
                                      Strategy::Localized};
  for (int s = 0; s < 3; ++s) {
    StrategyResult& r = res.strategies[s];
    r.strategy = order[s];
    if (s == 0) r.members = fill_filtered(exp, order[s], size, res.threshold_ml, gen_a, r.generated);
    if (s == 1) r.members = fill_filtered(exp, order[s], size, res.threshold_ml, gen_b, r.generated);
    if (s == 2) r.members = fill_filtered(exp, order[s], size, res.threshold_ml, gen_c, r.generated);
    r.report = make_report(std::string(strategy_name(order[s])), r.members, "target", res.target,
                           cfg.pr_k, cfg.fd_ridge);
  }
  return res;
}

// ---- sensitivity ---------------------------------------------------------------

namespace {

MemberSet prefix(const MemberSet& m, std::size_t n) {
  std::vector<LabelMap> maps(m.cohort.members().begin(), m.cohort.members().begin() + n);
  std::vector<Provenance> prov(m.cohort.provenance().begin(), m.cohort.provenance().begin() + n);
  MemberSet out;
  for (std::size_t i = 0; i < n; ++i) out.cohort.add(std::move(maps[i]), std::move(prov[i]));
  out.features.assign(m.features.begin(), m.features.begin() + n);
  out.topology.assign(m.topology.begin(), m.topology.begin() + n);
  return out;
}

SensitivityRow sensitivity_row(const Experiment& exp, const std::string& axis, int steps,
                               const MemberSet& synth, std::uint64_t boot_index) {
  const auto& cfg = exp.config();
  SensitivityRow row;
  row.axis = axis;
  row.steps = steps;
  row.size = static_cast<int>(synth.size());
  const CohortReport rep = exp.report(axis, synth);
  row.fd = rep.fd;
  if (rep.pr) {
    row.precision = rep.pr->precision;
    row.recall = rep.pr->recall;
  }
  row.violation_per_check = rep.violations.per_check_percent;
  row.violation_per_map = rep.violations.per_map_percent;

  const auto n = static_cast<Eigen::Index>(synth.size());
  if (n > cfg.pr_k) {
    const FeatureCloud ref = exp.normalizer().apply(morph_matrix(exp.reference().features));
    const Eigen::MatrixXd all = exp.normalizer().apply(morph_matrix(synth.features)).rows;
    constexpr int kResamples = 50;
    RngStream rng = exp.stream(kTagBootstrap, boot_index);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<double> recalls, fds;
    for (int b = 0; b < kResamples; ++b) {
      FeatureCloud s{Eigen::MatrixXd(n, all.cols())};
      for (Eigen::Index i = 0; i < n; ++i) s.rows.row(i) = all.row(pick(rng.engine()));
      recalls.push_back(precision_recall(ref, s, cfg.pr_k).recall);
      if (row.fd) fds.push_back(frechet_distance(ref, s, cfg.fd_ridge));
    }
    row.recall_se = stats::stddev(recalls);
    row.fd_se = stats::stddev(fds);
  }
  return row;
}

}  // namespace

std::vector<SensitivityRow> run_sensitivity(const Experiment& exp,
                                            const std::vector<int>& steps_grid,
                                            const std::vector<int>& size_grid) {
  if (steps_grid.empty() && size_grid.empty()) {
    throw std::invalid_argument("sensitivity: both grids are empty");
  }
  const auto& cfg = exp.config();
  int n_max = cfg.unconditional_size;
  if (!size_grid.empty()) n_max = *std::max_element(size_grid.begin(), size_grid.end());
  if (n_max <= 0) throw std::invalid_argument("sensitivity: cohort size must be > 0");

  std::vector<SensitivityRow> rows;
  std::uint64_t boot = 0;
  for (int steps : steps_grid) {
    const NoiseSchedule sch = build_schedule(steps, cfg.rho, cfg.sigma_min, cfg.sigma_max);
    const MemberSet m = generate_unconditional(exp, n_max, sch, mix(kTagSteps, steps), "steps");
    rows.push_back(sensitivity_row(exp, "steps", steps, m, boot++));
  }
  if (!size_grid.empty()) {
    const MemberSet m =
        generate_unconditional(exp, n_max, exp.schedule(), mix(kTagSteps, cfg.steps), "steps");
    for (int size : size_grid) {
      if (size <= 0) throw std::invalid_argument("sensitivity: sizes must be > 0");
      rows.push_back(
          sensitivity_row(exp, "size", cfg.steps, prefix(m, static_cast<std::size_t>(size)), boot++));
    }
  }
  return rows;
}

}  // namespace sibgen
