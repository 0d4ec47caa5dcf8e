// Experiment drivers: unconditional generation, perturbational sweeps over
// psi, localized mask sweeps, filtered cohort augmentation, and sensitivity
// curves over steps and cohort size. Everything is keyed by (config, master
// seed); member i of any cohort draws from its own stream, so results do not
// depend on the worker count.
#pragma once

#include <array>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sibgen/anatomy_metrics.hpp"
#include "sibgen/codec.hpp"
#include "sibgen/cohort_analytics.hpp"
#include "sibgen/core.hpp"
#include "sibgen/diffusion.hpp"
#include "sibgen/editing.hpp"
#include "sibgen/phantom.hpp"

namespace sibgen {

/// Latent scalar used by the drivers.
using PScalar = float;
using PLatent = LatentT<PScalar>;

enum class DenoiserKind { Empirical, Kde, LowRankGaussian };
std::string_view denoiser_kind_name(DenoiserKind k);
DenoiserKind denoiser_kind_from_name(std::string_view name);

/// CDF-rank bands on the reference cohort's LV and RV volumes.
struct SeedBands {
  double up = 0.9;
  double down = 0.1;
  double mid_lo = 0.4;
  double mid_hi = 0.6;
  double rare_rank = 0.95;  // RV rank targeted by the rare-mode seed
};

struct ExperimentConfig {
  std::string preset = "desk";
  std::uint64_t master_seed = 0;
  PopulationSpec population;
  int codec_factor = 2;
  /// Multiplier from codec latents to diffusion space. Keep the largest
  /// principal std of the scaled latents well below sigma_max, otherwise a
  /// psi = 1 edit still remembers its seed.
  double latent_scale = 1.0;

  int real_size = 100;  // denoiser dataset, edit seeds and metric reference
  int unconditional_size = 360;
  int edit_cohort_size = 60;
  int mask_cohort_size = 60;
  int augment_size = 140;
  int budget_factor = 10;  // filtering draws at most budget_factor * size candidates

  int steps = 20;
  double rho = 3.0;
  double sigma_min = 2e-3;
  double sigma_max = 80.0;
  SolverOrder solver = SolverOrder::Heun;

  std::vector<double> psi_grid{0.35, 0.5, 0.65, 0.8, 1.0};
  int mask_dilation = 2;

  DenoiserKind denoiser = DenoiserKind::LowRankGaussian;
  double kde_bandwidth = 0.05;
  int gaussian_rank = 0;  // 0 keeps every non-degenerate axis
  double gaussian_residual_std = 0.0;

  double threshold_ml = -1.0;  // < 0 selects the quantile rule below
  double threshold_quantile = 0.9;
  SeedBands bands;

  int pr_k = 3;
  double fd_ridge = 1e-6;

  std::vector<int> sensitivity_steps{5, 10, 20, 50};
  std::vector<int> sensitivity_sizes{25, 50, 100};

  void validate() const;
  /// "full" (full sizes), "desk" (laptop scale) or "acceptance" (test gate).
  static ExperimentConfig preset_named(std::string_view name);
};

struct CohortReport {
  std::string name;
  std::string reference;
  std::size_t size = 0;
  ViolationRate violations;
  std::optional<PrecisionRecall> pr;
  std::optional<double> fd;
  MorphVector morph_mean = MorphVector::Zero();
  MorphVector morph_std = MorphVector::Zero();
};

/// Generated members together with their per-member measurements.
struct MemberSet {
  Cohort cohort;
  std::vector<MorphVector> features;
  std::vector<TopologyReport> topology;

  [[nodiscard]] std::size_t size() const { return cohort.size(); }
  [[nodiscard]] std::vector<double> feature(int j) const;
};

/// Shared state of one experiment: populations, codec, schedule, denoiser.
class Experiment {
 public:
  Experiment(ExperimentConfig cfg, int workers);

  [[nodiscard]] const ExperimentConfig& config() const { return cfg_; }
  [[nodiscard]] int workers() const { return workers_; }
  /// Population phantoms the denoiser is fitted to; edit seeds come from here.
  [[nodiscard]] const MemberSet& real() const { return real_; }
  /// The same members after an encode/decode round trip. Every generated map
  /// passes through the decoder, so thresholds, seed ranks and cohort metrics
  /// are taken on this set.
  [[nodiscard]] const MemberSet& reference() const { return reference_; }
  [[nodiscard]] const NoiseSchedule& schedule() const { return schedule_; }
  [[nodiscard]] const CodecConfig& codec() const { return codec_; }
  [[nodiscard]] const Denoiser<PScalar>& denoiser() const { return *denoiser_; }
  [[nodiscard]] const FeatureNormalizer& normalizer() const { return normalizer_; }
  [[nodiscard]] Dims3 latent_dims() const;

  [[nodiscard]] PLatent encode(const LabelMap& map) const;
  [[nodiscard]] LabelMap decode(const PLatent& z) const;

  /// Augmentation filter threshold on RV volume (ml).
  [[nodiscard]] double rv_threshold() const;
  /// Mean feature j over reference members of the dominant mode.
  [[nodiscard]] double dominant_mean(int j) const;

  /// Stream of member `index` of the cohort identified by `tag`.
  [[nodiscard]] RngStream stream(std::uint64_t tag, std::uint64_t index) const;

  [[nodiscard]] CohortReport report(const std::string& name, const MemberSet& members) const;

 private:
  ExperimentConfig cfg_;
  int workers_;
  MemberSet real_;
  MemberSet reference_;
  NoiseSchedule schedule_;
  CodecConfig codec_;
  std::unique_ptr<Denoiser<PScalar>> denoiser_;
  FeatureNormalizer normalizer_;
};

/// Stream family of the real cohort.
inline constexpr std::uint64_t kRealCohortTag = 0x7265616cULL;

/// Population cohort of `n` phantoms drawn on the stream family `tag`.
MemberSet phantom_cohort(const PopulationSpec& spec, std::uint64_t master_seed, std::uint64_t tag,
                         int n, const std::string& id_prefix, int workers);

/// Measures a list of maps; provenance is attached in order.
MemberSet measure(std::vector<LabelMap> maps, std::vector<Provenance> prov, int workers);

/// Report for `members` against `reference`, with normalisation fitted on
/// the reference. Throws on an empty cohort. PR is omitted when either side
/// has <= k members, FD when either side has fewer than 13.
CohortReport make_report(const std::string& name, const MemberSet& members,
                         const std::string& reference_name, const MemberSet& reference, int k,
                         double ridge);

// ---- unconditional ---------------------------------------------------------

struct UnconditionalResult {
  MemberSet members;
  std::optional<CohortReport> report;
  double rare_rv_cut = 0.0;  // reference RV quantile at 1 - rare_weight
  int rare_count = 0;
  double rare_share = 0.0;
  double p_over = 1.0;       // P(X >= rare_count), X ~ Bin(n, rare_weight)
};

UnconditionalResult run_unconditional(const Experiment& exp, int count, int steps = 0);

// ---- seeds -----------------------------------------------------------------

struct Seed {
  std::string name;
  std::size_t real_index = 0;
  LabelMap map;      // twin as generated
  LabelMap decoded;  // twin after the codec round trip
  MorphVector roundtrip_features = MorphVector::Zero();
};

/// L-up R-up, L-down R-down, L-up R-mid and L-mid R-mid real members.
std::vector<Seed> select_archetype_seeds(const Experiment& exp);
/// Rare-mode real member whose RV rank is closest to bands.rare_rank.
Seed select_rare_seed(const Experiment& exp);
/// Seed from an arbitrary map with the experiment's grid; `stream_key`
/// replaces the real-member index in stream tags.
Seed seed_from_map(const Experiment& exp, const std::string& name, const LabelMap& map,
                   std::size_t stream_key);

// ---- psi sweep -------------------------------------------------------------

struct PsiCohort {
  std::string seed;
  double psi = 0.0;
  MemberSet members;
  CohortReport report;
  double lv_abs_dev_mean = 0.0;  // mean |LV - seed LV| (roundtripped seed)
  double lv_abs_dev_se = 0.0;
  double rv_mean = 0.0;
  HeatmapDiff heatmap;           // seed occupancy minus cohort occupancy
};

struct PsiSweepResult {
  std::vector<Seed> seeds;
  std::vector<PsiCohort> cohorts;  // seed-major, psi-minor
};

PsiSweepResult run_psi_sweep(const Experiment& exp, const std::vector<Seed>& seeds,
                             const std::vector<double>& psi_grid, int cohort_size);

// ---- mask sweep ------------------------------------------------------------

struct NamedMask {
  std::string name;
  std::set<TissueId> edit;
};

/// Edit-LV and edit-RV (Myo always free).
std::vector<NamedMask> default_masks();

struct MaskCohort {
  std::string seed;
  std::string mask;
  MemberSet members;
  CohortReport report;
  std::size_t mask_cells = 0;
  HeatmapDiff heatmap;
};

struct MaskSweepResult {
  std::vector<Seed> seeds;
  std::vector<MaskCohort> cohorts;  // seed-major, mask-minor
};

MaskSweepResult run_mask_sweep(const Experiment& exp, const std::vector<Seed>& seeds,
                               const std::vector<NamedMask>& masks, int cohort_size);

// ---- augmentation ----------------------------------------------------------

enum class Strategy { Unconditional, Perturbational, Localized };
std::string_view strategy_name(Strategy s);

struct StrategyResult {
  Strategy strategy{};
  MemberSet members;
  CohortReport report;
  int generated = 0;  // candidates drawn to fill the cohort
};

struct AugmentationResult {
  double threshold_ml = 0.0;
  MemberSet target;
  std::array<StrategyResult, 3> strategies;
};

AugmentationResult run_augmentation(const Experiment& exp, int size = 0);

// ---- sensitivity -----------------------------------------------------------

struct SensitivityRow {
  std::string axis;  // "steps" or "size"
  int steps = 0;
  int size = 0;
  std::optional<double> fd;
  double precision = 0.0;
  double recall = 0.0;
  double fd_se = 0.0;      // bootstrap over synthetic members
  double recall_se = 0.0;
  double violation_per_check = 0.0;
  double violation_per_map = 0.0;
};

std::vector<SensitivityRow> run_sensitivity(const Experiment& exp,
                                            const std::vector<int>& steps_grid,
                                            const std::vector<int>& size_grid);

}  // namespace sibgen
