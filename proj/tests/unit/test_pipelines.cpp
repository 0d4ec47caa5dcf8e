#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sibgen/pipelines.hpp"
#include "sibgen/stats.hpp"

using namespace sibgen;

namespace {

constexpr int kLv = 0, kRv = 3, kLa = 6, kRa = 9;

ExperimentConfig small(std::uint64_t seed = 5) {
  auto c = ExperimentConfig::preset_named("desk");
  c.master_seed = seed;
  c.real_size = 30;
  c.steps = 10;
  c.unconditional_size = 8;
  c.edit_cohort_size = 4;
  c.mask_cohort_size = 4;
  c.augment_size = 3;
  return c;
}

PopulationSpec frozen(PopulationSpec s) {
  for (auto* axes : {&s.lv_semi, &s.rv_semi, &s.la_semi, &s.ra_semi})
    for (auto& p : *axes) p.scale = 0.0;
  s.myo_thickness.scale = 0.0;
  s.ao_radius.scale = 0.0;
  s.ao_length.scale = 0.0;
  s.jitter_mm = 0.0;
  s.rare_weight = 0.0;
  return s;
}

}  // namespace

TEST_SUITE("pipelines") {
  TEST_CASE("presets validate and differ in scale") {
    for (auto name : {"full", "desk", "acceptance"}) {
      const auto c = ExperimentConfig::preset_named(name);
      CHECK_NOTHROW(c.validate());
      CHECK(c.preset == name);
    }
    CHECK(ExperimentConfig::preset_named("full").real_size > ExperimentConfig::preset_named("desk").unconditional_size);
    CHECK_THROWS(ExperimentConfig::preset_named("huge"));
    auto bad = small();
    bad.psi_grid = {0.0};
    CHECK_THROWS(bad.validate());
    bad = small();
    bad.codec_factor = 3;
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("reference cohort is the codec round trip of the real cohort") {
    const Experiment exp(small(), 1);
    REQUIRE(exp.real().size() == 30);
    for (std::size_t i = 0; i < exp.real().size(); ++i) {
      CHECK(exp.reference().cohort[i] == exp.decode(exp.encode(exp.real().cohort[i])));
    }
    CHECK(exp.rv_threshold() == doctest::Approx(stats::quantile(exp.reference().feature(kRv), 0.9)));
  }

  TEST_CASE("size zero gives an empty cohort and no report") {
    const Experiment exp(small(), 1);
    const auto res = run_unconditional(exp, 0);
    CHECK(res.members.size() == 0);
    CHECK_FALSE(res.report.has_value());
    CHECK_THROWS(make_report("empty", res.members, "real", exp.reference(), 3, 1e-6));
    CHECK_THROWS(run_unconditional(exp, -1));
  }

  TEST_CASE("point-mass population gives identical members with full recall") {
    auto c = small();
    c.population = frozen(c.population);
    c.real_size = 6;
    const Experiment exp(c, 1);
    const auto res = run_unconditional(exp, 6);
    for (std::size_t i = 1; i < res.members.size(); ++i) CHECK(res.members.cohort[i] == res.members.cohort[0]);
    CHECK(res.members.cohort[0] == exp.reference().cohort[0]);
    REQUIRE(res.report.has_value());
    REQUIRE(res.report->pr.has_value());
    CHECK(res.report->pr->recall == 1.0);
  }

  TEST_CASE("unconditional members are decoded, valid-sized and labelled") {
    const Experiment exp(small(), 1);
    const auto res = run_unconditional(exp, 8);
    REQUIRE(res.members.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(res.members.cohort[i].dims() == exp.config().population.dims);
      CHECK(res.members.cohort.provenance()[i].method == "unconditional");
      CHECK(res.members.cohort.provenance()[i].stream_index == i);
    }
    CHECK(res.rare_rv_cut == doctest::Approx(stats::quantile(exp.reference().feature(kRv), 0.9)));
    CHECK(res.rare_share == doctest::Approx(res.rare_count / 8.0));
  }

  TEST_CASE("seed selection picks members from the requested bands") {
    const Experiment exp(small(), 1);
    const auto seeds = select_archetype_seeds(exp);
    REQUIRE(seeds.size() == 4);
    const auto lv = exp.reference().feature(kLv);
    const auto rv = exp.reference().feature(kRv);
    const auto& s0 = seeds[0];  // L-up R-up
    CHECK(stats::empirical_cdf(lv, lv[s0.real_index]) >= 0.5);
    CHECK(stats::empirical_cdf(rv, rv[s0.real_index]) >= 0.5);
    const auto& s1 = seeds[1];  // L-down R-down
    CHECK(stats::empirical_cdf(lv, lv[s1.real_index]) <= 0.5);
    CHECK(stats::empirical_cdf(rv, rv[s1.real_index]) <= 0.5);
    for (const auto& s : seeds) {
      CHECK(s.map == exp.real().cohort[s.real_index]);
      CHECK(s.decoded == exp.reference().cohort[s.real_index]);
    }
    const auto rare = select_rare_seed(exp);
    CHECK(exp.real().cohort.provenance()[rare.real_index].params.at("mode") == 1.0);
    LabelMap wrong(Dims3{8, 8, 8}, 1.4);
    CHECK_THROWS(seed_from_map(exp, "bad", wrong, 0));
  }

  TEST_CASE("psi near zero reproduces the round-tripped seed") {
    const Experiment exp(small(), 1);
    const auto seed = select_rare_seed(exp);
    const auto res = run_psi_sweep(exp, {seed}, {1e-6}, 4);
    REQUIRE(res.cohorts.size() == 1);
    for (const auto& m : res.cohorts[0].members.cohort.members()) CHECK(m == seed.decoded);
    CHECK(res.cohorts[0].lv_abs_dev_mean == 0.0);
  }

  TEST_CASE("edit-LV masks keep the other chambers") {
    const Experiment exp(small(), 1);
    const auto seeds = select_archetype_seeds(exp);
    const auto res = run_mask_sweep(exp, {seeds[0]}, {default_masks()[0]}, 6);
    REQUIRE(res.cohorts.size() == 1);
    const auto& f0 = seeds[0].roundtrip_features;
    std::vector<double> lv;
    for (const auto& f : res.cohorts[0].members.features) {
      for (int j : {kRv, kLa, kRa}) CHECK(std::abs(f[j] - f0[j]) <= 0.05 * f0[j]);
      lv.push_back(f[kLv]);
    }
    CHECK(stats::stddev(lv) > 0.0);
    CHECK(res.cohorts[0].mask_cells > 0);
  }

  TEST_CASE("augmentation filter") {
    auto c = small();
    c.threshold_ml = 0.0;
    const Experiment all(c, 1);
    const auto open = run_augmentation(all, 3);
    CHECK(open.target.size() == all.reference().size());
    for (const auto& s : open.strategies) CHECK(s.generated == 3);

    c.threshold_ml = -1.0;
    c.threshold_quantile = 0.5;
    const Experiment half(c, 1);
    const auto res = run_augmentation(half, 3);
    for (const auto& s : res.strategies) {
      CHECK(s.members.size() == 3);
      for (const auto& f : s.members.features) CHECK(f[kRv] >= res.threshold_ml);
    }
    for (const auto& f : res.target.features) CHECK(f[kRv] >= res.threshold_ml);

    c.threshold_ml = 1e6;
    const Experiment none(c, 1);
    CHECK_THROWS(run_augmentation(none, 3));
  }

  TEST_CASE("sensitivity rows") {
    auto c = small();
    c.real_size = 40;
    const Experiment exp(c, 1);
    CHECK(run_sensitivity(exp, {5}, {}).size() == 1);
    CHECK_THROWS(run_sensitivity(exp, {}, {}));

    const auto rows = run_sensitivity(exp, {3, 5, 10, 20}, {10, 40});
    REQUIRE(rows.size() == 6);
    std::vector<double> fd;
    double se = 0;
    for (int i = 0; i < 4; ++i) {
      REQUIRE(rows[i].fd.has_value());
      fd.push_back(*rows[i].fd);
      se = std::max(se, rows[i].fd_se);
    }
    const auto fit = stats::isotonic_decreasing(fd);
    double resid = 0;
    for (std::size_t i = 0; i < fd.size(); ++i) resid = std::max(resid, std::abs(fd[i] - fit[i]));
    MESSAGE("fd by steps: ", fd[0], " ", fd[1], " ", fd[2], " ", fd[3], " residual ", resid, " se ", se);
    CHECK(resid <= 2 * se);
    CHECK(rows[5].recall_se < rows[4].recall_se);
  }
}
