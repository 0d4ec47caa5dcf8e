#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "sibgen/parallel.hpp"
#include "sibgen/pipelines.hpp"

using namespace sibgen;

TEST_SUITE("parallel") {
  TEST_CASE("every index runs exactly once") {
    for (int w : {1, 2, 5, 64}) {
      std::vector<int> hits(100, 0);
      parallel_for(hits.size(), w, [&](std::size_t i) { ++hits[i]; });
      CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
    parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
  }

  TEST_CASE("the lowest failing index is rethrown") {
    for (int w : {1, 4}) {
      try {
        parallel_for(50, w, [](std::size_t i) {
          if (i == 7 || i == 30) throw std::runtime_error("task " + std::to_string(i));
        });
        FAIL("expected a throw");
      } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "task 7");
      }
    }
  }

  TEST_CASE("worker count comes from the environment") {
    ::setenv("SIBGEN_WORKERS", "3", 1);
    CHECK(default_workers() == 3);
    ::setenv("SIBGEN_WORKERS", "0", 1);
    CHECK(default_workers() >= 1);
    ::unsetenv("SIBGEN_WORKERS");
    CHECK(default_workers() >= 1);
  }

  TEST_CASE("pipelines give identical results for any worker count") {
    auto c = ExperimentConfig::preset_named("desk");
    c.master_seed = 9;
    c.real_size = 20;
    c.steps = 8;
    const Experiment one(c, 1), many(c, 3);
    const auto a = run_unconditional(one, 6);
    const auto b = run_unconditional(many, 6);
    CHECK(a.members.cohort.members() == b.members.cohort.members());
    CHECK(a.report->violations.per_check_percent == b.report->violations.per_check_percent);
    CHECK(a.report->pr->recall == b.report->pr->recall);
    const auto seed = select_rare_seed(one);
    const auto pa = run_psi_sweep(one, {seed}, {0.5}, 4);
    const auto pb = run_psi_sweep(many, {seed}, {0.5}, 4);
    CHECK(pa.cohorts[0].members.cohort.members() == pb.cohorts[0].members.cohort.members());
  }
}
