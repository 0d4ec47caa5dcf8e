#include <doctest.h>

#include <random>

#include "sibgen/anatomy_metrics.hpp"
#include "sibgen/codec.hpp"
#include "sibgen/phantom.hpp"
#include "support.hpp"

using namespace sibgen;

TEST_SUITE("codec") {
  TEST_CASE("factor 1 encodes to the one-hot view") {
    std::mt19937_64 g(1);
    const auto map = testing::random_map(g, Dims3{4, 3, 5});
    const auto z = encode(map, CodecConfig{1, kTissueCount, 1.0});
    CHECK(z.values == onehot(map).values);
    CHECK(decode(z, CodecConfig{1, kTissueCount, 1.0}) == map);
  }

  TEST_CASE("constant map at factor 4 fills one channel") {
    const LabelMap map(Dims3{8, 8, 8}, 1.0, TissueId::LV);
    const CodecConfig cfg{4, kTissueCount, 1.0};
    const auto z = encode(map, cfg);
    CHECK(z.dims == Dims3{2, 2, 2});
    for (int c = 0; c < kTissueCount; ++c) {
      CHECK(z.channel(c).isConstant(c == index_of(TissueId::LV) ? 1.0 : 0.0));
    }
    CHECK(decode(z, cfg) == map);
  }

  TEST_CASE("block straddling a boundary averages to one half") {
    LabelMap map(Dims3{4, 2, 2}, 1.0);
    for (int z = 0; z < 2; ++z)
      for (int y = 0; y < 2; ++y) map.set(1, y, z, TissueId::LV);
    const auto lat = encode(map, CodecConfig{2, kTissueCount, 1.0});
    CHECK(lat.channel(index_of(TissueId::LV))[0] == 0.5);
    CHECK(lat.channel(0)[0] == 0.5);
    CHECK(lat.channel(index_of(TissueId::LV))[1] == 0.0);
  }

  TEST_CASE("latent channels sum to one per cell") {
    std::mt19937_64 g(2);
    const auto map = testing::random_map(g, Dims3{6, 6, 4});
    const auto z = encode(map, CodecConfig{2, kTissueCount, 1.0});
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(z.cells());
    for (int c = 0; c < kTissueCount; ++c) sum += z.channel(c);
    CHECK(sum.isApproxToConstant(1.0));
  }

  TEST_CASE("factor-4 round trip keeps large chambers") {
    const Dims3 d{64, 64, 64};
    const double vs = 0.7;
    PopulationSpec spec;
    spec.dims = d;
    spec.voxel_size_mm = vs;
    const CodecConfig cfg{4, kTissueCount, vs};
    int checked = 0;
    for (int i = 0; i < 4; ++i) {
      RngStream rng(3, static_cast<std::uint64_t>(i));
      const auto p = sample_params(spec, rng);
      const auto map = rasterize(p, d, vs);
      const auto back = decode(encode(map, cfg), cfg);
      // Chambers are clipped by their neighbours, so size is measured on the
      // rasterised tissue: minor axis of at least 12 voxels.
      const auto f = morph_features(map);
      for (std::size_t c = 0; c < kMorphTissues.size(); ++c) {
        if (f[3 * c + 2] / vs < 12.0) continue;
        CHECK_MESSAGE(dice(map, back, kMorphTissues[c]) >= 0.90, tissue_name(kMorphTissues[c]));
        ++checked;
      }
    }
    CHECK(checked >= 8);
  }

  TEST_CASE("trilinear upsample reproduces linear ramps inside the grid") {
    Latent z(1, Dims3{4, 1, 1});
    z.values << 0, 1, 2, 3;
    const auto up = upsample_trilinear(z, 2);
    // Cell centres at 0.25 + 0.5 i in coarse units: interior samples are exact.
    CHECK(up.values[0] == 0.0);  // clamped below the first centre
    CHECK(up.values[1] == doctest::Approx(0.25));
    CHECK(up.values[2] == doctest::Approx(0.75));
    CHECK(up.values[7] == 3.0);
  }

  TEST_CASE("dice edge cases") {
    const LabelMap a(Dims3{2, 2, 2}, 1.0);
    CHECK(dice(a, a, TissueId::LV) == 1.0);
    const LabelMap b(Dims3{2, 2, 2}, 1.0, TissueId::LV);
    CHECK(dice(a, b, TissueId::LV) == 0.0);
  }

  TEST_CASE("codec rejects grids not divisible by the factor") {
    const LabelMap m(Dims3{5, 4, 4}, 1.0);
    CHECK_THROWS(encode(m, CodecConfig{2, kTissueCount, 1.0}));
    CHECK_THROWS(PooledSimplexCodec(CodecConfig{0, kTissueCount, 1.0}));
  }
}
