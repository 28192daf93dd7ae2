#include <gtest/gtest.h>

#include <unordered_set>

#include "scene_fixtures.hpp"

using namespace particlesynth;

// ---------------------------------------------------------------------------
// PSD sampling and seeds

TEST(Psd, ExplicitIsVerbatim) {
  Rng rng(1);
  const ClassCounts c{0, 0, 0, 0, 0, 0, 0, 5};
  EXPECT_EQ(sample_psd(PsdSpec::explicit_counts(c), rng), c);
}

TEST(Psd, CountsSumToTotal) {
  Rng rng(2);
  for (const PsdSpec& spec : {PsdSpec::uniform(1000), PsdSpec::gaussian(3.0, 1.5, 777), PsdSpec::random(4321)}) {
    EXPECT_EQ(total(sample_psd(spec, rng)), spec.total_count);
  }
}

TEST(Psd, GaussianConcentratesAroundMean) {
  Rng rng(3);
  const ClassCounts c = sample_psd(PsdSpec::gaussian(4.5, 0.5, 10000), rng);
  EXPECT_GE(static_cast<double>(c[3] + c[4]) / 10000.0, 0.60);
}

TEST(Psd, GaussianProbabilitiesAreNormalisedDensity) {
  Rng rng(4);
  const auto p = class_probabilities(PsdSpec::gaussian(3.0, 1.5, 1), rng, kAllClasses);
  double z = 0.0;
  for (int k = 1; k <= 8; ++k) z += std::exp(-0.5 * std::pow((k - 3.0) / 1.5, 2));
  for (int k = 1; k <= 8; ++k) {
    EXPECT_NEAR(p[k - 1], std::exp(-0.5 * std::pow((k - 3.0) / 1.5, 2)) / z, 1e-12);
  }
}

TEST(Psd, RestrictedClassesGetZero) {
  Rng rng(5);
  ClassSet allowed{};
  allowed[0] = allowed[1] = allowed[2] = true;
  const ClassCounts c = sample_psd(PsdSpec::uniform(3000), rng, allowed);
  for (int k = 3; k < 8; ++k) EXPECT_EQ(c[k], 0u);
  EXPECT_EQ(c[0] + c[1] + c[2], 3000u);
}

TEST(Psd, RandomKindVariesPerDraw) {
  Rng rng(6);
  const auto a = class_probabilities(PsdSpec::random(10), rng, kAllClasses);
  const auto b = class_probabilities(PsdSpec::random(10), rng, kAllClasses);
  EXPECT_NE(a, b);
  double s = 0.0;
  for (double v : a) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Psd, Validation) {
  EXPECT_THROW(PsdSpec::uniform(0).validate(), Error);
  EXPECT_THROW(PsdSpec::gaussian(4, 0.0, 10).validate(), Error);
  EXPECT_THROW(PsdSpec::explicit_counts({}).validate(), Error);
}

TEST(Psd, OcclusionVariantHalvesWithCeil) {
  EXPECT_EQ(pair_occlusion_variant({10, 0, 0, 0, 0, 0, 0, 0}), (ClassCounts{5, 0, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(pair_occlusion_variant({1, 1, 1, 1, 1, 1, 1, 1}), (ClassCounts{1, 1, 1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(pair_occlusion_variant({}), ClassCounts{});
  EXPECT_EQ(pair_occlusion_variant({7, 3, 0, 2, 9, 0, 0, 1}), (ClassCounts{4, 2, 0, 1, 5, 0, 0, 1}));
}

TEST(Seeds, StableAndDistinct) {
  EXPECT_EQ(derive_instance_seed(7, 1, 2), derive_instance_seed(7, 1, 2));
  EXPECT_NE(derive_instance_seed(7, 0, 0), derive_instance_seed(7, 0, 1));
  EXPECT_NE(derive_instance_seed(7, 0, 1), derive_instance_seed(7, 1, 0));
}

TEST(Seeds, NoCollisionsInAMillionTriples) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2'000'000);
  for (std::uint64_t m = 0; m < 10; ++m) {
    for (std::uint64_t i = 0; i < 100; ++i) {
      for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(derive_instance_seed(m, i, k));
    }
  }
  EXPECT_EQ(seen.size(), 1'000'000u);
}

TEST(Rng, BelowIsInRangeAndShuffleIsPermutation) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
  std::vector<int> v{1, 2, 3, 4, 5, 6};
  rng.shuffle(std::span<int>(v));
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<int>{1, 2, 3, 4, 5, 6}));
}

// ---------------------------------------------------------------------------
// Placement state

namespace {

std::vector<detail::RowRun> square_runs(int side) {
  BinaryMask m(side, side);
  for (auto& b : m.data()) b = 1;
  return detail::row_runs(m);
}

}  // namespace

TEST(Compositor, ThirtyPercentOverlap) {
  detail::Compositor comp(64, 64, 0.6);
  const auto sq = square_runs(10);
  ASSERT_TRUE(comp.try_place(sq, {0, 0}, 0, detail::Compositor::Rule::kVisibilityFloor));
  ASSERT_TRUE(comp.try_place(sq, {7, 0}, 0, detail::Compositor::Rule::kVisibilityFloor));
  EXPECT_EQ(comp.visible(0), 70u);
  EXPECT_EQ(comp.visible(1), 100u);
  EXPECT_DOUBLE_EQ(static_cast<double>(comp.visible(0)) / 100.0, 0.7);
}

TEST(Compositor, HalfCoverageRejected) {
  detail::Compositor comp(64, 64, 0.6);
  const auto sq = square_runs(10);
  ASSERT_TRUE(comp.try_place(sq, {0, 0}, 0, detail::Compositor::Rule::kVisibilityFloor));
  EXPECT_FALSE(comp.try_place(sq, {5, 0}, 0, detail::Compositor::Rule::kVisibilityFloor));
  EXPECT_EQ(comp.placed(), 1u);
  EXPECT_EQ(comp.visible(0), 100u);
  // exactly at the floor is allowed
  EXPECT_TRUE(comp.try_place(sq, {6, 0}, 0, detail::Compositor::Rule::kVisibilityFloor));
  EXPECT_EQ(comp.visible(0), 60u);
}

TEST(Compositor, HigherLayerMayBuryLowerLayer) {
  detail::Compositor comp(64, 64, 0.6);
  ASSERT_TRUE(comp.try_place(square_runs(10), {5, 5}, 0, detail::Compositor::Rule::kVisibilityFloor));
  ASSERT_TRUE(comp.try_place(square_runs(20), {0, 0}, 2, detail::Compositor::Rule::kVisibilityFloor));
  EXPECT_EQ(comp.visible(0), 0u);
  EXPECT_EQ(comp.layer_visible(0), 100u);
}

TEST(Compositor, NoOverlapRule) {
  detail::Compositor comp(64, 64, 1.0);
  ASSERT_TRUE(comp.try_place(square_runs(10), {0, 0}, 0, detail::Compositor::Rule::kNoOverlap));
  EXPECT_FALSE(comp.try_place(square_runs(10), {9, 9}, 0, detail::Compositor::Rule::kNoOverlap));
  EXPECT_TRUE(comp.try_place(square_runs(10), {10, 0}, 0, detail::Compositor::Rule::kNoOverlap));
}

TEST(Compositor, FloorPixelsMatchDoubleDivision) {
  for (std::uint64_t area = 1; area < 3000; ++area) {
    const std::uint64_t v = detail::min_visible_pixels(area, 0.6);
    ASSERT_GE(static_cast<double>(v) / static_cast<double>(area), 0.6);
    if (v > 0) ASSERT_LT(static_cast<double>(v - 1) / static_cast<double>(area), 0.6);
  }
}

// ---------------------------------------------------------------------------
// Scenes

namespace {

void expect_scene_structure(const Scene& s) {
  ClassCounts hist{};
  for (std::size_t i = 0; i < s.instances.size(); ++i) {
    const PlacedInstance& inst = s.instances[i];
    EXPECT_EQ(inst.instance_id, i + 1);
    EXPECT_EQ(inst.z, i);
    if (i > 0) EXPECT_LE(s.instances[i - 1].layer, inst.layer);
    EXPECT_EQ(inst.layer, layer_of_class(inst.size_class));
    const BBox b = inst.bbox();
    EXPECT_GE(b.x0, 0);
    EXPECT_GE(b.y0, 0);
    EXPECT_LE(b.x1, s.width);
    EXPECT_LE(b.y1, s.height);
    EXPECT_GE(inst.visibility, 0.0);
    EXPECT_LE(inst.visibility, 1.0);
    ++hist[static_cast<std::size_t>(inst.size_class - 1)];
  }
  EXPECT_EQ(hist, s.psd_histogram);
  for (int k = 0; k < kNumClasses; ++k) EXPECT_EQ(s.psd_histogram[k] + s.shortfall[k], s.requested[k]);
}

}  // namespace

TEST(SceneL1, SingleBudget) {
  const Scene s = compose_l1(fixture::small_catalog(), fixture::only(3, 1), StageSpec::single(Stage::kL1, 3),
                             fixture::setup(1));
  ASSERT_EQ(s.instances.size(), 1u);
  EXPECT_EQ(s.instances[0].visibility, 1.0);
}

TEST(SceneL1, NoOverlapAndSaturationCoverage) {
  StageSpec st = StageSpec::single(Stage::kL1, 2);
  double min_cov = 1.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scene s = compose_l1(fixture::disc_catalog(), fixture::only(2, 100000), st, fixture::setup(seed));
    std::uint64_t amodal = 0;
    for (const auto& inst : s.instances) {
      amodal += inst.amodal_area;
      ASSERT_EQ(inst.visibility, 1.0);
    }
    std::vector<std::uint32_t> ids;
    oracle::repaint_visible(s, &ids);
    const auto covered = static_cast<std::uint64_t>(std::count_if(ids.begin(), ids.end(), [](auto v) { return v != 0; }));
    EXPECT_EQ(amodal, covered);
    expect_scene_structure(s);
    min_cov = std::min(min_cov, static_cast<double>(covered) / (512.0 * 512.0));
  }
  EXPECT_GE(min_cov, 0.30);
}

TEST(SceneL2, RepaintOracleAndFloor) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const int cls = 1 + static_cast<int>(seed % 5);
    const Scene s = compose_l2(fixture::small_catalog(), fixture::only(cls, 300),
                               StageSpec::single(Stage::kL2, cls), fixture::setup(seed, 256));
    const auto vis = oracle::repaint_visible(s);
    for (const auto& inst : s.instances) {
      ASSERT_EQ(vis[inst.instance_id], inst.visible_area);
      ASSERT_EQ(inst.amodal_area, inst.mask.area());
      ASSERT_GE(inst.visibility, 0.6);
      ASSERT_LE(inst.visibility, 1.0);
      ASSERT_EQ(inst.visibility, static_cast<double>(inst.visible_area) / static_cast<double>(inst.amodal_area));
    }
    expect_scene_structure(s);
  }
}

TEST(SceneL2, ShortfallWhenCanvasIsFull) {
  StageSpec st = StageSpec::single(Stage::kL2, 8);
  st.max_place_attempts = 5;
  const Scene s = compose_l2(fixture::small_catalog(), fixture::only(8, 60), st, fixture::setup(3, 256));
  EXPECT_GT(s.shortfall[7], 0u);
  EXPECT_EQ(s.instances.size() + s.shortfall[7], 60u);
  expect_scene_structure(s);
}

TEST(SceneL3, TwoPassRepaint) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed);
    const ClassCounts counts = sample_psd(PsdSpec::gaussian(3.0, 1.5, 400), rng);
    StageSpec st;
    st.stage = Stage::kL3;
    st.classes = kAllClasses;
    const Scene s = compose_l3(fixture::small_catalog(), counts, st, fixture::setup(seed));
    const auto vis = oracle::repaint_visible(s);
    const auto lvis = oracle::repaint_layer_visible(s);
    bool buried = false;
    for (const auto& inst : s.instances) {
      ASSERT_EQ(vis[inst.instance_id], inst.visible_area);
      ASSERT_EQ(lvis[inst.instance_id], inst.layer_visible_area);
      ASSERT_GE(inst.layer_visibility(), 0.6);
      if (inst.visibility < 0.6) buried = true;
    }
    EXPECT_TRUE(buried) << "dense L3 scenes should bury some lower-layer particles";
    expect_scene_structure(s);
  }
}

TEST(SceneL3, LowClassesStayInLayerZero) {
  StageSpec st;
  st.stage = Stage::kL3;
  st.classes[0] = st.classes[1] = st.classes[2] = true;
  const Scene s = compose_l3(fixture::small_catalog(), {40, 40, 40, 0, 0, 0, 0, 0}, st, fixture::setup(2, 256));
  for (const auto& inst : s.instances) {
    EXPECT_EQ(inst.layer, 0);
    EXPECT_EQ(inst.visible_area, inst.layer_visible_area);
    EXPECT_GE(inst.visibility, 0.6);
  }
}

TEST(SceneL3, ClassesOutsideStageAreIgnored) {
  StageSpec st;
  st.stage = Stage::kL3;
  st.classes[0] = true;
  const Scene s = compose_l3(fixture::small_catalog(), {10, 10, 0, 0, 0, 0, 0, 10}, st, fixture::setup(2, 256));
  EXPECT_EQ(s.psd_histogram, (ClassCounts{10, 0, 0, 0, 0, 0, 0, 0}));
}

TEST(Scene, DeterministicForSameSeed) {
  StageSpec st;
  st.stage = Stage::kL3;
  st.classes = kAllClasses;
  const ClassCounts c{30, 30, 20, 10, 10, 5, 3, 2};
  const Scene a = compose_scene(fixture::small_catalog(), c, st, fixture::setup(11, 384));
  const Scene b = compose_scene(fixture::small_catalog(), c, st, fixture::setup(11, 384));
  EXPECT_TRUE(a == b);
  const Scene other = compose_scene(fixture::small_catalog(), c, st, fixture::setup(12, 384));
  EXPECT_FALSE(a == other);
}

TEST(Scene, EmptyPoolNamesClass) {
  AssetCatalog cat(0.5);
  try {
    compose_l2(cat, fixture::only(4, 3), StageSpec::single(Stage::kL2, 4), fixture::setup(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptyPool);
    EXPECT_NE(std::string(e.what()).find("class 4"), std::string::npos);
  }
}

TEST(Scene, StageValidation) {
  StageSpec st = StageSpec::single(Stage::kL2, 3);
  st.classes[4] = true;
  EXPECT_THROW(st.validate(), Error);
  StageSpec f = StageSpec::single(Stage::kL2, 3);
  f.visibility_floor = 1.5;
  EXPECT_THROW(f.validate(), Error);
  f.visibility_floor = 0.0;
  EXPECT_THROW(f.validate(), Error);
  EXPECT_THROW(compose_l1(fixture::small_catalog(), fixture::only(3, 1), StageSpec::single(Stage::kL2, 3),
                          fixture::setup(1)),
               Error);
}
