#include <gtest/gtest.h>

#include <random>

#include "scene_fixtures.hpp"

using namespace particlesynth;

namespace {

BinaryMask rect(int w, int h, int x0, int y0, int rw, int rh) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + rh; ++y) {
    for (int x = x0; x < x0 + rw; ++x) m.set(x, y);
  }
  return m;
}

InstanceSet set_of(const std::vector<BinaryMask>& masks, int w = 64, int h = 64) {
  return instances_from_masks(masks, w, h);
}

BinaryMask shifted(const BinaryMask& m, int dx, int dy) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.get(x, y) && out.contains(x + dx, y + dy)) out.set(x + dx, y + dy);
    }
  }
  return out;
}

}  // namespace

TEST(Match, IdenticalSetsMatchPerfectly) {
  const std::vector<BinaryMask> gt{rect(64, 64, 0, 0, 10, 10), rect(64, 64, 20, 20, 15, 5)};
  const MatchResult m = match_instances(set_of(gt), set_of(gt), 0.5);
  ASSERT_EQ(m.pairs.size(), 2u);
  for (const auto& p : m.pairs) EXPECT_EQ(p.iou, 1.0);
  EXPECT_TRUE(m.unmatched_gt.empty());
  EXPECT_TRUE(m.unmatched_pred.empty());
}

TEST(Match, DuplicatePredictionIsFalsePositive) {
  const std::vector<BinaryMask> gt{rect(64, 64, 5, 5, 10, 10)};
  const std::vector<BinaryMask> pred{gt[0], gt[0]};
  const MatchResult m = match_instances(set_of(gt), set_of(pred), 0.5);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].pred, 0u);  // tie goes to the lower prediction index
  EXPECT_EQ(m.unmatched_pred, std::vector<std::size_t>{1});
  EXPECT_DOUBLE_EQ(ap_at(set_of(gt), set_of(pred), 0.5), 0.5);
}

TEST(Match, ScoresBreakTies) {
  const std::vector<BinaryMask> gt{rect(64, 64, 5, 5, 10, 10)};
  InstanceSet pred{64, 64, {}, {}};
  pred.add(rle_encode(gt[0]), 0.2);
  pred.add(rle_encode(gt[0]), 0.9);
  const MatchResult m = match_instances(set_of(gt), pred, 0.5);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].pred, 1u);
}

TEST(Match, ThreeByThreeEqualsAssignmentOracle) {
  std::mt19937_64 gen(12);
  std::uniform_int_distribution<int> shift(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BinaryMask> gt;
    std::vector<BinaryMask> pred;
    for (int i = 0; i < 3; ++i) {
      const BinaryMask b = oracle::random_blob(gen, 20, 20);
      BinaryMask placed(64, 64);
      for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 20; ++x) {
          if (b.get(x, y)) placed.set(2 + 21 * i + x, 20 + y);
        }
      }
      gt.push_back(placed);
      pred.push_back(shifted(placed, shift(gen), shift(gen)));
    }
    std::shuffle(pred.begin(), pred.end(), gen);
    for (double t : {1e-12, 0.5, 0.7, 0.9}) {
      const MatchResult m = match_instances(set_of(gt), set_of(pred), t);
      const oracle::Assignment best = oracle::best_assignment(gt, pred, t);
      double sum = 0.0;
      for (const auto& p : m.pairs) {
        sum += p.iou;
        EXPECT_NEAR(p.iou, oracle::pixel_iou(gt[p.gt], pred[p.pred]), 1e-12);
      }
      EXPECT_EQ(m.pairs.size(), best.matched);
      EXPECT_NEAR(sum, best.iou_sum, 1e-9);
    }
  }
}

TEST(Match, DimensionMismatch) {
  EXPECT_THROW(match_instances(InstanceSet{10, 10, {}, {}}, InstanceSet{10, 11, {}, {}}, 0.5), Error);
}

TEST(MeanIou, Cases) {
  const std::vector<BinaryMask> gt{rect(64, 64, 0, 0, 10, 10), rect(64, 64, 30, 30, 10, 10)};
  EXPECT_EQ(mean_iou(set_of(gt), set_of(gt)), 1.0);
  EXPECT_EQ(mean_iou(set_of(gt), set_of({})), 0.0);
  EXPECT_DOUBLE_EQ(mean_iou(set_of(gt), set_of({gt[0]})), 0.5);
  try {
    mean_iou(set_of({}), set_of(gt));
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "no ground truth");
  }
}

TEST(MeanIou, BackgroundPredictionChangesApNotMiou) {
  const std::vector<BinaryMask> gt{rect(64, 64, 0, 0, 10, 10)};
  const std::vector<BinaryMask> with_bg{gt[0], rect(64, 64, 50, 50, 5, 5)};
  EXPECT_EQ(mean_iou(set_of(gt), set_of(with_bg)), mean_iou(set_of(gt), set_of(gt)));
  EXPECT_LT(ap_at(set_of(gt), set_of(with_bg), 0.5), ap_at(set_of(gt), set_of(gt), 0.5));
}

TEST(Ap, PointFiveFiveIou) {
  const std::vector<BinaryMask> gt{rect(64, 64, 0, 0, 20, 10)};
  const std::vector<BinaryMask> pred{rect(64, 64, 0, 0, 11, 10)};
  ASSERT_DOUBLE_EQ(oracle::pixel_iou(gt[0], pred[0]), 0.55);
  EXPECT_EQ(ap_at(set_of(gt), set_of(pred), 0.5), 1.0);
  EXPECT_EQ(ap_at(set_of(gt), set_of(pred), 0.6), 0.0);
}

TEST(Ap, NoPredictions) {
  const std::vector<BinaryMask> gt{rect(64, 64, 0, 0, 5, 5), rect(64, 64, 10, 10, 5, 5)};
  EXPECT_EQ(ap_at(set_of(gt), set_of({}), 0.5), 0.0);
  EXPECT_THROW(ap_at(set_of(gt), set_of({}), 1.0), Error);
}

TEST(Ap, MonotoneAndPermutationInvariant) {
  std::mt19937_64 gen(13);
  std::uniform_int_distribution<int> shift(-3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<BinaryMask> gt;
    std::vector<BinaryMask> pred;
    for (int i = 0; i < 6; ++i) {
      const BinaryMask b = oracle::random_blob(gen, 64, 64);
      gt.push_back(b);
      if (gen() % 4) pred.push_back(shifted(b, shift(gen), shift(gen)));
    }
    const ImageMetrics im = evaluate_image(set_of(gt), set_of(pred));
    for (std::size_t i = 1; i < kApThresholds.size(); ++i) EXPECT_GE(im.at[i - 1].ap, im.at[i].ap);
    std::shuffle(pred.begin(), pred.end(), gen);
    const ImageMetrics shuffled = evaluate_image(set_of(gt), set_of(pred));
    EXPECT_DOUBLE_EQ(shuffled.miou, im.miou);
    for (std::size_t i = 0; i < kApThresholds.size(); ++i) EXPECT_EQ(shuffled.at[i].ap, im.at[i].ap);
  }
}

TEST(Report, AggregateIsUnweightedMean) {
  const std::vector<BinaryMask> a{rect(64, 64, 0, 0, 10, 10)};
  const std::vector<BinaryMask> b{rect(64, 64, 0, 0, 10, 10), rect(64, 64, 30, 30, 10, 10)};
  std::vector<ImageMetrics> ims{evaluate_image(set_of(a), set_of(a), "a"), evaluate_image(set_of(b), set_of({b[0]}), "b")};
  const MetricsReport r = aggregate(ims, "toy");
  EXPECT_DOUBLE_EQ(r.miou, (1.0 + 0.5) / 2);
  EXPECT_DOUBLE_EQ(r.ap[0], (1.0 + 0.5) / 2);
  EXPECT_EQ(r.segmented, 2u);
  EXPECT_EQ(r.gt_total, 3u);
  EXPECT_NE(report_table(r).find("mAP90"), std::string::npos);
  EXPECT_NE(report_to_tsv(r).find("ALL\t3\t2\t75.00"), std::string::npos);
}

TEST(Dataset, GraymapIdentityAndMismatch) {
  const auto gt_dir = oracle::scratch_dir("eval_gt");
  const auto pred_dir = oracle::scratch_dir("eval_pred");
  StageSpec st;
  st.stage = Stage::kL3;
  st.classes = kAllClasses;
  for (int i = 0; i < 3; ++i) {
    const Scene s = compose_l3(fixture::small_catalog(), {40, 30, 20, 10, 5, 2, 1, 1}, st, fixture::setup(i + 1, 256));
    const std::string id = "img_" + std::to_string(i);
    write_pgm(rasterize_graymap(s), gt_dir / (id + ".pgm"));
    write_metadata(make_record(s, id, "L3-heavy", 0.5), gt_dir / (id + ".json"));
    fs::copy_file(gt_dir / (id + ".pgm"), pred_dir / (id + ".pgm"));
  }
  write_file(gt_dir / "manifest.json", "{}");
  const MetricsReport r = evaluate_dataset(gt_dir, pred_dir);
  EXPECT_EQ(r.images.size(), 3u);
  EXPECT_EQ(r.miou, 1.0);
  for (double ap : r.ap) EXPECT_EQ(ap, 1.0);

  // amodal ground truth scored against its own RLE documents
  const auto amodal_pred = oracle::scratch_dir("eval_pred_amodal");
  for (int i = 0; i < 3; ++i) {
    const std::string id = "img_" + std::to_string(i);
    fs::copy_file(gt_dir / (id + ".json"), amodal_pred / (id + ".json"));
  }
  EvaluateOptions amodal;
  amodal.amodal = true;
  amodal.jobs = 2;
  const MetricsReport ra = evaluate_dataset(gt_dir, amodal_pred, amodal);
  EXPECT_EQ(ra.miou, 1.0);

  fs::remove(pred_dir / "img_1.pgm");
  try {
    evaluate_dataset(gt_dir, pred_dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kMismatch);
    EXPECT_NE(std::string(e.what()).find("img_1"), std::string::npos);
  }
  write_file(pred_dir / "img_1.pgm", "P5\n1 1\n");
  try {
    evaluate_dataset(gt_dir, pred_dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("img_1"), std::string::npos);
  }
}

TEST(Dataset, EmptyPredictionsScoreZero) {
  const auto gt_dir = oracle::scratch_dir("eval_gt0");
  const auto pred_dir = oracle::scratch_dir("eval_pred0");
  GraymapMask g(32, 32);
  g.ids[10] = 1;
  g.ids[500] = 2;
  write_pgm(g, gt_dir / "a.pgm");
  write_pgm(GraymapMask(32, 32), pred_dir / "a.pgm");
  const MetricsReport r = evaluate_dataset(gt_dir, pred_dir);
  EXPECT_EQ(r.miou, 0.0);
  for (double ap : r.ap) EXPECT_EQ(ap, 0.0);
}

TEST(Dataset, PredictionJsonSchema) {
  const auto dir = oracle::scratch_dir("eval_json");
  write_file(dir / "p.json", R"({"width": 4, "height": 4, "instances": [{"rle": [[0, 3]], "score": 0.5}]})");
  const InstanceSet s = read_prediction_json(dir / "p.json");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.scores, std::vector<double>{0.5});
  write_file(dir / "q.json", R"({"width": 4, "height": 4, "instances": [{"rle": [[14, 3]]}]})");
  EXPECT_THROW(read_prediction_json(dir / "q.json"), Error);
  write_file(dir / "r.json", R"({"width": 4, "height": 4, "instances": [{"rle": [[0, 1]], "score": 1}, {"rle": [[5, 1]]}]})");
  EXPECT_THROW(read_prediction_json(dir / "r.json"), Error);
}
