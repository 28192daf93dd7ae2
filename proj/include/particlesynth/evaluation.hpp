#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "particlesynth/error.hpp"
#include "particlesynth/io.hpp"
#include "particlesynth/json_util.hpp"
#include "particlesynth/metadata.hpp"
#include "particlesynth/pgm.hpp"
#include "particlesynth/raster.hpp"
#include "particlesynth/rle.hpp"

namespace particlesynth {

/// IoU thresholds reported per image and in aggregate.
inline constexpr std::array<double, 5> kApThresholds{0.50, 0.60, 0.70, 0.80, 0.90};

/// Instance masks on one canvas, stored as sorted run lists.
struct InstanceSet {
  int width = 0;
  int height = 0;
  std::vector<RunList> masks;
  std::vector<double> scores;  // empty, or one confidence per mask

  std::size_t size() const { return masks.size(); }

  void add(RunList runs, std::optional<double> score = std::nullopt) {
    masks.push_back(std::move(runs));
    if (score) scores.push_back(*score);
  }
};

inline InstanceSet instances_from_masks(std::span<const BinaryMask> masks, int width, int height) {
  InstanceSet s{width, height, {}, {}};
  for (const BinaryMask& m : masks) {
    if (m.width() != width || m.height() != height) {
      throw Error(Errc::kDimensionMismatch, "instance mask dimensions differ from canvas");
    }
    s.add(rle_encode(m));
  }
  return s;
}

/// One instance per id present in the graymap, in increasing id order.
inline InstanceSet instances_from_graymap(const GraymapMask& g) {
  std::map<std::uint16_t, RunList> by_id;
  for (int y = 0; y < g.height; ++y) {
    int x = 0;
    while (x < g.width) {
      const std::uint16_t id = g.at(x, y);
      const int b = x;
      while (x < g.width && g.at(x, y) == id) ++x;
      if (id == 0) continue;
      RunList& runs = by_id[id];
      const std::uint64_t start = static_cast<std::uint64_t>(y) * g.width + b;
      if (!runs.empty() && runs.back().start + runs.back().length == start) {
        runs.back().length += static_cast<std::uint64_t>(x - b);
      } else {
        runs.push_back({start, static_cast<std::uint64_t>(x - b)});
      }
    }
  }
  InstanceSet s{g.width, g.height, {}, {}};
  for (auto& [id, runs] : by_id) s.add(std::move(runs));
  return s;
}

/// Amodal ground truth from a metadata record.
inline InstanceSet instances_from_record(const ImageRecord& r) {
  InstanceSet s{r.width, r.height, {}, {}};
  for (const InstanceRecord& e : r.instances) s.add(e.rle);
  return s;
}

struct MatchPair {
  std::size_t gt = 0;
  std::size_t pred = 0;
  double iou = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
  double threshold = 0.0;
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;
};

namespace detail {

inline BBox runs_bbox(const RunList& runs, int width) {
  if (runs.empty()) return {};
  BBox b{width, std::numeric_limits<int>::max(), 0, 0};
  for (const Run& r : runs) {
    const int y = static_cast<int>(r.start / static_cast<std::uint64_t>(width));
    const int x0 = static_cast<int>(r.start % static_cast<std::uint64_t>(width));
    const int y_last = static_cast<int>((r.start + r.length - 1) / static_cast<std::uint64_t>(width));
    b.y0 = std::min(b.y0, y);
    b.y1 = std::max(b.y1, y_last + 1);
    if (y_last != y) {
      b.x0 = 0;
      b.x1 = width;
    } else {
      b.x0 = std::min(b.x0, x0);
      b.x1 = std::max(b.x1, x0 + static_cast<int>(r.length));
    }
  }
  return b;
}

/// Every (gt, pred) pair with positive overlap, with its IoU.
inline std::vector<MatchPair> overlapping_pairs(const InstanceSet& gt, const InstanceSet& pred) {
  if (gt.width != pred.width || gt.height != pred.height) {
    throw Error(Errc::kDimensionMismatch, "ground truth is " + std::to_string(gt.width) + "x" +
                                              std::to_string(gt.height) + ", prediction is " +
                                              std::to_string(pred.width) + "x" + std::to_string(pred.height));
  }
  constexpr int kCell = 64;
  const int gw = (gt.width + kCell - 1) / kCell;
  const int gh = (gt.height + kCell - 1) / kCell;
  std::vector<std::vector<std::size_t>> grid(static_cast<std::size_t>(gw) * gh);
  std::vector<BBox> gt_boxes(gt.size());
  std::vector<std::uint64_t> gt_areas(gt.size());
  for (std::size_t g = 0; g < gt.size(); ++g) {
    gt_boxes[g] = runs_bbox(gt.masks[g], gt.width);
    gt_areas[g] = run_area(gt.masks[g]);
    if (gt_boxes[g].empty()) continue;
    for (int cy = gt_boxes[g].y0 / kCell; cy <= (gt_boxes[g].y1 - 1) / kCell; ++cy) {
      for (int cx = gt_boxes[g].x0 / kCell; cx <= (gt_boxes[g].x1 - 1) / kCell; ++cx) {
        grid[static_cast<std::size_t>(cy) * gw + cx].push_back(g);
      }
    }
  }
  std::vector<MatchPair> out;
  std::vector<std::size_t> candidates;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    const BBox pb = runs_bbox(pred.masks[p], pred.width);
    if (pb.empty()) continue;
    candidates.clear();
    for (int cy = pb.y0 / kCell; cy <= (pb.y1 - 1) / kCell; ++cy) {
      for (int cx = pb.x0 / kCell; cx <= (pb.x1 - 1) / kCell; ++cx) {
        const auto& cell = grid[static_cast<std::size_t>(cy) * gw + cx];
        candidates.insert(candidates.end(), cell.begin(), cell.end());
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    const std::uint64_t p_area = run_area(pred.masks[p]);
    for (std::size_t g : candidates) {
      if (!gt_boxes[g].intersects(pb)) continue;
      const std::uint64_t inter = run_intersection(gt.masks[g], pred.masks[p]);
      if (inter == 0) continue;
      const std::uint64_t uni = gt_areas[g] + p_area - inter;
      out.push_back({g, p, static_cast<double>(inter) / static_cast<double>(uni)});
    }
  }
  return out;
}

/// Descending IoU, then lower gt index, then higher confidence (when
/// present), then lower prediction index.
inline void sort_candidates(std::vector<MatchPair>& pairs, const InstanceSet& pred) {
  const bool scored = !pred.scores.empty();
  std::sort(pairs.begin(), pairs.end(), [&](const MatchPair& a, const MatchPair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.gt != b.gt) return a.gt < b.gt;
    if (scored && pred.scores[a.pred] != pred.scores[b.pred]) return pred.scores[a.pred] > pred.scores[b.pred];
    return a.pred < b.pred;
  });
}

/// Greedy one-to-one acceptance over pre-sorted candidates. A threshold of 0
/// admits any positive overlap.
inline MatchResult greedy_match(const std::vector<MatchPair>& sorted, std::size_t n_gt, std::size_t n_pred,
                                double threshold) {
  MatchResult m;
  m.threshold = threshold;
  std::vector<bool> gt_used(n_gt, false);
  std::vector<bool> pred_used(n_pred, false);
  for (const MatchPair& c : sorted) {
    if (c.iou < threshold) break;
    if (gt_used[c.gt] || pred_used[c.pred]) continue;
    gt_used[c.gt] = true;
    pred_used[c.pred] = true;
    m.pairs.push_back(c);
  }
  for (std::size_t g = 0; g < n_gt; ++g) {
    if (!gt_used[g]) m.unmatched_gt.push_back(g);
  }
  for (std::size_t p = 0; p < n_pred; ++p) {
    if (!pred_used[p]) m.unmatched_pred.push_back(p);
  }
  return m;
}

}  // namespace detail

inline MatchResult match_instances(const InstanceSet& gt, const InstanceSet& pred, double threshold) {
  auto pairs = detail::overlapping_pairs(gt, pred);
  detail::sort_candidates(pairs, pred);
  return detail::greedy_match(pairs, gt.size(), pred.size(), threshold);
}

/// Sum of matched IoUs over the ground-truth count; unmatched GT count as 0.
inline double mean_iou(const InstanceSet& gt, const InstanceSet& pred) {
  if (gt.size() == 0) throw Error(Errc::kNoGroundTruth, "no ground truth");
  const MatchResult m = match_instances(gt, pred, 0.0);
  double sum = 0.0;
  for (const MatchPair& p : m.pairs) sum += p.iou;
  return sum / static_cast<double>(gt.size());
}

/// TP / (TP + FP + FN); 1 when both sets are empty.
inline double detection_jaccard(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t d = tp + fp + fn;
  return d == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(d);
}

inline double ap_at(const InstanceSet& gt, const InstanceSet& pred, double t) {
  if (!(t > 0.0 && t < 1.0)) throw Error(Errc::kInvalidArgument, "IoU threshold must be in (0, 1)");
  const MatchResult m = match_instances(gt, pred, t);
  return detection_jaccard(m.pairs.size(), m.unmatched_pred.size(), m.unmatched_gt.size());
}

struct ThresholdMetrics {
  double threshold = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double ap = 0.0;
};

struct ImageMetrics {
  std::string image_id;
  std::size_t gt_count = 0;
  std::size_t pred_count = 0;
  std::size_t segmented = 0;  // GT matched at IoU 0.5
  double miou = 0.0;
  std::array<ThresholdMetrics, kApThresholds.size()> at{};
};

inline ImageMetrics evaluate_image(const InstanceSet& gt, const InstanceSet& pred, std::string image_id = {}) {
  if (gt.size() == 0) throw Error(Errc::kNoGroundTruth, "no ground truth" + (image_id.empty() ? "" : " in " + image_id));
  auto pairs = detail::overlapping_pairs(gt, pred);
  detail::sort_candidates(pairs, pred);
  ImageMetrics im;
  im.image_id = std::move(image_id);
  im.gt_count = gt.size();
  im.pred_count = pred.size();
  const MatchResult all = detail::greedy_match(pairs, gt.size(), pred.size(), 0.0);
  double sum = 0.0;
  for (const MatchPair& p : all.pairs) sum += p.iou;
  im.miou = sum / static_cast<double>(gt.size());
  for (std::size_t i = 0; i < kApThresholds.size(); ++i) {
    const MatchResult m = detail::greedy_match(pairs, gt.size(), pred.size(), kApThresholds[i]);
    ThresholdMetrics& tm = im.at[i];
    tm.threshold = kApThresholds[i];
    tm.tp = m.pairs.size();
    tm.fp = m.unmatched_pred.size();
    tm.fn = m.unmatched_gt.size();
    tm.precision = tm.tp + tm.fp == 0 ? 0.0 : static_cast<double>(tm.tp) / static_cast<double>(tm.tp + tm.fp);
    tm.recall = static_cast<double>(tm.tp) / static_cast<double>(gt.size());
    tm.ap = detection_jaccard(tm.tp, tm.fp, tm.fn);
  }
  im.segmented = im.at[0].tp;
  return im;
}

struct MetricsReport {
  std::string label;
  std::vector<ImageMetrics> images;
  std::vector<std::string> skipped;  // images without any ground-truth instance
  double miou = 0.0;
  std::array<double, kApThresholds.size()> ap{};
  std::array<double, kApThresholds.size()> precision{};
  std::array<double, kApThresholds.size()> recall{};
  std::size_t segmented = 0;
  std::size_t gt_total = 0;
};

/// Unweighted mean over images.
inline MetricsReport aggregate(std::vector<ImageMetrics> images, std::string label = {}) {
  MetricsReport r;
  r.label = std::move(label);
  r.images = std::move(images);
  if (r.images.empty()) return r;
  const auto n = static_cast<double>(r.images.size());
  for (const ImageMetrics& im : r.images) {
    r.miou += im.miou / n;
    for (std::size_t i = 0; i < kApThresholds.size(); ++i) {
      r.ap[i] += im.at[i].ap / n;
      r.precision[i] += im.at[i].precision / n;
      r.recall[i] += im.at[i].recall / n;
    }
    r.segmented += im.segmented;
    r.gt_total += im.gt_count;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Dataset-level evaluation
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  bool amodal = false;  // score against RLE amodal masks instead of the graymap
  unsigned jobs = 1;
  std::string label;
};

/// Reads a prediction document: {"width", "height", "instances": [{"rle":
/// [[start, length], ...], "score"?: x}, ...]}. Image metadata documents
/// satisfy this schema too.
inline InstanceSet read_prediction_json(const fs::path& path) {
  const auto j = jsonutil::parse_file(path);
  const std::string root = path.filename().string();
  InstanceSet s;
  s.width = jsonutil::get<int>(j, "width", root);
  s.height = jsonutil::get<int>(j, "height", root);
  if (s.width <= 0 || s.height <= 0) throw jsonutil::schema_error(root, "canvas dimensions must be positive");
  const auto& arr = jsonutil::array(j, "instances", root);
  bool any_score = false;
  bool all_score = true;
  const std::uint64_t total = static_cast<std::uint64_t>(s.width) * s.height;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string at = root + ".instances[" + std::to_string(i) + "]";
    RunList runs = parse_rle(jsonutil::member(arr[i], "rle", at), at + ".rle");
    std::uint64_t cursor = 0;
    for (const Run& r : runs) {
      if (r.length == 0 || r.start < cursor || r.start + r.length > total) {
        throw jsonutil::schema_error(at + ".rle", "runs must be sorted, disjoint and inside the canvas");
      }
      cursor = r.start + r.length;
    }
    std::optional<double> score;
    if (arr[i].contains("score")) score = jsonutil::get<double>(arr[i], "score", at);
    any_score = any_score || score.has_value();
    all_score = all_score && score.has_value();
    s.add(std::move(runs), score);
  }
  if (any_score && !all_score) throw jsonutil::schema_error(root, "scores must be given for all instances or none");
  return s;
}

namespace detail {

inline bool is_image_artifact(const fs::path& p) {
  const std::string stem = p.stem().string();
  return stem != "manifest" && stem != "report" && stem != "stats" && p.filename().string().find(".tmp") == std::string::npos;
}

/// Image ids found in a directory: stems of files with the given extension.
inline std::set<std::string> image_ids(const fs::path& dir, const std::string& ext) {
  std::set<std::string> ids;
  if (!fs::is_directory(dir)) throw Error(Errc::kIo, "not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext && is_image_artifact(entry.path())) {
      ids.insert(entry.path().stem().string());
    }
  }
  return ids;
}

inline InstanceSet load_prediction(const fs::path& pred_dir, const std::string& id) {
  const fs::path pgm = pred_dir / (id + ".pgm");
  const fs::path json = pred_dir / (id + ".json");
  try {
    if (fs::exists(pgm)) return instances_from_graymap(read_pgm(pgm));
    return read_prediction_json(json);
  } catch (const Error& e) {
    throw Error(e.code(), "unreadable prediction for " + id + ": " + e.what());
  }
}

}  // namespace detail

/// Scores every image in `gt_dir` (a generated dataset) against the
/// same-named prediction in `pred_dir` (<id>.pgm graymap or <id>.json RLE
/// document). The id sets must agree exactly.
inline MetricsReport evaluate_dataset(const fs::path& gt_dir, const fs::path& pred_dir, const EvaluateOptions& opt = {}) {
  const auto gt_ids = detail::image_ids(gt_dir, ".pgm");
  if (gt_ids.empty()) throw Error(Errc::kMismatch, "no ground-truth graymaps in " + gt_dir.string());
  auto pred_ids = detail::image_ids(pred_dir, ".pgm");
  for (const auto& id : detail::image_ids(pred_dir, ".json")) pred_ids.insert(id);

  std::string missing;
  std::string extra;
  for (const auto& id : gt_ids) {
    if (!pred_ids.contains(id)) missing += (missing.empty() ? "" : ", ") + id;
  }
  for (const auto& id : pred_ids) {
    if (!gt_ids.contains(id)) extra += (extra.empty() ? "" : ", ") + id;
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "image id sets differ";
    if (!missing.empty()) msg += "; missing predictions: " + missing;
    if (!extra.empty()) msg += "; predictions without ground truth: " + extra;
    throw Error(Errc::kMismatch, msg);
  }

  const std::vector<std::string> ids(gt_ids.begin(), gt_ids.end());
  std::vector<std::optional<ImageMetrics>> results(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      try {
        const InstanceSet gt = opt.amodal ? instances_from_record(read_metadata(gt_dir / (ids[i] + ".json")))
                                          : instances_from_graymap(read_pgm(gt_dir / (ids[i] + ".pgm")));
        const InstanceSet pred = detail::load_prediction(pred_dir, ids[i]);
        if (gt.size() > 0) results[i] = evaluate_image(gt, pred, ids[i]);
        else if (pred.width != gt.width || pred.height != gt.height) {
          throw Error(Errc::kDimensionMismatch, "prediction for " + ids[i] + " has wrong dimensions");
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(ids.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<ImageMetrics> images;
  std::vector<std::string> skipped;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (results[i]) images.push_back(std::move(*results[i]));
    else skipped.push_back(ids[i]);
  }
  MetricsReport report = aggregate(std::move(images), opt.label);
  report.skipped = std::move(skipped);
  return report;
}

inline nlohmann::ordered_json report_to_json(const MetricsReport& r) {
  using OJ = nlohmann::ordered_json;
  auto thresholds = [](const auto& values) {
    OJ o;
    for (std::size_t i = 0; i < kApThresholds.size(); ++i) {
      o["t" + std::to_string(static_cast<int>(kApThresholds[i] * 100 + 0.5))] = values[i];
    }
    return o;
  };
  OJ j;
  j["label"] = r.label;
  j["image_count"] = r.images.size();
  j["skipped_images"] = r.skipped;
  OJ agg;
  agg["miou"] = r.miou;
  agg["ap"] = thresholds(r.ap);
  agg["precision"] = thresholds(r.precision);
  agg["recall"] = thresholds(r.recall);
  agg["segmented"] = r.segmented;
  agg["gt_total"] = r.gt_total;
  j["aggregate"] = std::move(agg);
  OJ per = OJ::array();
  for (const ImageMetrics& im : r.images) {
    OJ o;
    o["image_id"] = im.image_id;
    o["gt_count"] = im.gt_count;
    o["pred_count"] = im.pred_count;
    o["segmented"] = im.segmented;
    o["miou"] = im.miou;
    OJ ts = OJ::array();
    for (const ThresholdMetrics& tm : im.at) {
      ts.push_back({{"threshold", tm.threshold},
                    {"tp", tm.tp},
                    {"fp", tm.fp},
                    {"fn", tm.fn},
                    {"precision", tm.precision},
                    {"recall", tm.recall},
                    {"ap", tm.ap}});
    }
    o["thresholds"] = std::move(ts);
    per.push_back(std::move(o));
  }
  j["images"] = std::move(per);
  return j;
}

/// Tab-separated rows: one per image, then the aggregate. Percentages.
inline std::string report_to_tsv(const MetricsReport& r) {
  std::string out = "image\tgt\tsegmented\tmIoU\tmAP50\tmAP60\tmAP70\tmAP80\tmAP90\n";
  char buf[256];
  for (const ImageMetrics& im : r.images) {
    std::snprintf(buf, sizeof buf, "%s\t%zu\t%zu\t%.2f\t%.2f\t%.2f\t%.2f\t%.2f\t%.2f\n", im.image_id.c_str(),
                  im.gt_count, im.segmented, 100 * im.miou, 100 * im.at[0].ap, 100 * im.at[1].ap, 100 * im.at[2].ap,
                  100 * im.at[3].ap, 100 * im.at[4].ap);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "ALL\t%zu\t%zu\t%.2f\t%.2f\t%.2f\t%.2f\t%.2f\t%.2f\n", r.gt_total, r.segmented,
                100 * r.miou, 100 * r.ap[0], 100 * r.ap[1], 100 * r.ap[2], 100 * r.ap[3], 100 * r.ap[4]);
  out += buf;
  return out;
}

/// Aggregate line in the column order Data | mIoU | mAP50 .. mAP90.
inline std::string report_table(const MetricsReport& r) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8s %8s %8s %8s\n", "Data", "mIoU", "mAP50", "mAP60", "mAP70",
                "mAP80", "mAP90");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n",
                r.label.empty() ? "dataset" : r.label.c_str(), 100 * r.miou, 100 * r.ap[0], 100 * r.ap[1],
                100 * r.ap[2], 100 * r.ap[3], 100 * r.ap[4]);
  out += buf;
  std::snprintf(buf, sizeof buf, "images: %zu  segmented/total GT @50: %zu/%zu\n", r.images.size(), r.segmented,
                r.gt_total);
  out += buf;
  return out;
}

}  // namespace particlesynth
