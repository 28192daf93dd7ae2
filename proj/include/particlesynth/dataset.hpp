#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <atomic>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "particlesynth/catalog.hpp"
#include "particlesynth/config.hpp"
#include "particlesynth/error.hpp"
#include "particlesynth/io.hpp"
#include "particlesynth/metadata.hpp"
#include "particlesynth/pgm.hpp"
#include "particlesynth/png.hpp"
#include "particlesynth/render.hpp"
#include "particlesynth/scene.hpp"

namespace particlesynth {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kManifestSchema = "particlesynth.manifest/1";

inline Background make_background(const BackgroundSpec& spec) {
  switch (spec.kind) {
    case BackgroundSpec::Kind::kFlat: return Background::flat(spec.color, spec.id());
    case BackgroundSpec::Kind::kBelt:
      return Background::textured(make_belt_texture(spec.tile, spec.tile, spec.seed), spec.id());
    case BackgroundSpec::Kind::kTexture: return Background::textured(read_png_rgb(spec.path), spec.id());
  }
  throw Error(Errc::kConfig, "unknown background kind");
}

inline std::string image_id(const GenerationConfig& config, std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%05llu", static_cast<unsigned long long>(index));
  std::string name;
  for (char ch : config.name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_';
    name += ok ? ch : '_';
  }
  return name + buf;
}

/// Composes one image of the dataset. Pure in (config, catalog, index).
inline Scene compose_image(const GenerationConfig& config, const AssetCatalog& catalog, std::uint64_t index) {
  const auto [stage, counts] = config.plan_image(index);
  SceneSetup setup;
  setup.width = config.width;
  setup.height = config.height;
  setup.master_seed = config.master_seed;
  setup.image_index = index;
  setup.augment = config.augment;
  setup.background_id = config.background.id();
  return compose_scene(catalog, counts, stage, setup);
}

inline std::string stage_label(const GenerationConfig& config) {
  std::string s = stage_name(config.stage.stage);
  if (config.stage.stage != Stage::kL1) s += config.occlusion == Occlusion::kLow ? "-low" : "-heavy";
  return s;
}

struct GeneratedImage {
  std::string image_id;
  std::size_t instances = 0;
  ClassCounts requested{};
  ClassCounts shortfall{};
};

/// Writes <id>.png / <id>.pgm / <id>.json for one image.
inline GeneratedImage write_image(const GenerationConfig& config, const AssetCatalog& catalog,
                                  const Background& background, const fs::path& out_dir, std::uint64_t index) {
  const Scene scene = compose_image(config, catalog, index);
  const std::string id = image_id(config, index);
  write_png(composite_rgb(scene, background, catalog), out_dir / (id + ".png"));
  write_pgm(rasterize_graymap(scene), out_dir / (id + ".pgm"));
  write_metadata(make_record(scene, id, stage_label(config), catalog.mm_per_px()), out_dir / (id + ".json"));
  return {id, scene.instances.size(), scene.requested, scene.shortfall};
}

/// Generates the whole dataset, `jobs` images at a time. Output bytes do not
/// depend on `jobs`: every image is seeded from (master_seed, index) alone.
inline nlohmann::ordered_json generate_dataset(const GenerationConfig& config, const AssetCatalog& catalog,
                                               const fs::path& out_dir, unsigned jobs = 1) {
  config.validate();
  if (config.mm_per_px && *config.mm_per_px != catalog.mm_per_px()) {
    throw Error(Errc::kMismatch, "mm_per_px mismatch: config requests " + std::to_string(*config.mm_per_px) +
                                     ", catalog was imported at " + std::to_string(catalog.mm_per_px()));
  }
  for (int k : config.class_list()) {
    if (catalog.pool(k).empty()) {
      throw Error(Errc::kEmptyPool, "empty asset pool for class " + std::to_string(k));
    }
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create output directory " + out_dir.string() + ": " + ec.message());

  const Background background = make_background(config.background);
  const auto n = static_cast<std::size_t>(config.image_count);
  std::vector<GeneratedImage> done(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        done[i] = write_image(config, catalog, background, out_dir, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  using OJ = nlohmann::ordered_json;
  const OJ canonical = config_to_json(config);
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical.dump())));
  OJ manifest;
  manifest["schema"] = kManifestSchema;
  manifest["tool"] = "particlesynth";
  manifest["version"] = kToolVersion;
  manifest["config_hash"] = hash;
  manifest["master_seed"] = config.master_seed;
  manifest["stage"] = stage_label(config);
  manifest["mm_per_px"] = catalog.mm_per_px();
  manifest["catalog_counts"] = catalog.counts();
  manifest["config"] = canonical;
  OJ images = OJ::array();
  for (const GeneratedImage& g : done) {
    images.push_back({{"image_id", g.image_id},
                      {"instances", g.instances},
                      {"requested_counts", g.requested},
                      {"shortfall", g.shortfall}});
  }
  manifest["images"] = std::move(images);
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

// ---------------------------------------------------------------------------
// Dataset statistics
// ---------------------------------------------------------------------------

inline constexpr int kVisibilityBins = 10;

struct ImageStats {
  std::string image_id;
  std::string stage;
  std::size_t instances = 0;
  ClassCounts requested{};
  ClassCounts histogram{};
  ClassCounts shortfall{};
  std::array<std::size_t, kVisibilityBins> visibility_bins{};  // [0,.1) .. [.9,1.0]
  std::size_t fully_visible = 0;
  std::size_t fully_occluded = 0;
  double mean_visibility = 0.0;
  double min_visibility = 1.0;
  double min_layer_visibility = 1.0;
  std::optional<bool> in_expected_range;
};

struct DatasetStats {
  std::vector<ImageStats> images;
  ClassCounts histogram{};
  ClassCounts requested{};
  ClassCounts shortfall{};
  std::array<std::size_t, kVisibilityBins> visibility_bins{};
  std::size_t instances = 0;
  std::size_t fully_visible = 0;
  std::size_t fully_occluded = 0;
  double mean_visibility = 0.0;
};

inline ImageStats image_stats(const ImageRecord& r) {
  ImageStats s;
  s.image_id = r.image_id;
  s.stage = r.stage;
  s.instances = r.instances.size();
  s.requested = r.requested;
  s.histogram = r.psd_histogram;
  s.shortfall = r.shortfall;
  double sum = 0.0;
  for (const InstanceRecord& e : r.instances) {
    const int bin = std::min(kVisibilityBins - 1, static_cast<int>(e.visibility * kVisibilityBins));
    ++s.visibility_bins[static_cast<std::size_t>(bin)];
    if (e.visible_area == e.amodal_area) ++s.fully_visible;
    if (e.visible_area == 0) ++s.fully_occluded;
    sum += e.visibility;
    s.min_visibility = std::min(s.min_visibility, e.visibility);
    s.min_layer_visibility = std::min(
        s.min_layer_visibility, static_cast<double>(e.layer_visible_area) / static_cast<double>(e.amodal_area));
  }
  s.mean_visibility = r.instances.empty() ? 0.0 : sum / static_cast<double>(r.instances.size());
  return s;
}

/// Reads every image document in a dataset directory. When the manifest
/// declares an expected per-image count range, each image is checked
/// against it.
inline DatasetStats compute_stats(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::kIo, "not a directory: " + dir.string());
  std::vector<fs::path> docs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (entry.is_regular_file() && p.extension() == ".json" && fs::exists(fs::path(p).replace_extension(".pgm"))) {
      docs.push_back(p);
    }
  }
  if (docs.empty()) throw Error(Errc::kEmptyInput, "no image metadata in " + dir.string());
  std::sort(docs.begin(), docs.end());

  std::optional<std::array<std::uint64_t, 2>> range;
  if (fs::exists(dir / "manifest.json")) {
    const auto m = jsonutil::parse_file(dir / "manifest.json");
    if (m.contains("config") && m["config"].contains("expected_count_range")) {
      const auto& r = m["config"]["expected_count_range"];
      if (r.is_array() && r.size() == 2) range = std::array<std::uint64_t, 2>{r[0].get<std::uint64_t>(), r[1].get<std::uint64_t>()};
    }
  }

  DatasetStats out;
  double vis_sum = 0.0;
  for (const fs::path& p : docs) {
    ImageStats s = image_stats(read_metadata(p));
    if (range) s.in_expected_range = s.instances >= (*range)[0] && s.instances <= (*range)[1];
    for (int k = 0; k < kNumClasses; ++k) {
      out.histogram[k] += s.histogram[k];
      out.requested[k] += s.requested[k];
      out.shortfall[k] += s.shortfall[k];
    }
    for (int b = 0; b < kVisibilityBins; ++b) out.visibility_bins[b] += s.visibility_bins[b];
    out.instances += s.instances;
    out.fully_visible += s.fully_visible;
    out.fully_occluded += s.fully_occluded;
    vis_sum += s.mean_visibility * static_cast<double>(s.instances);
    out.images.push_back(std::move(s));
  }
  out.mean_visibility = out.instances == 0 ? 0.0 : vis_sum / static_cast<double>(out.instances);
  return out;
}

inline nlohmann::ordered_json stats_to_json(const DatasetStats& s) {
  using OJ = nlohmann::ordered_json;
  OJ j;
  j["image_count"] = s.images.size();
  j["instances"] = s.instances;
  j["psd_histogram"] = s.histogram;
  j["requested_counts"] = s.requested;
  j["shortfall"] = s.shortfall;
  j["visibility_bins"] = s.visibility_bins;
  j["fully_visible"] = s.fully_visible;
  j["fully_occluded"] = s.fully_occluded;
  j["mean_visibility"] = s.mean_visibility;
  OJ images = OJ::array();
  for (const ImageStats& im : s.images) {
    OJ o;
    o["image_id"] = im.image_id;
    o["stage"] = im.stage;
    o["instances"] = im.instances;
    o["psd_histogram"] = im.histogram;
    o["requested_counts"] = im.requested;
    o["shortfall"] = im.shortfall;
    o["visibility_bins"] = im.visibility_bins;
    o["fully_visible"] = im.fully_visible;
    o["fully_occluded"] = im.fully_occluded;
    o["mean_visibility"] = im.mean_visibility;
    o["min_visibility"] = im.min_visibility;
    o["min_layer_visibility"] = im.min_layer_visibility;
    if (im.in_expected_range) o["in_expected_range"] = *im.in_expected_range;
    images.push_back(std::move(o));
  }
  j["images"] = std::move(images);
  return j;
}

inline std::string stats_table(const DatasetStats& s) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %6s", "image", "n");
  out += buf;
  for (int k = 1; k <= kNumClasses; ++k) {
    std::snprintf(buf, sizeof buf, " %6s", ("c" + std::to_string(k)).c_str());
    out += buf;
  }
  out += "   mean_vis  min_vis  occluded\n";
  auto row = [&](const std::string& name, std::size_t n, const ClassCounts& h, double mean, double min_vis,
                 std::size_t occluded) {
    std::snprintf(buf, sizeof buf, "%-24s %6zu", name.c_str(), n);
    out += buf;
    for (auto c : h) {
      std::snprintf(buf, sizeof buf, " %6llu", static_cast<unsigned long long>(c));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "   %8.3f %8.3f %9zu\n", mean, min_vis, occluded);
    out += buf;
  };
  double min_all = 1.0;
  for (const ImageStats& im : s.images) {
    row(im.image_id, im.instances, im.histogram, im.mean_visibility, im.min_visibility, im.fully_occluded);
    min_all = std::min(min_all, im.min_visibility);
  }
  row("ALL", s.instances, s.histogram, s.mean_visibility, min_all, s.fully_occluded);
  return out;
}

}  // namespace particlesynth
