#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "particlesynth/augment.hpp"
#include "particlesynth/error.hpp"
#include "particlesynth/io.hpp"
#include "particlesynth/json_util.hpp"
#include "particlesynth/psd.hpp"
#include "particlesynth/scene.hpp"

namespace particlesynth {

enum class Occlusion { kHeavy, kLow };

struct BackgroundSpec {
  enum class Kind { kFlat, kBelt, kTexture };
  Kind kind = Kind::kBelt;
  std::array<std::uint8_t, 3> color{40, 40, 42};
  std::uint64_t seed = 1;
  int tile = 512;
  std::string path;

  std::string id() const {
    switch (kind) {
      case Kind::kFlat:
        return "flat-" + std::to_string(color[0]) + "-" + std::to_string(color[1]) + "-" + std::to_string(color[2]);
      case Kind::kBelt: return "belt-" + std::to_string(seed) + "-" + std::to_string(tile);
      case Kind::kTexture: return "texture-" + fs::path(path).filename().string();
    }
    return "?";
  }
};

/// Everything needed to generate one dataset. Parsed from a JSON document;
/// the shipped presets under presets/ are instances of this schema.
struct GenerationConfig {
  std::string name = "dataset";
  std::uint64_t master_seed = 0;
  int image_count = 1;
  int width = 4096;
  int height = 4096;
  std::optional<double> mm_per_px;
  std::string catalog;
  StageSpec stage;
  Occlusion occlusion = Occlusion::kHeavy;
  PsdSpec psd;
  std::optional<ClassCounts> counts_by_class;  // L1/L2: per-image count for the image's class
  double count_scale = 1.0;
  AugmentConfig augment;
  BackgroundSpec background;
  std::optional<std::array<std::uint64_t, 2>> expected_count_range;
  std::string output_dir;
  unsigned jobs = 1;

  std::vector<int> class_list() const {
    std::vector<int> out;
    for (int k = 0; k < kNumClasses; ++k) {
      if (stage.classes[k]) out.push_back(k + 1);
    }
    return out;
  }

  void validate() const {
    if (name.empty()) throw Error(Errc::kConfig, "name: must not be empty");
    if (image_count < 1) throw Error(Errc::kConfig, "image_count: must be >= 1");
    if (width < 1 || height < 1) throw Error(Errc::kConfig, "canvas: dimensions must be positive");
    if (mm_per_px && !(*mm_per_px > 0.0)) throw Error(Errc::kConfig, "mm_per_px: must be positive");
    if (!(count_scale > 0.0)) throw Error(Errc::kConfig, "count_scale: must be positive");
    if (stage.class_count() == 0) throw Error(Errc::kConfig, "stage.classes: must name at least one class");
    if (!(stage.visibility_floor > 0.0 && stage.visibility_floor <= 1.0)) {
      throw Error(Errc::kConfig, "stage.visibility_floor: must be in (0, 1]");
    }
    if (stage.max_place_attempts < 1) throw Error(Errc::kConfig, "stage.max_place_attempts: must be >= 1");
    if (stage.l1_saturation_patience < 1) throw Error(Errc::kConfig, "stage.l1_saturation_patience: must be >= 1");
    try {
      psd.validate();
      augment.validate();
    } catch (const Error& e) {
      throw Error(Errc::kConfig, e.what());
    }
    if (background.kind == BackgroundSpec::Kind::kTexture && background.path.empty()) {
      throw Error(Errc::kConfig, "background.path: required for texture backgrounds");
    }
    if (background.kind == BackgroundSpec::Kind::kBelt && background.tile < 1) {
      throw Error(Errc::kConfig, "background.tile: must be positive");
    }
    if (expected_count_range && (*expected_count_range)[0] > (*expected_count_range)[1]) {
      throw Error(Errc::kConfig, "expected_count_range: lower bound exceeds upper bound");
    }
  }

  /// Per-image stage and requested counts; a pure function of the config
  /// and the image index. L1/L2 datasets cycle through the listed classes.
  std::pair<StageSpec, ClassCounts> plan_image(std::uint64_t image_index) const {
    const auto classes = class_list();
    auto scaled = [&](std::uint64_t n) {
      if (n == 0) return n;
      return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * count_scale)));
    };
    ClassCounts counts{};
    StageSpec spec = stage;
    if (stage.stage == Stage::kL3) {
      Rng rng(derive_instance_seed(master_seed, image_index, kPsdStream));
      counts = sample_psd(psd, rng, stage.classes);
      for (auto& c : counts) c = scaled(c);
    } else {
      const int cls = classes[image_index % classes.size()];
      spec = StageSpec::single(stage.stage, cls);
      spec.visibility_floor = stage.visibility_floor;
      spec.max_place_attempts = stage.max_place_attempts;
      spec.l1_saturation_patience = stage.l1_saturation_patience;
      std::uint64_t n = psd.kind == PsdSpec::Kind::kExplicit ? psd.counts[static_cast<std::size_t>(cls - 1)]
                                                             : psd.total_count;
      if (counts_by_class) n = (*counts_by_class)[static_cast<std::size_t>(cls - 1)];
      counts[static_cast<std::size_t>(cls - 1)] = scaled(n);
    }
    if (occlusion == Occlusion::kLow && stage.stage != Stage::kL1) counts = pair_occlusion_variant(counts);
    return {spec, counts};
  }
};

namespace detail {

inline ClassCounts parse_counts(const jsonutil::Json& arr, const std::string& path) {
  if (!arr.is_array() || arr.size() != kNumClasses) throw Error(Errc::kConfig, path + ": expected 8 counts");
  ClassCounts c{};
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!arr[i].is_number_unsigned()) throw Error(Errc::kConfig, path + "[" + std::to_string(i) + "]: expected count");
    c[i] = arr[i].get<std::uint64_t>();
  }
  return c;
}

}  // namespace detail

/// Parses and validates; every error names the offending field.
inline GenerationConfig config_from_json(const jsonutil::Json& j) {
  using jsonutil::get;
  using jsonutil::get_or;
  GenerationConfig c;
  try {
    const std::string root = "$";
    c.name = get_or<std::string>(j, "name", root, c.name);
    c.master_seed = get_or<std::uint64_t>(j, "master_seed", root, 0);
    c.image_count = get_or<int>(j, "image_count", root, 1);
    if (j.contains("canvas")) {
      c.width = get<int>(j["canvas"], "width", "canvas");
      c.height = get<int>(j["canvas"], "height", "canvas");
    }
    if (j.contains("mm_per_px")) c.mm_per_px = get<double>(j, "mm_per_px", root);
    c.catalog = get_or<std::string>(j, "catalog", root, "");
    c.output_dir = get_or<std::string>(j, "output_dir", root, "");
    c.jobs = get_or<unsigned>(j, "jobs", root, 1u);
    c.count_scale = get_or<double>(j, "count_scale", root, 1.0);

    const auto& st = jsonutil::member(j, "stage", root);
    const std::string stage = get<std::string>(st, "stage", "stage");
    if (stage == "L1") c.stage.stage = Stage::kL1;
    else if (stage == "L2") c.stage.stage = Stage::kL2;
    else if (stage == "L3") c.stage.stage = Stage::kL3;
    else throw Error(Errc::kConfig, "stage.stage: expected L1, L2 or L3, got " + stage);
    const auto& classes = jsonutil::array(st, "classes", "stage");
    for (std::size_t i = 0; i < classes.size(); ++i) {
      const std::string at = "stage.classes[" + std::to_string(i) + "]";
      if (!classes[i].is_number_integer()) throw Error(Errc::kConfig, at + ": expected class index");
      const int k = classes[i].get<int>();
      if (k < 1 || k > kNumClasses) throw Error(Errc::kConfig, at + ": class must be in 1..8");
      c.stage.classes[static_cast<std::size_t>(k - 1)] = true;
    }
    c.stage.visibility_floor = get_or<double>(st, "visibility_floor", "stage", 0.60);
    c.stage.max_place_attempts = get_or<int>(st, "max_place_attempts", "stage", 100);
    c.stage.l1_saturation_patience = get_or<int>(st, "l1_saturation_patience", "stage", 200);
    const std::string occ = get_or<std::string>(st, "occlusion", "stage", "heavy");
    if (occ == "heavy") c.occlusion = Occlusion::kHeavy;
    else if (occ == "low") c.occlusion = Occlusion::kLow;
    else throw Error(Errc::kConfig, "stage.occlusion: expected heavy or low, got " + occ);

    if (j.contains("psd")) {
      const auto& p = j["psd"];
      const std::string kind = get<std::string>(p, "kind", "psd");
      if (kind == "uniform") c.psd.kind = PsdSpec::Kind::kUniform;
      else if (kind == "gaussian") c.psd.kind = PsdSpec::Kind::kGaussian;
      else if (kind == "random") c.psd.kind = PsdSpec::Kind::kRandom;
      else if (kind == "explicit") c.psd.kind = PsdSpec::Kind::kExplicit;
      else throw Error(Errc::kConfig, "psd.kind: expected uniform, gaussian, random or explicit, got " + kind);
      if (c.psd.kind == PsdSpec::Kind::kExplicit) {
        c.psd.counts = detail::parse_counts(jsonutil::member(p, "counts", "psd"), "psd.counts");
      } else {
        c.psd.total_count = get<std::uint64_t>(p, "total_count", "psd");
      }
      if (c.psd.kind == PsdSpec::Kind::kGaussian) {
        c.psd.mean_class = get<double>(p, "mean_class", "psd");
        c.psd.std_class = get<double>(p, "std_class", "psd");
      }
    }
    if (j.contains("counts_by_class")) c.counts_by_class = detail::parse_counts(j["counts_by_class"], "counts_by_class");

    if (j.contains("augment")) {
      const auto& a = j["augment"];
      c.augment.flip = get_or<bool>(a, "flip", "augment", true);
      c.augment.rotate = get_or<bool>(a, "rotate", "augment", true);
      c.augment.colorize = get_or<bool>(a, "colorize", "augment", true);
      const std::string mode = get_or<std::string>(a, "rotation_mode", "augment", "any-angle");
      if (mode == "any-angle") c.augment.rotation_mode = RotationMode::kAnyAngle;
      else if (mode == "multiples-of-90") c.augment.rotation_mode = RotationMode::kRightAngles;
      else throw Error(Errc::kConfig, "augment.rotation_mode: expected any-angle or multiples-of-90");
      c.augment.hue_deg = get_or<double>(a, "hue_deg", "augment", 10.0);
      c.augment.saturation = get_or<double>(a, "saturation", "augment", 0.15);
      c.augment.value = get_or<double>(a, "value", "augment", 0.15);
    }
    if (j.contains("background")) {
      const auto& b = j["background"];
      const std::string kind = get<std::string>(b, "kind", "background");
      if (kind == "flat") {
        c.background.kind = BackgroundSpec::Kind::kFlat;
        const auto& col = jsonutil::array(b, "color", "background");
        if (col.size() != 3) throw Error(Errc::kConfig, "background.color: expected [r, g, b]");
        for (std::size_t i = 0; i < 3; ++i) {
          if (!col[i].is_number_unsigned() || col[i].get<unsigned>() > 255) {
            throw Error(Errc::kConfig, "background.color[" + std::to_string(i) + "]: expected 0..255");
          }
          c.background.color[i] = static_cast<std::uint8_t>(col[i].get<unsigned>());
        }
      } else if (kind == "belt") {
        c.background.kind = BackgroundSpec::Kind::kBelt;
        c.background.seed = get_or<std::uint64_t>(b, "seed", "background", 1);
        c.background.tile = get_or<int>(b, "tile", "background", 512);
      } else if (kind == "texture") {
        c.background.kind = BackgroundSpec::Kind::kTexture;
        c.background.path = get<std::string>(b, "path", "background");
      } else {
        throw Error(Errc::kConfig, "background.kind: expected flat, belt or texture, got " + kind);
      }
    }
    if (j.contains("expected_count_range")) {
      const auto& r = j["expected_count_range"];
      if (!r.is_array() || r.size() != 2 || !r[0].is_number_unsigned() || !r[1].is_number_unsigned()) {
        throw Error(Errc::kConfig, "expected_count_range: expected [min, max]");
      }
      c.expected_count_range = std::array<std::uint64_t, 2>{r[0].get<std::uint64_t>(), r[1].get<std::uint64_t>()};
    }
  } catch (const Error& e) {
    if (e.code() == Errc::kConfig) throw;
    throw Error(Errc::kConfig, e.what());
  }
  c.validate();
  return c;
}

inline GenerationConfig load_config(const fs::path& path) {
  try {
    return config_from_json(jsonutil::parse_file(path));
  } catch (const Error& e) {
    throw Error(Errc::kConfig, path.string() + ": " + e.what());
  }
}

/// Canonical form recorded in the manifest. Run-local settings (output
/// directory, catalog location, worker count) are left out so that the
/// dataset bytes depend only on what shapes the data.
inline nlohmann::ordered_json config_to_json(const GenerationConfig& c) {
  using OJ = nlohmann::ordered_json;
  OJ j;
  j["name"] = c.name;
  j["master_seed"] = c.master_seed;
  j["image_count"] = c.image_count;
  j["canvas"] = {{"width", c.width}, {"height", c.height}};
  if (c.mm_per_px) j["mm_per_px"] = *c.mm_per_px;
  OJ classes = OJ::array();
  for (int k : c.class_list()) classes.push_back(k);
  j["stage"] = {{"stage", stage_name(c.stage.stage)},
                {"classes", classes},
                {"visibility_floor", c.stage.visibility_floor},
                {"max_place_attempts", c.stage.max_place_attempts},
                {"l1_saturation_patience", c.stage.l1_saturation_patience},
                {"occlusion", c.occlusion == Occlusion::kLow ? "low" : "heavy"}};
  OJ psd;
  switch (c.psd.kind) {
    case PsdSpec::Kind::kUniform: psd["kind"] = "uniform"; break;
    case PsdSpec::Kind::kGaussian: psd["kind"] = "gaussian"; break;
    case PsdSpec::Kind::kRandom: psd["kind"] = "random"; break;
    case PsdSpec::Kind::kExplicit: psd["kind"] = "explicit"; break;
  }
  if (c.psd.kind == PsdSpec::Kind::kExplicit) {
    psd["counts"] = c.psd.counts;
  } else {
    psd["total_count"] = c.psd.total_count;
  }
  if (c.psd.kind == PsdSpec::Kind::kGaussian) {
    psd["mean_class"] = c.psd.mean_class;
    psd["std_class"] = c.psd.std_class;
  }
  j["psd"] = std::move(psd);
  if (c.counts_by_class) j["counts_by_class"] = *c.counts_by_class;
  j["count_scale"] = c.count_scale;
  j["augment"] = {{"flip", c.augment.flip},
                  {"rotate", c.augment.rotate},
                  {"colorize", c.augment.colorize},
                  {"rotation_mode", c.augment.rotation_mode == RotationMode::kAnyAngle ? "any-angle" : "multiples-of-90"},
                  {"hue_deg", c.augment.hue_deg},
                  {"saturation", c.augment.saturation},
                  {"value", c.augment.value}};
  OJ bg;
  switch (c.background.kind) {
    case BackgroundSpec::Kind::kFlat:
      bg = {{"kind", "flat"}, {"color", c.background.color}};
      break;
    case BackgroundSpec::Kind::kBelt:
      bg = {{"kind", "belt"}, {"seed", c.background.seed}, {"tile", c.background.tile}};
      break;
    case BackgroundSpec::Kind::kTexture:
      bg = {{"kind", "texture"}, {"path", fs::path(c.background.path).filename().string()}};
      break;
  }
  j["background"] = std::move(bg);
  if (c.expected_count_range) j["expected_count_range"] = *c.expected_count_range;
  return j;
}

}  // namespace particlesynth
