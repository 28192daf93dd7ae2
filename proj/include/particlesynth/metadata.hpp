#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "particlesynth/augment.hpp"
#include "particlesynth/error.hpp"
#include "particlesynth/io.hpp"
#include "particlesynth/json_util.hpp"
#include "particlesynth/psd.hpp"
#include "particlesynth/rle.hpp"
#include "particlesynth/scene.hpp"

namespace particlesynth {

inline constexpr const char* kImageSchema = "particlesynth.image/1";

struct InstanceRecord {
  std::uint32_t instance_id = 0;
  std::string asset_id;
  int size_class = 0;
  int layer = 0;
  std::uint32_t z = 0;
  BBox bbox;
  std::uint64_t amodal_area = 0;
  std::uint64_t visible_area = 0;
  std::uint64_t layer_visible_area = 0;
  double visibility = 0.0;
  AugmentParams augment;
  RunList rle;  // amodal mask, row-major over the canvas

  friend bool operator==(const InstanceRecord&, const InstanceRecord&) = default;
};

/// Per-image metadata document.
struct ImageRecord {
  std::string image_id;
  std::string stage;
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;
  double mm_per_px = 0.0;
  std::string background_id;
  ClassCounts requested{};
  ClassCounts psd_histogram{};
  ClassCounts shortfall{};
  std::vector<InstanceRecord> instances;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

inline ImageRecord make_record(const Scene& scene, std::string image_id, std::string stage_label, double mm_per_px) {
  ImageRecord r;
  r.image_id = std::move(image_id);
  r.stage = std::move(stage_label);
  r.seed = scene.seed;
  r.width = scene.width;
  r.height = scene.height;
  r.mm_per_px = mm_per_px;
  r.background_id = scene.background_id;
  r.requested = scene.requested;
  r.psd_histogram = scene.psd_histogram;
  r.shortfall = scene.shortfall;
  r.instances.reserve(scene.instances.size());
  for (const PlacedInstance& inst : scene.instances) {
    InstanceRecord e;
    e.instance_id = inst.instance_id;
    e.asset_id = inst.asset_id;
    e.size_class = inst.size_class;
    e.layer = inst.layer;
    e.z = inst.z;
    e.bbox = inst.bbox();
    e.amodal_area = inst.amodal_area;
    e.visible_area = inst.visible_area;
    e.layer_visible_area = inst.layer_visible_area;
    e.visibility = inst.visibility;
    e.augment = inst.augment;
    e.rle = rle_encode_placed(inst.mask, inst.position.x, inst.position.y, scene.width);
    r.instances.push_back(std::move(e));
  }
  return r;
}

/// Checks the cross-field invariants every written or read record must hold.
inline void validate_record(const ImageRecord& r) {
  auto fail = [&](const std::string& what) { return Error(Errc::kInvariant, r.image_id + ": " + what); };
  if (r.width <= 0 || r.height <= 0) throw fail("canvas dimensions must be positive");
  ClassCounts hist{};
  for (std::size_t i = 0; i < r.instances.size(); ++i) {
    const InstanceRecord& e = r.instances[i];
    const std::string at = "instances[" + std::to_string(i) + "]";
    if (e.instance_id != i + 1) throw fail(at + ".instance_id must be " + std::to_string(i + 1));
    if (e.size_class < 1 || e.size_class > kNumClasses) throw fail(at + ".class out of range");
    if (e.amodal_area == 0) throw fail(at + ".amodal_area must be positive");
    if (e.visible_area > e.amodal_area || e.layer_visible_area > e.amodal_area) {
      throw fail(at + ": visible area exceeds amodal area");
    }
    if (e.visibility != static_cast<double>(e.visible_area) / static_cast<double>(e.amodal_area)) {
      throw fail(at + ".visibility != visible_area / amodal_area");
    }
    if (run_area(e.rle) != e.amodal_area) throw fail(at + ".rle area != amodal_area");
    ++hist[static_cast<std::size_t>(e.size_class - 1)];
  }
  if (hist != r.psd_histogram) throw fail("psd_histogram disagrees with instance classes");
}

inline nlohmann::ordered_json record_to_json(const ImageRecord& r) {
  using OJ = nlohmann::ordered_json;
  OJ j;
  j["schema"] = kImageSchema;
  j["image_id"] = r.image_id;
  j["stage"] = r.stage;
  j["seed"] = r.seed;
  j["width"] = r.width;
  j["height"] = r.height;
  j["mm_per_px"] = r.mm_per_px;
  j["background_id"] = r.background_id;
  j["requested_counts"] = r.requested;
  j["psd_histogram"] = r.psd_histogram;
  j["shortfall"] = r.shortfall;
  OJ instances = OJ::array();
  for (const InstanceRecord& e : r.instances) {
    OJ o;
    o["instance_id"] = e.instance_id;
    o["asset_id"] = e.asset_id;
    o["class"] = e.size_class;
    o["layer"] = e.layer;
    o["z"] = e.z;
    o["bbox"] = {e.bbox.x0, e.bbox.y0, e.bbox.x1, e.bbox.y1};
    o["amodal_area"] = e.amodal_area;
    o["visible_area"] = e.visible_area;
    o["layer_visible_area"] = e.layer_visible_area;
    o["visibility"] = e.visibility;
    o["augment"] = {{"flip_h", e.augment.flip_h},         {"flip_v", e.augment.flip_v},
                    {"rotation_deg", e.augment.rotation_deg}, {"hue_shift", e.augment.hue_shift},
                    {"sat_scale", e.augment.sat_scale},   {"val_scale", e.augment.val_scale}};
    OJ rle = OJ::array();
    for (const Run& run : e.rle) rle.push_back({run.start, run.length});
    o["rle"] = std::move(rle);
    instances.push_back(std::move(o));
  }
  j["instances"] = std::move(instances);
  return j;
}

namespace detail {

inline ClassCounts read_counts(const jsonutil::Json& obj, const std::string& key, const std::string& path) {
  const auto& arr = jsonutil::array(obj, key, path);
  if (arr.size() != kNumClasses) throw jsonutil::schema_error(path + "." + key, "expected 8 entries");
  ClassCounts c{};
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!arr[i].is_number_unsigned()) {
      throw jsonutil::schema_error(path + "." + key + "[" + std::to_string(i) + "]", "expected non-negative integer");
    }
    c[i] = arr[i].get<std::uint64_t>();
  }
  return c;
}

}  // namespace detail

/// Parses a run list given as [[start, length], ...].
inline RunList parse_rle(const jsonutil::Json& arr, const std::string& path) {
  if (!arr.is_array()) throw jsonutil::schema_error(path, "expected array of [start, length] pairs");
  RunList runs;
  runs.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& p = arr[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() || !p[1].is_number_unsigned()) {
      throw jsonutil::schema_error(path + "[" + std::to_string(i) + "]", "expected [start, length]");
    }
    runs.push_back({p[0].get<std::uint64_t>(), p[1].get<std::uint64_t>()});
  }
  return runs;
}

inline ImageRecord record_from_json(const jsonutil::Json& j, const std::string& name = "$") {
  using jsonutil::get;
  const std::string root = name;
  if (get<std::string>(j, "schema", root) != kImageSchema) {
    throw jsonutil::schema_error(root + ".schema", std::string("expected ") + kImageSchema);
  }
  ImageRecord r;
  r.image_id = get<std::string>(j, "image_id", root);
  r.stage = get<std::string>(j, "stage", root);
  r.seed = get<std::uint64_t>(j, "seed", root);
  r.width = get<int>(j, "width", root);
  r.height = get<int>(j, "height", root);
  r.mm_per_px = get<double>(j, "mm_per_px", root);
  r.background_id = get<std::string>(j, "background_id", root);
  r.requested = detail::read_counts(j, "requested_counts", root);
  r.psd_histogram = detail::read_counts(j, "psd_histogram", root);
  r.shortfall = detail::read_counts(j, "shortfall", root);
  const auto& arr = jsonutil::array(j, "instances", root);
  r.instances.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& o = arr[i];
    const std::string at = root + ".instances[" + std::to_string(i) + "]";
    InstanceRecord e;
    e.instance_id = get<std::uint32_t>(o, "instance_id", at);
    e.asset_id = get<std::string>(o, "asset_id", at);
    e.size_class = get<int>(o, "class", at);
    e.layer = get<int>(o, "layer", at);
    e.z = get<std::uint32_t>(o, "z", at);
    const auto& bb = jsonutil::array(o, "bbox", at);
    if (bb.size() != 4 || !bb[0].is_number_integer() || !bb[1].is_number_integer() || !bb[2].is_number_integer() ||
        !bb[3].is_number_integer()) {
      throw jsonutil::schema_error(at + ".bbox", "expected [x0, y0, x1, y1]");
    }
    e.bbox = {bb[0].get<int>(), bb[1].get<int>(), bb[2].get<int>(), bb[3].get<int>()};
    e.amodal_area = get<std::uint64_t>(o, "amodal_area", at);
    e.visible_area = get<std::uint64_t>(o, "visible_area", at);
    e.layer_visible_area = get<std::uint64_t>(o, "layer_visible_area", at);
    e.visibility = get<double>(o, "visibility", at);
    const auto& aug = jsonutil::member(o, "augment", at);
    const std::string ap = at + ".augment";
    e.augment.flip_h = get<bool>(aug, "flip_h", ap);
    e.augment.flip_v = get<bool>(aug, "flip_v", ap);
    e.augment.rotation_deg = get<double>(aug, "rotation_deg", ap);
    e.augment.hue_shift = get<double>(aug, "hue_shift", ap);
    e.augment.sat_scale = get<double>(aug, "sat_scale", ap);
    e.augment.val_scale = get<double>(aug, "val_scale", ap);
    e.rle = parse_rle(jsonutil::member(o, "rle", at), at + ".rle");
    r.instances.push_back(std::move(e));
  }
  return r;
}

/// Refuses to write a record that breaks its invariants.
inline void write_metadata(const ImageRecord& record, const fs::path& path) {
  validate_record(record);
  write_file(path, record_to_json(record).dump() + "\n");
}

inline ImageRecord read_metadata(const fs::path& path) {
  ImageRecord r = record_from_json(jsonutil::parse_file(path), "$");
  validate_record(r);
  return r;
}

}  // namespace particlesynth
