#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "particlesynth/augment.hpp"
#include "particlesynth/catalog.hpp"
#include "particlesynth/error.hpp"
#include "particlesynth/psd.hpp"
#include "particlesynth/raster.hpp"
#include "particlesynth/rng.hpp"
#include "particlesynth/sieve.hpp"

namespace particlesynth {

enum class Stage { kL1, kL2, kL3 };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kL1: return "L1";
    case Stage::kL2: return "L2";
    case Stage::kL3: return "L3";
  }
  return "?";
}

struct StageSpec {
  Stage stage = Stage::kL2;
  ClassSet classes{};
  double visibility_floor = 0.60;
  int max_place_attempts = 100;
  int l1_saturation_patience = 200;

  int class_count() const {
    int n = 0;
    for (bool b : classes) n += b ? 1 : 0;
    return n;
  }

  /// The single class of an L1/L2 stage.
  int single_class() const {
    for (int k = 0; k < kNumClasses; ++k) {
      if (classes[k]) return k + 1;
    }
    return 0;
  }

  void validate() const {
    if ((stage == Stage::kL1 || stage == Stage::kL2) && class_count() != 1) {
      throw Error(Errc::kConfig, std::string("stage.classes: ") + stage_name(stage) + " requires exactly one class");
    }
    if (stage == Stage::kL3 && class_count() == 0) throw Error(Errc::kConfig, "stage.classes: L3 needs a class");
    if (!(visibility_floor > 0.0 && visibility_floor <= 1.0)) {
      throw Error(Errc::kConfig, "stage.visibility_floor must be in (0, 1]");
    }
    if (max_place_attempts < 1) throw Error(Errc::kConfig, "stage.max_place_attempts must be >= 1");
    if (l1_saturation_patience < 1) throw Error(Errc::kConfig, "stage.l1_saturation_patience must be >= 1");
  }

  static StageSpec single(Stage s, int class_index) {
    StageSpec spec;
    spec.stage = s;
    spec.classes[static_cast<std::size_t>(size_class(class_index).index - 1)] = true;
    return spec;
  }
};

/// One particle on the canvas. The amodal mask is kept in the sprite frame;
/// its canvas-frame footprint is the same mask translated by `position`.
struct PlacedInstance {
  std::uint32_t instance_id = 0;  // 1-based, dense in paint order
  std::string asset_id;
  int size_class = 0;
  AugmentParams augment;
  PixelPoint position;            // top-left anchor in canvas pixels
  int layer = 0;
  std::uint32_t z = 0;            // global paint order, 0 first
  BinaryMask mask;
  std::uint64_t amodal_area = 0;
  std::uint64_t visible_area = 0;        // not covered by any later instance
  std::uint64_t layer_visible_area = 0;  // not covered by later instances of the same layer
  double visibility = 0.0;

  BBox bbox() const {
    return {position.x, position.y, position.x + mask.width(), position.y + mask.height()};
  }
  double layer_visibility() const {
    return amodal_area == 0 ? 0.0 : static_cast<double>(layer_visible_area) / static_cast<double>(amodal_area);
  }

  friend bool operator==(const PlacedInstance&, const PlacedInstance&) = default;
};

struct Scene {
  int width = 0;
  int height = 0;
  std::string background_id;
  Stage stage = Stage::kL2;
  std::uint64_t seed = 0;
  std::vector<PlacedInstance> instances;
  ClassCounts requested{};
  ClassCounts psd_histogram{};  // realized
  ClassCounts shortfall{};

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Canvas and seeding shared by every compose call for one image.
struct SceneSetup {
  int width = 4096;
  int height = 4096;
  std::uint64_t master_seed = 0;
  std::uint64_t image_index = 0;
  AugmentConfig augment;
  std::string background_id;
};

namespace detail {

struct RowRun {
  int y;
  int x0;
  int x1;  // exclusive
};

inline std::vector<RowRun> row_runs(const BinaryMask& mask) {
  std::vector<RowRun> runs;
  for (int y = 0; y < mask.height(); ++y) {
    int x = 0;
    while (x < mask.width()) {
      if (!mask.get(x, y)) {
        ++x;
        continue;
      }
      const int b = x;
      while (x < mask.width() && mask.get(x, y)) ++x;
      runs.push_back({y, b, x});
    }
  }
  return runs;
}

/// Smallest v with v / area >= floor under double division, so the stored
/// visibility compares exactly as the floor check did.
inline std::uint64_t min_visible_pixels(std::uint64_t area, double floor) {
  auto ok = [&](std::uint64_t v) { return static_cast<double>(v) / static_cast<double>(area) >= floor; };
  auto v = static_cast<std::uint64_t>(std::ceil(floor * static_cast<double>(area)));
  while (v > 0 && ok(v - 1)) --v;
  while (v <= area && !ok(v)) ++v;
  return v;
}

/// Sequential placement state: the owner (topmost instance) of every canvas
/// pixel plus running visible-pixel counts.
class Compositor {
 public:
  enum class Rule { kNoOverlap, kVisibilityFloor };

  Compositor(int width, int height, double floor)
      : width_(width), height_(height), floor_(floor), owner_(static_cast<std::size_t>(width) * height, 0) {}

  /// Tries to paint `runs` at `pos` on `layer`. Under kVisibilityFloor the
  /// candidate is refused when any same-layer instance it covers would drop
  /// below the floor; lower layers may be covered without limit.
  bool try_place(const std::vector<RowRun>& runs, PixelPoint pos, int layer, Rule rule) {
    touched_.clear();
    bool ok = true;
    for (const RowRun& r : runs) {
      const std::size_t base = static_cast<std::size_t>(pos.y + r.y) * width_ + pos.x;
      for (int x = r.x0; x < r.x1 && ok; ++x) {
        const std::uint32_t o = owner_[base + x];
        if (o == 0) continue;
        if (rule == Rule::kNoOverlap) {
          ok = false;
          break;
        }
        Slot& s = slots_[o - 1];
        if (s.layer != layer) continue;
        if (s.loss == 0) touched_.push_back(o);
        ++s.loss;
        if (s.layer_visible - s.loss < s.min_visible) ok = false;
      }
      if (!ok) break;
    }
    for (std::uint32_t o : touched_) slots_[o - 1].loss = 0;
    if (!ok) return false;

    const auto id = static_cast<std::uint32_t>(slots_.size() + 1);
    std::uint64_t area = 0;
    for (const RowRun& r : runs) {
      const std::size_t base = static_cast<std::size_t>(pos.y + r.y) * width_ + pos.x;
      for (int x = r.x0; x < r.x1; ++x) {
        std::uint32_t& o = owner_[base + x];
        if (o != 0) {
          Slot& s = slots_[o - 1];
          --s.visible;
          if (s.layer == layer) --s.layer_visible;
        }
        o = id;
        ++area;
      }
    }
    slots_.push_back({layer, area, area, area, min_visible_pixels(area, floor_), 0});
    return true;
  }

  std::uint64_t visible(std::size_t i) const { return slots_[i].visible; }
  std::uint64_t layer_visible(std::size_t i) const { return slots_[i].layer_visible; }
  std::size_t placed() const { return slots_.size(); }

 private:
  struct Slot {
    int layer;
    std::uint64_t amodal;
    std::uint64_t visible;
    std::uint64_t layer_visible;
    std::uint64_t min_visible;
    std::uint64_t loss;  // scratch during try_place
  };

  int width_;
  int height_;
  double floor_;
  std::vector<std::uint32_t> owner_;
  std::vector<Slot> slots_;
  std::vector<std::uint32_t> touched_;
};

inline const std::vector<ParticleAsset>& require_pool(const AssetCatalog& catalog, int class_index) {
  const auto& pool = catalog.pool(class_index);
  if (pool.empty()) {
    throw Error(Errc::kEmptyPool, "empty asset pool for class " + std::to_string(class_index));
  }
  return pool;
}

inline PlacedInstance make_instance(const ParticleAsset& asset, const AugmentParams& params, BinaryMask mask,
                                    PixelPoint pos, int layer) {
  PlacedInstance inst;
  inst.asset_id = asset.asset_id;
  inst.size_class = asset.size_class.index;
  inst.augment = params;
  inst.position = pos;
  inst.layer = layer;
  inst.mask = std::move(mask);
  return inst;
}

inline bool sample_anchor(Rng& rng, const BinaryMask& mask, int width, int height, PixelPoint& out) {
  if (mask.width() > width || mask.height() > height) return false;
  out.x = static_cast<int>(rng.uniform_int(0, width - mask.width()));
  out.y = static_cast<int>(rng.uniform_int(0, height - mask.height()));
  return true;
}

inline void finalize(Scene& scene, const Compositor& comp) {
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    PlacedInstance& inst = scene.instances[i];
    inst.instance_id = static_cast<std::uint32_t>(i + 1);
    inst.z = static_cast<std::uint32_t>(i);
    inst.amodal_area = inst.mask.area();
    inst.visible_area = comp.visible(i);
    inst.layer_visible_area = comp.layer_visible(i);
    inst.visibility = static_cast<double>(inst.visible_area) / static_cast<double>(inst.amodal_area);
    ++scene.psd_histogram[static_cast<std::size_t>(inst.size_class - 1)];
  }
}

inline Scene start_scene(const SceneSetup& setup, Stage stage, const ClassCounts& counts) {
  if (setup.width <= 0 || setup.height <= 0) throw Error(Errc::kConfig, "canvas dimensions must be positive");
  Scene scene;
  scene.width = setup.width;
  scene.height = setup.height;
  scene.background_id = setup.background_id;
  scene.stage = stage;
  scene.seed = derive_instance_seed(setup.master_seed, setup.image_index, kSceneStream);
  scene.requested = counts;
  return scene;
}

/// Visibility-floor placement shared by L2 and L3: slots are painted in the
/// given order, each retrying its position up to max_place_attempts times.
inline Scene compose_layered(const AssetCatalog& catalog, const ClassCounts& counts, const StageSpec& stage,
                             const SceneSetup& setup) {
  Scene scene = start_scene(setup, stage.stage, counts);
  std::array<std::vector<int>, kNumLayers> by_layer;
  for (int k = 1; k <= kNumClasses; ++k) {
    const std::uint64_t n = counts[static_cast<std::size_t>(k - 1)];
    if (n == 0) continue;
    require_pool(catalog, k);
    by_layer[static_cast<std::size_t>(layer_of_class(k))].insert(
        by_layer[static_cast<std::size_t>(layer_of_class(k))].end(), n, k);
  }
  Rng scene_rng(scene.seed);
  std::vector<int> slots;
  for (auto& layer : by_layer) {
    scene_rng.shuffle(std::span<int>(layer));
    slots.insert(slots.end(), layer.begin(), layer.end());
  }

  Compositor comp(setup.width, setup.height, stage.visibility_floor);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const int cls = slots[k];
    const auto& pool = catalog.pool(cls);
    Rng rng(derive_instance_seed(setup.master_seed, setup.image_index, k));
    const ParticleAsset& asset = pool[rng.below(pool.size())];
    const AugmentParams params = sample_params(rng, setup.augment);
    BinaryMask mask = apply_mask(asset, params);
    const auto runs = row_runs(mask);
    const int layer = layer_of_class(cls);
    bool placed = false;
    for (int attempt = 0; attempt < stage.max_place_attempts && !placed; ++attempt) {
      PixelPoint pos;
      if (!sample_anchor(rng, mask, setup.width, setup.height, pos)) break;
      if (comp.try_place(runs, pos, layer, Compositor::Rule::kVisibilityFloor)) {
        scene.instances.push_back(make_instance(asset, params, std::move(mask), pos, layer));
        placed = true;
      }
    }
    if (!placed) ++scene.shortfall[static_cast<std::size_t>(cls - 1)];
  }
  finalize(scene, comp);
  return scene;
}

}  // namespace detail

/// Dart throwing without overlap: each dart draws an asset, augmentation and
/// position, and is dropped if it touches a placed particle. Stops when the
/// budget is spent or after l1_saturation_patience consecutive misses; the
/// unspent budget is recorded as shortfall.
inline Scene compose_l1(const AssetCatalog& catalog, const ClassCounts& counts, const StageSpec& stage,
                        const SceneSetup& setup) {
  stage.validate();
  if (stage.stage != Stage::kL1) throw Error(Errc::kConfig, "compose_l1 needs an L1 stage");
  const int cls = stage.single_class();
  const std::uint64_t budget = counts[static_cast<std::size_t>(cls - 1)];
  ClassCounts requested{};
  requested[static_cast<std::size_t>(cls - 1)] = budget;
  Scene scene = detail::start_scene(setup, Stage::kL1, requested);
  const auto& pool = detail::require_pool(catalog, cls);
  const int layer = layer_of_class(cls);

  detail::Compositor comp(setup.width, setup.height, 1.0);
  int misses = 0;
  for (std::uint64_t dart = 0; scene.instances.size() < budget && misses < stage.l1_saturation_patience; ++dart) {
    Rng rng(derive_instance_seed(setup.master_seed, setup.image_index, dart));
    const ParticleAsset& asset = pool[rng.below(pool.size())];
    const AugmentParams params = sample_params(rng, setup.augment);
    BinaryMask mask = apply_mask(asset, params);
    PixelPoint pos;
    if (detail::sample_anchor(rng, mask, setup.width, setup.height, pos) &&
        comp.try_place(detail::row_runs(mask), pos, layer, detail::Compositor::Rule::kNoOverlap)) {
      scene.instances.push_back(detail::make_instance(asset, params, std::move(mask), pos, layer));
      misses = 0;
    } else {
      ++misses;
    }
  }
  scene.shortfall[static_cast<std::size_t>(cls - 1)] = budget - scene.instances.size();
  detail::finalize(scene, comp);
  return scene;
}

/// Single class with bounded occlusion: every accepted placement keeps all
/// earlier particles at or above the visibility floor.
inline Scene compose_l2(const AssetCatalog& catalog, const ClassCounts& counts, const StageSpec& stage,
                        const SceneSetup& setup) {
  stage.validate();
  if (stage.stage != Stage::kL2) throw Error(Errc::kConfig, "compose_l2 needs an L2 stage");
  const int cls = stage.single_class();
  ClassCounts only{};
  only[static_cast<std::size_t>(cls - 1)] = counts[static_cast<std::size_t>(cls - 1)];
  return detail::compose_layered(catalog, only, stage, setup);
}

/// Mixed classes stacked bottom-up by layer. The floor applies within a
/// layer; higher layers may bury lower ones completely.
inline Scene compose_l3(const AssetCatalog& catalog, const ClassCounts& counts, const StageSpec& stage,
                        const SceneSetup& setup) {
  stage.validate();
  if (stage.stage != Stage::kL3) throw Error(Errc::kConfig, "compose_l3 needs an L3 stage");
  ClassCounts allowed{};
  for (int k = 0; k < kNumClasses; ++k) allowed[k] = stage.classes[k] ? counts[k] : 0;
  return detail::compose_layered(catalog, allowed, stage, setup);
}

inline Scene compose_scene(const AssetCatalog& catalog, const ClassCounts& counts, const StageSpec& stage,
                           const SceneSetup& setup) {
  switch (stage.stage) {
    case Stage::kL1: return compose_l1(catalog, counts, stage, setup);
    case Stage::kL2: return compose_l2(catalog, counts, stage, setup);
    case Stage::kL3: return compose_l3(catalog, counts, stage, setup);
  }
  throw Error(Errc::kConfig, "unknown stage");
}

}  // namespace particlesynth
