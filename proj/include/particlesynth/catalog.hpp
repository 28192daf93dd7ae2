#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "particlesynth/error.hpp"
#include "particlesynth/io.hpp"
#include "particlesynth/particle.hpp"
#include "particlesynth/pgm.hpp"
#include "particlesynth/png.hpp"
#include "particlesynth/sieve.hpp"

namespace particlesynth {

/// Per-class pools of refined assets, all imported at one mm/px scale.
/// Immutable once built; shared read-only by the generator threads.
class AssetCatalog {
 public:
  AssetCatalog() = default;
  explicit AssetCatalog(double mm_per_px) : mm_per_px_(mm_per_px) {
    if (!(mm_per_px > 0.0)) throw Error(Errc::kInvalidArgument, "mm_per_px must be positive");
  }

  double mm_per_px() const { return mm_per_px_; }

  void add(ParticleAsset asset) {
    if (asset.asset_id.empty()) throw Error(Errc::kInvalidArgument, "asset id must not be empty");
    if (index_.contains(asset.asset_id)) {
      throw Error(Errc::kInvalidArgument, "duplicate asset id: " + asset.asset_id);
    }
    const int cls = asset.size_class.index;
    auto& pool = pools_.at(static_cast<std::size_t>(cls - 1));
    index_.emplace(asset.asset_id, std::make_pair(cls, pool.size()));
    pool.push_back(std::move(asset));
  }

  const std::vector<ParticleAsset>& pool(int class_index) const {
    return pools_.at(static_cast<std::size_t>(size_class(class_index).index - 1));
  }

  const ParticleAsset* find(const std::string& asset_id) const {
    const auto it = index_.find(asset_id);
    if (it == index_.end()) return nullptr;
    return &pools_[static_cast<std::size_t>(it->second.first - 1)][it->second.second];
  }

  const ParticleAsset& at(const std::string& asset_id) const {
    const ParticleAsset* a = find(asset_id);
    if (!a) throw Error(Errc::kMissingAsset, "asset not in catalog: " + asset_id);
    return *a;
  }

  std::array<std::size_t, kNumClasses> counts() const {
    std::array<std::size_t, kNumClasses> c{};
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = pools_[i].size();
    return c;
  }

  std::size_t size() const { return index_.size(); }

  friend bool operator==(const AssetCatalog& a, const AssetCatalog& b) {
    return a.mm_per_px_ == b.mm_per_px_ && a.pools_ == b.pools_;
  }

 private:
  double mm_per_px_ = 0.0;
  std::array<std::vector<ParticleAsset>, kNumClasses> pools_;
  std::map<std::string, std::pair<int, std::size_t>> index_;
};

inline constexpr int kCatalogFormatVersion = 1;

inline fs::path class_dir(const fs::path& root, int class_index) {
  return root / ("class_" + std::to_string(class_index));
}

/// Layout: class_<k>/<id>.png (RGBA sprite), class_<k>/<id>.pgm (mask) and
/// index.json with ids, sizes, classes and the mm/px scale.
inline void catalog_save(const AssetCatalog& catalog, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(Errc::kIo, "cannot create catalog directory " + root.string() + ": " + ec.message());

  nlohmann::ordered_json index;
  index["format_version"] = kCatalogFormatVersion;
  index["mm_per_px"] = catalog.mm_per_px();
  nlohmann::ordered_json assets = nlohmann::ordered_json::array();
  for (int k = 1; k <= kNumClasses; ++k) {
    const auto& pool = catalog.pool(k);
    if (pool.empty()) continue;
    fs::create_directories(class_dir(root, k), ec);
    if (ec) throw Error(Errc::kIo, "cannot create " + class_dir(root, k).string());
    for (const ParticleAsset& a : pool) {
      write_png(a.sprite, class_dir(root, k) / (a.asset_id + ".png"));
      write_mask_pgm(a.mask, class_dir(root, k) / (a.asset_id + ".pgm"));
      nlohmann::ordered_json entry;
      entry["asset_id"] = a.asset_id;
      entry["class"] = k;
      entry["size_mm"] = a.size_mm;
      entry["width"] = a.mask.width();
      entry["height"] = a.mask.height();
      entry["provenance"] = a.provenance;
      assets.push_back(std::move(entry));
    }
  }
  index["assets"] = std::move(assets);
  write_file(root / "index.json", index.dump(2) + "\n");
}

/// Loads a catalog written by catalog_save. When `expected_mm_per_px` is
/// given it must match the scale recorded in the index.
inline AssetCatalog catalog_load(const fs::path& root, std::optional<double> expected_mm_per_px = std::nullopt) {
  const fs::path index_path = root / "index.json";
  if (!fs::exists(index_path)) throw Error(Errc::kIo, "missing catalog index: " + index_path.string());
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(read_file(index_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kSchema, "corrupt catalog index " + index_path.string() + ": " + e.what());
  }
  auto field_error = [&](const std::string& path) {
    return Error(Errc::kSchema, "corrupt catalog index " + index_path.string() + ": bad field " + path);
  };
  if (!index.is_object() || !index.contains("mm_per_px") || !index["mm_per_px"].is_number()) {
    throw field_error("mm_per_px");
  }
  if (!index.contains("assets") || !index["assets"].is_array()) throw field_error("assets");
  const double scale = index["mm_per_px"].get<double>();
  if (!(scale > 0.0)) throw field_error("mm_per_px");
  if (expected_mm_per_px && *expected_mm_per_px != scale) {
    throw Error(Errc::kMismatch, "mm_per_px mismatch: catalog " + index_path.string() + " records " +
                                     std::to_string(scale) + ", requested " + std::to_string(*expected_mm_per_px));
  }

  AssetCatalog catalog(scale);
  const auto& assets = index["assets"];
  for (std::size_t i = 0; i < assets.size(); ++i) {
    const auto& e = assets[i];
    const std::string at = "assets[" + std::to_string(i) + "]";
    if (!e.is_object()) throw field_error(at);
    if (!e.contains("asset_id") || !e["asset_id"].is_string()) throw field_error(at + ".asset_id");
    if (!e.contains("class") || !e["class"].is_number_integer()) throw field_error(at + ".class");
    if (!e.contains("size_mm") || !e["size_mm"].is_number()) throw field_error(at + ".size_mm");
    const int cls = e["class"].get<int>();
    if (cls < 1 || cls > kNumClasses) throw field_error(at + ".class");

    ParticleAsset a;
    a.asset_id = e["asset_id"].get<std::string>();
    a.size_mm = e["size_mm"].get<double>();
    a.provenance = e.value("provenance", std::string{});
    a.size_class = size_class(cls);
    if (classify_size(a.size_mm).index != cls) {
      throw Error(Errc::kInvariant, "asset " + a.asset_id + " size " + std::to_string(a.size_mm) +
                                        " mm does not belong to class " + std::to_string(cls));
    }
    const fs::path png_path = class_dir(root, cls) / (a.asset_id + ".png");
    const fs::path pgm_path = class_dir(root, cls) / (a.asset_id + ".pgm");
    if (!fs::exists(png_path)) throw Error(Errc::kIo, "missing catalog file: " + png_path.string());
    if (!fs::exists(pgm_path)) throw Error(Errc::kIo, "missing catalog file: " + pgm_path.string());
    a.sprite = read_png_rgba(png_path);
    a.mask = read_mask_pgm(pgm_path);
    if (a.sprite.width() != a.mask.width() || a.sprite.height() != a.mask.height()) {
      throw Error(Errc::kDimensionMismatch, "sprite and mask dimensions differ for " + png_path.string());
    }
    for (int y = 0; y < a.mask.height(); ++y) {
      for (int x = 0; x < a.mask.width(); ++x) {
        if ((a.sprite.px(x, y)[3] != 0) != a.mask.get(x, y)) {
          throw Error(Errc::kInvariant, "sprite coverage disagrees with mask in " + png_path.string());
        }
      }
    }
    catalog.add(std::move(a));
  }
  return catalog;
}

}  // namespace particlesynth
