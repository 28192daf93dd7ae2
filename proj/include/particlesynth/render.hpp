#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "particlesynth/augment.hpp"
#include "particlesynth/catalog.hpp"
#include "particlesynth/error.hpp"
#include "particlesynth/io.hpp"
#include "particlesynth/pgm.hpp"
#include "particlesynth/raster.hpp"
#include "particlesynth/rng.hpp"
#include "particlesynth/scene.hpp"

namespace particlesynth {

/// Conveyor-belt backdrop: a flat colour or a texture tiled toroidally
/// over the canvas.
struct Background {
  std::string id = "flat";
  std::array<std::uint8_t, 3> color{40, 40, 42};
  RgbImage texture;  // used when non-empty

  static Background flat(std::array<std::uint8_t, 3> c, std::string id = "flat") {
    Background b;
    b.id = std::move(id);
    b.color = c;
    return b;
  }
  static Background textured(RgbImage tex, std::string id) {
    Background b;
    b.id = std::move(id);
    b.texture = std::move(tex);
    return b;
  }

  RgbImage render(int width, int height) const {
    RgbImage out(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::uint8_t* src =
            texture.width() > 0 ? texture.px(x % texture.width(), y % texture.height()) : color.data();
        std::copy(src, src + 3, out.px(x, y));
      }
    }
    return out;
  }
};

/// Procedural rubber-belt texture: dark grey with fine grain and faint
/// streaks along the belt direction. Tiles seamlessly in x.
inline RgbImage make_belt_texture(int width, int height, std::uint64_t seed) {
  RgbImage tex(width, height);
  Rng rng(seed);
  std::vector<double> streak(static_cast<std::size_t>(height));
  for (double& s : streak) s = rng.uniform(-6.0, 6.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double grain = rng.uniform(-9.0, 9.0);
      const double base = 46.0 + streak[static_cast<std::size_t>(y)] + grain;
      std::uint8_t* px = tex.px(x, y);
      px[0] = static_cast<std::uint8_t>(std::clamp(base, 0.0, 255.0));
      px[1] = static_cast<std::uint8_t>(std::clamp(base + 1.0, 0.0, 255.0));
      px[2] = static_cast<std::uint8_t>(std::clamp(base + 3.0, 0.0, 255.0));
    }
  }
  return tex;
}

/// Topmost instance id per pixel, 0 where no particle lies.
inline GraymapMask rasterize_graymap(const Scene& scene) {
  if (scene.instances.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(Errc::kOverflow, "scene has " + std::to_string(scene.instances.size()) +
                                     " instances; graymap ids are limited to 65535");
  }
  GraymapMask g(scene.width, scene.height);
  for (const PlacedInstance& inst : scene.instances) {
    for (int y = 0; y < inst.mask.height(); ++y) {
      std::uint16_t* row = g.ids.data() + static_cast<std::size_t>(inst.position.y + y) * g.width + inst.position.x;
      for (int x = 0; x < inst.mask.width(); ++x) {
        if (inst.mask.get(x, y)) row[x] = static_cast<std::uint16_t>(inst.instance_id);
      }
    }
  }
  return g;
}

struct CompositeOptions {
  bool feather = false;  // blend the 1 px particle rim 50/50 with what lies below
};

/// Paints the background, then every instance in z order with hard mask
/// compositing. Sprites are regenerated from the catalog by re-applying the
/// stored augmentation.
inline RgbImage composite_rgb(const Scene& scene, const Background& background, const AssetCatalog& catalog,
                              const CompositeOptions& options = {}) {
  RgbImage out = background.render(scene.width, scene.height);
  for (const PlacedInstance& inst : scene.instances) {
    const ParticleAsset* asset = catalog.find(inst.asset_id);
    if (!asset) throw Error(Errc::kMissingAsset, "missing asset: " + inst.asset_id);
    const AugmentedParticle aug = apply(*asset, inst.augment);
    if (aug.mask != inst.mask) {
      throw Error(Errc::kInvariant, "asset " + inst.asset_id + " no longer reproduces instance " +
                                        std::to_string(inst.instance_id));
    }
    for (int y = 0; y < aug.mask.height(); ++y) {
      for (int x = 0; x < aug.mask.width(); ++x) {
        if (!aug.mask.get(x, y)) continue;
        std::uint8_t* dst = out.px(inst.position.x + x, inst.position.y + y);
        const std::uint8_t* src = aug.sprite.px(x, y);
        const bool rim = options.feather &&
                         (!aug.mask.at_or_zero(x - 1, y) || !aug.mask.at_or_zero(x + 1, y) ||
                          !aug.mask.at_or_zero(x, y - 1) || !aug.mask.at_or_zero(x, y + 1));
        for (int k = 0; k < 3; ++k) {
          dst[k] = rim ? static_cast<std::uint8_t>((dst[k] + src[k] + 1) / 2) : src[k];
        }
      }
    }
  }
  return out;
}

/// Stable, well-spread colour for an instance id (hash-based hue).
inline std::array<std::uint8_t, 3> palette_color(std::uint32_t id) {
  const std::uint64_t h = detail::splitmix64(id);
  const double hue = static_cast<double>(h % 3600) / 10.0;
  const double sat = 0.65 + 0.35 * static_cast<double>((h >> 16) % 100) / 100.0;
  const double val = 0.75 + 0.25 * static_cast<double>((h >> 32) % 100) / 100.0;
  double r, g, b;
  detail::hsv_to_rgb(hue, sat, val, r, g, b);
  return {static_cast<std::uint8_t>(std::lround(r * 255.0)), static_cast<std::uint8_t>(std::lround(g * 255.0)),
          static_cast<std::uint8_t>(std::lround(b * 255.0))};
}

/// Alpha-composites instance colours over the image; background pixels
/// (id 0) are left untouched.
inline RgbImage overlay(const RgbImage& image, const GraymapMask& graymap, double alpha = 0.5) {
  if (image.width() != graymap.width || image.height() != graymap.height) {
    throw Error(Errc::kDimensionMismatch, "image and graymap dimensions differ");
  }
  RgbImage out = image;
  for (int y = 0; y < graymap.height; ++y) {
    for (int x = 0; x < graymap.width; ++x) {
      const std::uint16_t id = graymap.at(x, y);
      if (id == 0) continue;
      const auto c = palette_color(id);
      std::uint8_t* px = out.px(x, y);
      for (int k = 0; k < 3; ++k) {
        px[k] = static_cast<std::uint8_t>(std::lround((1.0 - alpha) * px[k] + alpha * c[static_cast<std::size_t>(k)]));
      }
    }
  }
  return out;
}

}  // namespace particlesynth
