#pragma once

#include <algorithm>
#include <string>
#include <utility>

#include "particlesynth/error.hpp"
#include "particlesynth/geometry.hpp"
#include "particlesynth/raster.hpp"
#include "particlesynth/sieve.hpp"

namespace particlesynth {

/// A refined particle cutout. The sprite's alpha channel is the coverage:
/// 255 on the mask, 0 elsewhere.
struct ParticleAsset {
  std::string asset_id;
  RgbaImage sprite;
  BinaryMask mask;
  double size_mm = 0.0;
  SizeClass size_class;
  std::string provenance;

  friend bool operator==(const ParticleAsset&, const ParticleAsset&) = default;
};

/// Rewrites the sprite's coverage channel from the mask.
inline void stamp_coverage(RgbaImage& sprite, const BinaryMask& mask) {
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) sprite.px(x, y)[3] = mask.get(x, y) ? 255 : 0;
  }
}

/// Refines the raw mask, keeps its largest component, crops to the mask
/// bounds plus a 1 px margin and assigns the sieve class from the
/// farthest-pair size. Colour pixels are copied unchanged.
inline ParticleAsset import_asset(const RgbaImage& cutout, const BinaryMask& raw_mask, double mm_per_px,
                                  const RefineParams& refine, std::string asset_id, std::string provenance = {}) {
  if (cutout.width() != raw_mask.width() || cutout.height() != raw_mask.height()) {
    throw Error(Errc::kDimensionMismatch, "cutout and mask dimensions differ for " + asset_id);
  }
  if (!(mm_per_px > 0.0)) throw Error(Errc::kInvalidArgument, "mm_per_px must be positive");

  const BinaryMask refined = largest_component(morph_refine(raw_mask, refine), refine.connectivity);
  const BBox tight = refined.bounds();
  if (tight.empty()) throw Error(Errc::kDegenerateParticle, "degenerate particle: " + asset_id);

  const BBox box{tight.x0 - 1, tight.y0 - 1, tight.x1 + 1, tight.y1 + 1};
  ParticleAsset asset;
  asset.asset_id = std::move(asset_id);
  asset.provenance = std::move(provenance);
  asset.sprite = RgbaImage(box.width(), box.height());
  asset.mask = BinaryMask(box.width(), box.height());
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) {
      const int sx = box.x0 + x;
      const int sy = box.y0 + y;
      if (!refined.contains(sx, sy)) continue;
      std::uint8_t* dst = asset.sprite.px(x, y);
      const std::uint8_t* src = cutout.px(sx, sy);
      std::copy(src, src + 3, dst);
      asset.mask.set(x, y, refined.get(sx, sy));
    }
  }
  stamp_coverage(asset.sprite, asset.mask);

  asset.size_mm = farthest_pair(asset.mask) * mm_per_px;
  asset.size_class = classify_size(asset.size_mm);
  return asset;
}

inline ParticleAsset import_asset(const RgbImage& cutout, const BinaryMask& raw_mask, double mm_per_px,
                                  const RefineParams& refine, std::string asset_id, std::string provenance = {}) {
  RgbaImage rgba(cutout.width(), cutout.height());
  for (int y = 0; y < cutout.height(); ++y) {
    for (int x = 0; x < cutout.width(); ++x) {
      std::copy(cutout.px(x, y), cutout.px(x, y) + 3, rgba.px(x, y));
    }
  }
  return import_asset(rgba, raw_mask, mm_per_px, refine, std::move(asset_id), std::move(provenance));
}

}  // namespace particlesynth
