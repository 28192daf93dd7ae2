#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>

#include "particlesynth/catalog.hpp"
#include "particlesynth/geometry.hpp"
#include "particlesynth/particle.hpp"
#include "particlesynth/raster.hpp"
#include "particlesynth/rng.hpp"
#include "particlesynth/sieve.hpp"

// Procedural stand-ins for photographed particle cutouts. Used by the demo
// asset command, the samples and the test suites.

namespace particlesynth::synthetic {

struct Cutout {
  RgbImage image;
  BinaryMask mask;
};

/// Filled disc of the given pixel diameter centred in a canvas with a
/// margin of `pad` pixels.
inline BinaryMask disc(int diameter, int pad = 2) {
  const int size = diameter + 2 * pad;
  BinaryMask m(size, size);
  const double c = (size - 1) / 2.0;
  const double r = diameter / 2.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - c;
      const double dy = y - c;
      if (dx * dx + dy * dy <= r * r) m.set(x, y);
    }
  }
  return m;
}

/// Irregular star-shaped blob: radius modulated by a few low harmonics and
/// stretched along a random axis.
inline BinaryMask blob(Rng& rng, double radius, double roughness = 0.12, double max_elongation = 1.35) {
  std::array<double, 4> amp{};
  std::array<double, 4> phase{};
  for (std::size_t k = 0; k < amp.size(); ++k) {
    amp[k] = rng.uniform(0.0, roughness / static_cast<double>(k + 1));
    phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  const double elong = rng.uniform(1.0, max_elongation);
  const double axis = rng.uniform(0.0, std::numbers::pi);
  const double ca = std::cos(axis);
  const double sa = std::sin(axis);
  const double reach = radius * elong * (1.0 + roughness * 2.1);
  const int size = static_cast<int>(std::ceil(2.0 * reach)) + 5;
  const double c = (size - 1) / 2.0;
  BinaryMask m(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - c;
      const double dy = y - c;
      const double u = (dx * ca + dy * sa) / elong;
      const double v = -dx * sa + dy * ca;
      const double theta = std::atan2(v, u);
      double r = radius;
      for (std::size_t k = 0; k < amp.size(); ++k) {
        r *= 1.0 + amp[k] * std::cos(static_cast<double>(k + 2) * theta + phase[k]);
      }
      if (u * u + v * v <= r * r) m.set(x, y);
    }
  }
  return m;
}

/// Stone-like colours (concrete, brick, sand-lime, asphalt) with grain and
/// darkening toward the rim. Adds a few stray specks to the raw mask, the
/// kind of noise refinement is meant to remove.
inline Cutout stone(Rng& rng, double diameter_px, bool with_noise = true) {
  static constexpr std::array<std::array<double, 3>, 4> kPalette{{
      {150.0, 148.0, 140.0},
      {165.0, 85.0, 62.0},
      {205.0, 196.0, 170.0},
      {75.0, 72.0, 70.0},
  }};
  Cutout out;
  out.mask = blob(rng, diameter_px / 2.0);
  out.image = RgbImage(out.mask.width(), out.mask.height());
  const auto& base = kPalette[rng.below(kPalette.size())];
  const double tint = rng.uniform(-12.0, 12.0);
  const double cx = (out.mask.width() - 1) / 2.0;
  const double cy = (out.mask.height() - 1) / 2.0;
  const double rmax = std::max(1.0, diameter_px / 2.0);
  for (int y = 0; y < out.mask.height(); ++y) {
    for (int x = 0; x < out.mask.width(); ++x) {
      std::uint8_t* px = out.image.px(x, y);
      if (!out.mask.get(x, y)) {
        px[0] = px[1] = px[2] = 30;  // belt showing around the cutout
        continue;
      }
      const double rr = std::hypot(x - cx, y - cy) / rmax;
      const double shade = 1.0 - 0.25 * std::min(1.0, rr * rr);
      const double grain = rng.uniform(-14.0, 14.0);
      for (int k = 0; k < 3; ++k) {
        px[k] = static_cast<std::uint8_t>(std::clamp((base[static_cast<std::size_t>(k)] + tint + grain) * shade, 0.0, 255.0));
      }
    }
  }
  if (with_noise) {
    const int specks = static_cast<int>(rng.uniform_int(1, 4));
    for (int i = 0; i < specks; ++i) {
      const int x = static_cast<int>(rng.uniform_int(0, out.mask.width() - 1));
      const int y = static_cast<int>(rng.uniform_int(0, out.mask.height() - 1));
      out.mask.set(x, y, !out.mask.get(x, y));
    }
  }
  return out;
}

/// Raw stone cutout whose imported size falls inside `class_index`. The
/// radius is corrected from the measured farthest-pair size until the class
/// matches.
inline Cutout cutout_for_class(Rng& rng, int class_index, double mm_per_px,
                               const RefineParams& refine = RefineParams::defaults()) {
  const SizeClass& cls = size_class(class_index);
  const double span = cls.max_mm - cls.min_mm;
  const double target_mm = rng.uniform(cls.min_mm + 0.2 * span, cls.max_mm - 0.2 * span);
  double diameter_px = target_mm / mm_per_px;
  for (int attempt = 0; attempt < 16; ++attempt) {
    Rng shape_rng(rng.next());
    Cutout c = stone(shape_rng, diameter_px);
    const BinaryMask refined = largest_component(morph_refine(c.mask, refine), refine.connectivity);
    if (refined.empty()) {
      diameter_px *= 1.1;
      continue;
    }
    const double size_mm = farthest_pair(refined) * mm_per_px;
    if (size_mm >= cls.min_mm && (size_mm < cls.max_mm || (class_index == kNumClasses && size_mm <= cls.max_mm))) {
      return c;
    }
    diameter_px *= target_mm / std::max(size_mm, 1e-9);
  }
  throw Error(Errc::kInvariant, "could not synthesize a particle for class " + std::to_string(class_index));
}

inline ParticleAsset particle_for_class(Rng& rng, int class_index, double mm_per_px, std::string asset_id,
                                        const RefineParams& refine = RefineParams::defaults()) {
  const Cutout c = cutout_for_class(rng, class_index, mm_per_px, refine);
  return import_asset(c.image, c.mask, mm_per_px, refine, std::move(asset_id), "synthetic");
}

/// Catalog with `per_class[k]` synthetic assets in class k + 1.
inline AssetCatalog make_catalog(double mm_per_px, const std::array<int, kNumClasses>& per_class, std::uint64_t seed) {
  AssetCatalog catalog(mm_per_px);
  Rng rng(seed);
  for (int k = 1; k <= kNumClasses; ++k) {
    for (int i = 0; i < per_class[static_cast<std::size_t>(k - 1)]; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "syn_c%d_%03d", k, i);
      catalog.add(particle_for_class(rng, k, mm_per_px, id));
    }
  }
  return catalog;
}

}  // namespace particlesynth::synthetic
