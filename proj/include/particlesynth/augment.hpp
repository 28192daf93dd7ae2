#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "particlesynth/error.hpp"
#include "particlesynth/particle.hpp"
#include "particlesynth/raster.hpp"
#include "particlesynth/rng.hpp"

namespace particlesynth {

enum class RotationMode { kAnyAngle, kRightAngles };

/// Ranges for the per-instance augmentation. There is deliberately no scale
/// option: particle size is the label being generated.
struct AugmentConfig {
  bool flip = true;
  bool rotate = true;
  bool colorize = true;
  RotationMode rotation_mode = RotationMode::kAnyAngle;
  double hue_deg = 10.0;    // H, half-width in degrees
  double saturation = 0.15; // S, half-width of the scale factor
  double value = 0.15;      // V, half-width of the scale factor

  void validate() const {
    if (!(hue_deg >= 0.0 && hue_deg <= 180.0)) {
      throw Error(Errc::kConfig, "augment.hue_deg must be in [0, 180]");
    }
    if (!(saturation >= 0.0 && saturation < 1.0)) throw Error(Errc::kConfig, "augment.saturation must be in [0, 1)");
    if (!(value >= 0.0 && value < 1.0)) throw Error(Errc::kConfig, "augment.value must be in [0, 1)");
  }

  static AugmentConfig disabled() {
    AugmentConfig c;
    c.flip = c.rotate = c.colorize = false;
    return c;
  }
};

struct AugmentParams {
  bool flip_h = false;
  bool flip_v = false;
  double rotation_deg = 0.0;
  double hue_shift = 0.0;
  double sat_scale = 1.0;
  double val_scale = 1.0;

  bool geometric_identity() const { return !flip_h && !flip_v && rotation_deg == 0.0; }
  bool photometric_identity() const { return hue_shift == 0.0 && sat_scale == 1.0 && val_scale == 1.0; }

  friend bool operator==(const AugmentParams&, const AugmentParams&) = default;
};

/// Every field consumes its random draw whether or not the transform is
/// enabled, so toggling one transform never shifts the others' values.
inline AugmentParams sample_params(Rng& rng, const AugmentConfig& cfg) {
  AugmentParams p;
  const bool fh = rng.bernoulli(0.5);
  const bool fv = rng.bernoulli(0.5);
  const double any_angle = rng.uniform(0.0, 360.0);
  const auto quarter = rng.below(4);
  const double hue = rng.uniform(-cfg.hue_deg, cfg.hue_deg);
  const double sat = rng.uniform(1.0 - cfg.saturation, 1.0 + cfg.saturation);
  const double val = rng.uniform(1.0 - cfg.value, 1.0 + cfg.value);
  if (cfg.flip) {
    p.flip_h = fh;
    p.flip_v = fv;
  }
  if (cfg.rotate) {
    p.rotation_deg = cfg.rotation_mode == RotationMode::kAnyAngle ? any_angle : 90.0 * static_cast<double>(quarter);
  }
  if (cfg.colorize) {
    p.hue_shift = hue;
    p.sat_scale = sat;
    p.val_scale = val;
  }
  return p;
}

/// A sprite with zero dimensions marks a mask-only particle.
struct AugmentedParticle {
  RgbaImage sprite;
  BinaryMask mask;

  bool has_sprite() const { return sprite.width() > 0; }
};

namespace detail {

inline void flip_horizontal(AugmentedParticle& a) {
  const int w = a.mask.width();
  for (int y = 0; y < a.mask.height(); ++y) {
    for (int x = 0; x < w / 2; ++x) {
      const bool m = a.mask.get(x, y);
      a.mask.set(x, y, a.mask.get(w - 1 - x, y));
      a.mask.set(w - 1 - x, y, m);
      if (a.has_sprite()) std::swap_ranges(a.sprite.px(x, y), a.sprite.px(x, y) + 4, a.sprite.px(w - 1 - x, y));
    }
  }
}

inline void flip_vertical(AugmentedParticle& a) {
  const int h = a.mask.height();
  for (int y = 0; y < h / 2; ++y) {
    for (int x = 0; x < a.mask.width(); ++x) {
      const bool m = a.mask.get(x, y);
      a.mask.set(x, y, a.mask.get(x, h - 1 - y));
      a.mask.set(x, h - 1 - y, m);
      if (a.has_sprite()) std::swap_ranges(a.sprite.px(x, y), a.sprite.px(x, y) + 4, a.sprite.px(x, h - 1 - y));
    }
  }
}

/// Exact rotation by quarter turns (clockwise on screen, y pointing down).
inline AugmentedParticle rotate_quarters(const AugmentedParticle& in, int quarters) {
  quarters = ((quarters % 4) + 4) % 4;
  if (quarters == 0) return in;
  const int w = in.mask.width();
  const int h = in.mask.height();
  const int ow = quarters == 2 ? w : h;
  const int oh = quarters == 2 ? h : w;
  AugmentedParticle out{in.has_sprite() ? RgbaImage(ow, oh) : RgbaImage(), BinaryMask(ow, oh)};
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      int sx = 0;
      int sy = 0;
      switch (quarters) {
        case 1: sx = y; sy = h - 1 - x; break;
        case 2: sx = w - 1 - x; sy = h - 1 - y; break;
        default: sx = w - 1 - y; sy = x; break;
      }
      out.mask.set(x, y, in.mask.get(sx, sy));
      if (out.has_sprite()) std::copy(in.sprite.px(sx, sy), in.sprite.px(sx, sy) + 4, out.sprite.px(x, y));
    }
  }
  return out;
}

/// Arbitrary-angle rotation about the sprite centre. The mask is resampled
/// nearest-neighbour; colours are bilinear over on-mask source pixels only,
/// so no off-mask colour bleeds into the particle. The result is cropped to
/// the rotated mask bounds plus a 1 px margin.
inline AugmentedParticle rotate_any(const AugmentedParticle& in, double degrees) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const int w = in.mask.width();
  const int h = in.mask.height();
  const int ow = static_cast<int>(std::ceil(std::abs(w * c) + std::abs(h * s) - 1e-9));
  const int oh = static_cast<int>(std::ceil(std::abs(w * s) + std::abs(h * c) - 1e-9));
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  const double ocx = (ow - 1) / 2.0;
  const double ocy = (oh - 1) / 2.0;

  const bool colors = in.has_sprite();
  AugmentedParticle full{colors ? RgbaImage(ow, oh) : RgbaImage(), BinaryMask(ow, oh)};
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double dx = x - ocx;
      const double dy = y - ocy;
      const double sx = cx + c * dx + s * dy;
      const double sy = cy - s * dx + c * dy;
      const int nx = static_cast<int>(std::floor(sx + 0.5));
      const int ny = static_cast<int>(std::floor(sy + 0.5));
      if (!in.mask.at_or_zero(nx, ny)) continue;
      full.mask.set(x, y);
      if (!colors) continue;

      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      double acc[3] = {0.0, 0.0, 0.0};
      double total = 0.0;
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          const int px = x0 + i;
          const int py = y0 + j;
          if (!in.mask.at_or_zero(px, py)) continue;
          const double wgt = (i ? fx : 1.0 - fx) * (j ? fy : 1.0 - fy);
          if (wgt <= 0.0) continue;
          const std::uint8_t* src = in.sprite.px(px, py);
          for (int k = 0; k < 3; ++k) acc[k] += wgt * src[k];
          total += wgt;
        }
      }
      std::uint8_t* dst = full.sprite.px(x, y);
      if (total > 0.0) {
        for (int k = 0; k < 3; ++k) {
          dst[k] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[k] / total), 0L, 255L));
        }
      } else {
        std::copy(in.sprite.px(nx, ny), in.sprite.px(nx, ny) + 3, dst);
      }
    }
  }

  const BBox tight = full.mask.bounds();
  const BBox box{std::max(0, tight.x0 - 1), std::max(0, tight.y0 - 1), std::min(ow, tight.x1 + 1),
                 std::min(oh, tight.y1 + 1)};
  AugmentedParticle out{colors ? RgbaImage(box.width(), box.height()) : RgbaImage(), crop(full.mask, box)};
  for (int y = 0; colors && y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) {
      std::copy(full.sprite.px(box.x0 + x, box.y0 + y), full.sprite.px(box.x0 + x, box.y0 + y) + 3,
                out.sprite.px(x, y));
    }
  }
  return out;
}

inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = 60.0 * std::fmod((g - b) / d, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / d + 2.0);
  } else {
    h = 60.0 * ((r - g) / d + 4.0);
  }
  if (h < 0.0) h += 360.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  const double m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

inline void colorize(AugmentedParticle& a, const AugmentParams& p) {
  for (int y = 0; y < a.mask.height(); ++y) {
    for (int x = 0; x < a.mask.width(); ++x) {
      if (!a.mask.get(x, y)) continue;
      std::uint8_t* px = a.sprite.px(x, y);
      double h, s, v;
      rgb_to_hsv(px[0] / 255.0, px[1] / 255.0, px[2] / 255.0, h, s, v);
      h = std::fmod(h + p.hue_shift + 360.0, 360.0);
      s = std::clamp(s * p.sat_scale, 0.0, 1.0);
      v = std::clamp(v * p.val_scale, 0.0, 1.0);
      double r, g, b;
      hsv_to_rgb(h, s, v, r, g, b);
      px[0] = static_cast<std::uint8_t>(std::lround(std::clamp(r, 0.0, 1.0) * 255.0));
      px[1] = static_cast<std::uint8_t>(std::lround(std::clamp(g, 0.0, 1.0) * 255.0));
      px[2] = static_cast<std::uint8_t>(std::lround(std::clamp(b, 0.0, 1.0) * 255.0));
    }
  }
}

}  // namespace detail

namespace detail {

inline void apply_geometry(AugmentedParticle& out, const AugmentParams& p) {
  if (p.flip_h) flip_horizontal(out);
  if (p.flip_v) flip_vertical(out);
  double angle = std::fmod(p.rotation_deg, 360.0);
  if (angle < 0.0) angle += 360.0;
  if (angle != 0.0) {
    const double quarters = angle / 90.0;
    if (quarters == std::floor(quarters)) {
      out = rotate_quarters(out, static_cast<int>(quarters));
    } else {
      out = rotate_any(out, angle);
    }
  }
}

}  // namespace detail

/// Applies flips, then rotation, then colour jitter. Geometry never scales;
/// the output mask depends only on the geometric fields of `p`.
inline AugmentedParticle apply(const ParticleAsset& asset, const AugmentParams& p) {
  AugmentedParticle out{asset.sprite, asset.mask};
  detail::apply_geometry(out, p);
  if (!p.photometric_identity()) detail::colorize(out, p);
  if (!p.geometric_identity() || !p.photometric_identity()) stamp_coverage(out.sprite, out.mask);
  return out;
}

/// The mask `apply` would produce, without touching colours.
inline BinaryMask apply_mask(const ParticleAsset& asset, const AugmentParams& p) {
  AugmentedParticle out{RgbaImage(), asset.mask};
  detail::apply_geometry(out, p);
  return std::move(out.mask);
}

}  // namespace particlesynth
