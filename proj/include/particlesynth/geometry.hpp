#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "particlesynth/error.hpp"
#include "particlesynth/raster.hpp"

namespace particlesynth {

// ---------------------------------------------------------------------------
// Connected components
// ---------------------------------------------------------------------------

/// Per-pixel component labels (0 = background, 1..n = components in raster
/// order of their first pixel) with the area of each component.
struct ComponentLabels {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;
  std::vector<std::size_t> areas;  // areas[k] is the area of label k + 1

  std::size_t count() const { return areas.size(); }
};

inline ComponentLabels label_components(const BinaryMask& mask, int connectivity = 8) {
  if (connectivity != 4 && connectivity != 8) {
    throw Error(Errc::kInvalidArgument, "connectivity must be 4 or 8, got " + std::to_string(connectivity));
  }
  ComponentLabels out;
  out.width = mask.width();
  out.height = mask.height();
  out.labels.assign(mask.pixel_count(), 0);

  const int w = mask.width();
  const int h = mask.height();
  const auto bits = mask.data();
  std::vector<std::int32_t> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int32_t seed = y * w + x;
      if (!bits[seed] || out.labels[seed] != 0) continue;
      const auto label = static_cast<std::int32_t>(out.areas.size() + 1);
      std::size_t area = 0;
      out.labels[seed] = label;
      stack.push_back(seed);
      while (!stack.empty()) {
        const std::int32_t p = stack.back();
        stack.pop_back();
        ++area;
        const int px = p % w;
        const int py = p / w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (connectivity == 4 && dx != 0 && dy != 0) continue;
            const int nx = px + dx;
            const int ny = py + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::int32_t q = ny * w + nx;
            if (bits[q] && out.labels[q] == 0) {
              out.labels[q] = label;
              stack.push_back(q);
            }
          }
        }
      }
      out.areas.push_back(area);
    }
  }
  return out;
}

/// Maximal connected regions, each as a full-size mask, ordered by the
/// raster position of their first pixel. Empty input yields an empty list.
inline std::vector<BinaryMask> connected_components(const BinaryMask& mask, int connectivity = 8) {
  const ComponentLabels cc = label_components(mask, connectivity);
  std::vector<BinaryMask> out(cc.count(), BinaryMask(mask.width(), mask.height()));
  for (std::size_t i = 0; i < cc.labels.size(); ++i) {
    if (cc.labels[i] != 0) out[cc.labels[i] - 1].data()[i] = 1;
  }
  return out;
}

/// Keeps only the largest component (earliest in raster order on ties).
inline BinaryMask largest_component(const BinaryMask& mask, int connectivity = 8) {
  const ComponentLabels cc = label_components(mask, connectivity);
  BinaryMask out(mask.width(), mask.height());
  if (cc.count() == 0) return out;
  const auto best = static_cast<std::int32_t>(
      std::max_element(cc.areas.begin(), cc.areas.end()) - cc.areas.begin() + 1);
  for (std::size_t i = 0; i < cc.labels.size(); ++i) {
    if (cc.labels[i] == best) out.data()[i] = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Morphology
// ---------------------------------------------------------------------------

/// Offsets of the disc structuring element: dx^2 + dy^2 <= r(r+1).
/// Radius 1 is the full 3x3 square, radius 2 the 5x5 square minus corners.
inline std::vector<PixelPoint> disc_element(int radius) {
  if (radius < 1) throw Error(Errc::kInvalidArgument, "kernel radius must be >= 1");
  std::vector<PixelPoint> offsets;
  const int limit = radius * (radius + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= limit) offsets.push_back({dx, dy});
    }
  }
  return offsets;
}

inline BinaryMask dilate(const BinaryMask& mask, int radius) {
  const auto element = disc_element(radius);
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.get(x, y)) continue;
      for (const auto& o : element) {
        if (mask.contains(x + o.x, y + o.y)) out.set(x + o.x, y + o.y);
      }
    }
  }
  return out;
}

/// Pixels outside the raster count as foreground, so erosion never eats
/// into a shape just because it touches the border.
inline BinaryMask erode(const BinaryMask& mask, int radius) {
  const auto element = disc_element(radius);
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.get(x, y)) continue;
      bool keep = true;
      for (const auto& o : element) {
        const int nx = x + o.x;
        const int ny = y + o.y;
        if (mask.contains(nx, ny) && !mask.get(nx, ny)) {
          keep = false;
          break;
        }
      }
      if (keep) out.set(x, y);
    }
  }
  return out;
}

inline BinaryMask open(const BinaryMask& mask, int radius) { return dilate(erode(mask, radius), radius); }
inline BinaryMask close(const BinaryMask& mask, int radius) { return erode(dilate(mask, radius), radius); }

/// Fills every background region not 4-connected to the raster border.
inline BinaryMask fill_holes(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> outside(mask.pixel_count(), 0);
  std::vector<std::int32_t> stack;
  auto seed = [&](int x, int y) {
    const std::int32_t p = y * w + x;
    if (!mask.get(x, y) && !outside[p]) {
      outside[p] = 1;
      stack.push_back(p);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const std::int32_t p = stack.back();
    stack.pop_back();
    const int x = p % w;
    const int y = p / w;
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }
  BinaryMask out(w, h);
  for (std::size_t i = 0; i < outside.size(); ++i) out.data()[i] = outside[i] ? 0 : 1;
  return out;
}

/// Removes components whose area is below max(min_area, ceil(min_fraction * largest)).
inline BinaryMask drop_small_components(const BinaryMask& mask, std::size_t min_area, double min_fraction,
                                        int connectivity = 8) {
  const ComponentLabels cc = label_components(mask, connectivity);
  BinaryMask out(mask.width(), mask.height());
  if (cc.count() == 0) return out;
  const std::size_t largest = *std::max_element(cc.areas.begin(), cc.areas.end());
  const auto relative = static_cast<std::size_t>(std::ceil(min_fraction * static_cast<double>(largest)));
  const std::size_t threshold = std::max(min_area, relative);
  for (std::size_t i = 0; i < cc.labels.size(); ++i) {
    const std::int32_t l = cc.labels[i];
    if (l != 0 && cc.areas[l - 1] >= threshold) out.data()[i] = 1;
  }
  return out;
}

enum class MorphOp { kErode, kDilate, kOpen, kClose, kFillHoles, kDropSmall };

struct MorphStep {
  MorphOp op = MorphOp::kClose;
  int radius = 0;               // 0 selects RefineParams::radius
  std::size_t min_area = 0;     // kDropSmall only
  double min_fraction = 0.0;    // kDropSmall only, relative to the largest component
};

struct RefineParams {
  int radius = 1;
  int connectivity = 8;
  std::vector<MorphStep> steps;

  /// close(1), fill holes, then drop components smaller than 0.5% of the
  /// largest one (and anything under 9 px, which is never a real particle).
  static RefineParams defaults() {
    RefineParams p;
    p.steps = {{MorphOp::kClose, 1, 0, 0.0},
               {MorphOp::kFillHoles, 0, 0, 0.0},
               {MorphOp::kDropSmall, 0, 9, 0.005}};
    return p;
  }
};

inline BinaryMask morph_refine(const BinaryMask& mask, const RefineParams& params) {
  if (params.radius < 1) throw Error(Errc::kInvalidArgument, "kernel radius must be >= 1");
  BinaryMask out = mask;
  for (const MorphStep& step : params.steps) {
    const int r = step.radius > 0 ? step.radius : params.radius;
    switch (step.op) {
      case MorphOp::kErode: out = erode(out, r); break;
      case MorphOp::kDilate: out = dilate(out, r); break;
      case MorphOp::kOpen: out = open(out, r); break;
      case MorphOp::kClose: out = close(out, r); break;
      case MorphOp::kFillHoles: out = fill_holes(out); break;
      case MorphOp::kDropSmall:
        out = drop_small_components(out, step.min_area, step.min_fraction, params.connectivity);
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convex hull and diameter
// ---------------------------------------------------------------------------

namespace detail {
inline std::int64_t cross(const PixelPoint& o, const PixelPoint& a, const PixelPoint& b) {
  return static_cast<std::int64_t>(a.x - o.x) * (b.y - o.y) - static_cast<std::int64_t>(a.y - o.y) * (b.x - o.x);
}
inline std::int64_t dist2(const PixelPoint& a, const PixelPoint& b) {
  const std::int64_t dx = a.x - b.x;
  const std::int64_t dy = a.y - b.y;
  return dx * dx + dy * dy;
}
}  // namespace detail

/// Andrew's monotone chain. Vertices are counter-clockwise in (x, y)
/// coordinates (positive cross product), starting from the lexicographically
/// smallest point; collinear points are dropped.
inline std::vector<PixelPoint> convex_hull(std::span<const PixelPoint> points) {
  if (points.empty()) throw Error(Errc::kEmptyInput, "no points");
  std::vector<PixelPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<PixelPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && detail::cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && detail::cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  // All points collinear: the chain degenerates to the two extremes.
  if (hull.size() == 2 && hull[0] == hull[1]) hull.pop_back();
  return hull;
}

/// Squared diameter of a convex polygon via rotating calipers. Expects the
/// output of convex_hull (counter-clockwise, no collinear vertices).
inline std::int64_t hull_diameter_squared(std::span<const PixelPoint> hull) {
  const std::size_t n = hull.size();
  if (n < 2) return 0;
  std::int64_t best = 0;
  std::size_t j = 1;
  for (std::size_t i = 0; i < j; ++i) {
    for (;; j = (j + 1) % n) {
      best = std::max(best, detail::dist2(hull[i], hull[j]));
      const PixelPoint& a = hull[j];
      const PixelPoint& b = hull[(j + 1) % n];
      const PixelPoint& c = hull[i];
      const PixelPoint& d = hull[(i + 1) % n];
      const std::int64_t turn = static_cast<std::int64_t>(b.x - a.x) * (d.y - c.y) -
                                static_cast<std::int64_t>(b.y - a.y) * (d.x - c.x);
      if (turn >= 0) break;
    }
  }
  return best;
}

/// Foreground pixels with at least one 4-neighbour in the background (or
/// outside the raster). Their hull equals the hull of all foreground pixels.
inline std::vector<PixelPoint> boundary_pixels(const BinaryMask& mask) {
  std::vector<PixelPoint> out;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.get(x, y)) continue;
      if (!mask.at_or_zero(x - 1, y) || !mask.at_or_zero(x + 1, y) || !mask.at_or_zero(x, y - 1) ||
          !mask.at_or_zero(x, y + 1)) {
        out.push_back({x, y});
      }
    }
  }
  return out;
}

/// Exact squared farthest-pair distance between foreground pixel centres.
inline std::int64_t farthest_pair_squared(const BinaryMask& mask) {
  const auto boundary = boundary_pixels(mask);
  if (boundary.empty()) throw Error(Errc::kEmptyInput, "empty mask");
  const auto hull = convex_hull(boundary);
  return hull_diameter_squared(hull);
}

/// Largest Euclidean distance between the centres of two foreground pixels.
inline double farthest_pair(const BinaryMask& mask) {
  return std::sqrt(static_cast<double>(farthest_pair_squared(mask)));
}

// ---------------------------------------------------------------------------
// Overlap
// ---------------------------------------------------------------------------

/// |a & b| / |a | b|; 0 when both masks are empty.
inline double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  const auto da = a.data();
  const auto db = b.data();
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    inter += (da[i] & db[i]);
    uni += (da[i] | db[i]);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace particlesynth
