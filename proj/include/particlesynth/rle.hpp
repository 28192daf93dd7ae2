#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "particlesynth/error.hpp"
#include "particlesynth/raster.hpp"

namespace particlesynth {

/// Foreground run over the row-major pixel order of some raster.
struct Run {
  std::uint64_t start = 0;
  std::uint64_t length = 0;

  friend bool operator==(const Run&, const Run&) = default;
};

using RunList = std::vector<Run>;

/// Runs of a mask drawn at (offset_x, offset_y) inside a canvas of the given
/// width. Runs never wrap across rows, so a mask touching the right canvas
/// edge still yields one run per row segment.
inline RunList rle_encode_placed(const BinaryMask& mask, int offset_x, int offset_y, int canvas_width) {
  RunList runs;
  for (int y = 0; y < mask.height(); ++y) {
    const std::uint64_t row_base = static_cast<std::uint64_t>(offset_y + y) * canvas_width + offset_x;
    int x = 0;
    while (x < mask.width()) {
      if (!mask.get(x, y)) {
        ++x;
        continue;
      }
      const int begin = x;
      while (x < mask.width() && mask.get(x, y)) ++x;
      const Run run{row_base + begin, static_cast<std::uint64_t>(x - begin)};
      if (!runs.empty() && runs.back().start + runs.back().length == run.start) {
        runs.back().length += run.length;  // contiguous across a full-width row
      } else {
        runs.push_back(run);
      }
    }
  }
  return runs;
}

inline RunList rle_encode(const BinaryMask& mask) { return rle_encode_placed(mask, 0, 0, mask.width()); }

/// Validates ordering and bounds, then rasterizes.
inline BinaryMask rle_decode(std::span<const Run> runs, int width, int height) {
  BinaryMask out(width, height);
  const std::uint64_t total = out.pixel_count();
  std::uint64_t cursor = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const Run& r = runs[i];
    if (r.length == 0) throw Error(Errc::kSchema, "run " + std::to_string(i) + " has zero length");
    if (r.start < cursor) throw Error(Errc::kSchema, "run " + std::to_string(i) + " overlaps or is out of order");
    if (r.start + r.length > total) throw Error(Errc::kSchema, "run " + std::to_string(i) + " exceeds raster");
    std::fill_n(out.data().begin() + static_cast<std::ptrdiff_t>(r.start), r.length, std::uint8_t{1});
    cursor = r.start + r.length;
  }
  return out;
}

inline std::uint64_t run_area(std::span<const Run> runs) {
  std::uint64_t a = 0;
  for (const Run& r : runs) a += r.length;
  return a;
}

/// Overlap of two sorted, non-overlapping run lists.
inline std::uint64_t run_intersection(std::span<const Run> a, std::span<const Run> b) {
  std::uint64_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const std::uint64_t lo = std::max(a[i].start, b[j].start);
    const std::uint64_t a_end = a[i].start + a[i].length;
    const std::uint64_t b_end = b[j].start + b[j].length;
    const std::uint64_t hi = std::min(a_end, b_end);
    if (hi > lo) inter += hi - lo;
    if (a_end < b_end) {
      ++i;
    } else {
      ++j;
    }
  }
  return inter;
}

}  // namespace particlesynth
