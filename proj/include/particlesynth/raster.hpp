#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "particlesynth/error.hpp"

namespace particlesynth {

struct PixelPoint {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
  friend auto operator<=>(const PixelPoint&, const PixelPoint&) = default;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool intersects(const BBox& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Row-major binary raster; one byte per pixel holding 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(Errc::kInvalidArgument, "mask dimensions must be positive, got " +
                                              std::to_string(width) + "x" + std::to_string(height));
    }
    bits_.assign(static_cast<std::size_t>(width) * height, 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return bits_.size(); }

  bool get(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool on = true) { bits_[index(x, y)] = on ? 1 : 0; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  /// Out-of-bounds reads as background.
  bool at_or_zero(int x, int y) const { return contains(x, y) && get(x, y); }

  std::span<const std::uint8_t> data() const { return bits_; }
  std::span<std::uint8_t> data() { return bits_; }

  std::size_t area() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool empty() const { return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) == bits_.end(); }

  /// Tight bounding box of the foreground; empty box when the mask is empty.
  BBox bounds() const {
    BBox box{width_, height_, 0, 0};
    for (int y = 0; y < height_; ++y) {
      const std::uint8_t* row = bits_.data() + static_cast<std::size_t>(y) * width_;
      for (int x = 0; x < width_; ++x) {
        if (row[x]) {
          box.x0 = std::min(box.x0, x);
          box.x1 = std::max(box.x1, x + 1);
          box.y0 = std::min(box.y0, y);
          box.y1 = std::max(box.y1, y + 1);
        }
      }
    }
    if (box.x1 == 0) return BBox{};
    return box;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Interleaved 8-bit image with a compile-time channel count.
template <int Channels>
class Image {
 public:
  static constexpr int kChannels = Channels;

  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(Errc::kInvalidArgument, "image dimensions must be positive, got " +
                                              std::to_string(width) + "x" + std::to_string(height));
    }
    pixels_.assign(static_cast<std::size_t>(width) * height * Channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t* px(int x, int y) { return pixels_.data() + offset(x, y); }
  const std::uint8_t* px(int x, int y) const { return pixels_.data() + offset(x, y); }

  std::span<const std::uint8_t> data() const { return pixels_; }
  std::span<std::uint8_t> data() { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using RgbImage = Image<3>;
/// RGB plus coverage in the alpha channel.
using RgbaImage = Image<4>;

inline void require_same_dims(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(Errc::kDimensionMismatch,
                "mask dimensions differ: " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
  }
}

/// Copy of `mask` restricted to `box` (which must lie inside the mask).
inline BinaryMask crop(const BinaryMask& mask, const BBox& box) {
  BinaryMask out(box.width(), box.height());
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) {
      out.set(x, y, mask.get(box.x0 + x, box.y0 + y));
    }
  }
  return out;
}

}  // namespace particlesynth
