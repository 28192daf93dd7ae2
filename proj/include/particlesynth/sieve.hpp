#pragma once

#include <array>
#include <cstdio>
#include <string>

#include "particlesynth/error.hpp"

namespace particlesynth {

inline constexpr int kNumClasses = 8;
inline constexpr int kNumLayers = 5;

/// One sieve fraction. Sizes are farthest-pair diameters in millimetres.
struct SizeClass {
  int index = 0;  // 1..8
  double min_mm = 0.0;
  double max_mm = 0.0;
  int layer = 0;  // 0..4, smaller particles settle lower

  friend bool operator==(const SizeClass&, const SizeClass&) = default;
};

/// Sieve fractions 4 mm .. 63 mm and the layer each one settles into.
inline constexpr std::array<SizeClass, kNumClasses> kSieveClasses{{
    {1, 4.0, 5.6, 0},
    {2, 5.6, 8.0, 0},
    {3, 8.0, 11.2, 0},
    {4, 11.2, 16.0, 1},
    {5, 16.0, 22.4, 1},
    {6, 22.4, 35.0, 2},
    {7, 35.0, 45.0, 3},
    {8, 45.0, 63.0, 4},
}};

inline const SizeClass& size_class(int index) {
  if (index < 1 || index > kNumClasses) {
    throw Error(Errc::kInvalidArgument, "size class must be in 1..8, got " + std::to_string(index));
  }
  return kSieveClasses[static_cast<std::size_t>(index - 1)];
}

inline int layer_of_class(int index) { return size_class(index).layer; }

/// Half-open [min, max) intervals; the top bound 63.0 belongs to class 8.
inline const SizeClass& classify_size(double size_mm) {
  if (!(size_mm >= kSieveClasses.front().min_mm && size_mm <= kSieveClasses.back().max_mm)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "out of sieve range: %.6g mm (valid 4.0..63.0)", size_mm);
    throw Error(Errc::kOutOfSieveRange, buf);
  }
  for (const SizeClass& c : kSieveClasses) {
    if (size_mm >= c.min_mm && size_mm < c.max_mm) return c;
  }
  return kSieveClasses.back();
}

}  // namespace particlesynth
