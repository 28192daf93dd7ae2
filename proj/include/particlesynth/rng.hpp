#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace particlesynth {

namespace detail {
inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Seed for one (image, instance) slot. splitmix64 is a bijection, so for a
/// fixed (master, image) distinct instance indices never collide.
inline constexpr std::uint64_t derive_instance_seed(std::uint64_t master_seed, std::uint64_t image_index,
                                                    std::uint64_t instance_index) {
  std::uint64_t h = detail::splitmix64(master_seed);
  h = detail::splitmix64(h ^ detail::splitmix64(image_index ^ 0x5a17c0de5eed0001ULL));
  h = detail::splitmix64(h ^ instance_index);
  return h;
}

/// Reserved instance indices for per-image streams that are not instances.
inline constexpr std::uint64_t kPsdStream = ~std::uint64_t{0};
inline constexpr std::uint64_t kSceneStream = ~std::uint64_t{0} - 1;
inline constexpr std::uint64_t kClassPickStream = ~std::uint64_t{0} - 2;

/// mt19937_64 with hand-rolled distributions. The standard library leaves
/// distribution algorithms implementation-defined; these are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal via Box-Muller (one draw per call).
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Exponential(1), i.e. Gamma(1, 1).
  double exponential() { return -std::log(1.0 - uniform01()); }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace particlesynth
