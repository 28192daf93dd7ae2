#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "particlesynth/error.hpp"
#include "particlesynth/rng.hpp"
#include "particlesynth/sieve.hpp"

namespace particlesynth {

using ClassCounts = std::array<std::uint64_t, kNumClasses>;
/// Which sieve classes a stage may draw from (index 0 is class 1).
using ClassSet = std::array<bool, kNumClasses>;

inline constexpr ClassSet kAllClasses{true, true, true, true, true, true, true, true};

inline std::uint64_t total(const ClassCounts& counts) {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

/// Target particle-size distribution over the sieve classes.
struct PsdSpec {
  enum class Kind { kUniform, kGaussian, kRandom, kExplicit };

  Kind kind = Kind::kUniform;
  std::uint64_t total_count = 1;
  double mean_class = 4.5;  // gaussian only, in class-index units
  double std_class = 1.0;   // gaussian only
  ClassCounts counts{};     // explicit only

  void validate() const {
    if (kind == Kind::kExplicit) {
      if (total(counts) == 0) throw Error(Errc::kConfig, "psd.counts must have a positive sum");
      return;
    }
    if (total_count == 0) throw Error(Errc::kConfig, "psd.total_count must be positive");
    if (kind == Kind::kGaussian && !(std_class > 0.0)) throw Error(Errc::kConfig, "psd.std_class must be positive");
  }

  static PsdSpec uniform(std::uint64_t n) { return PsdSpec{Kind::kUniform, n}; }
  static PsdSpec gaussian(double mean, double std, std::uint64_t n) {
    return PsdSpec{Kind::kGaussian, n, mean, std};
  }
  static PsdSpec random(std::uint64_t n) { return PsdSpec{Kind::kRandom, n}; }
  static PsdSpec explicit_counts(const ClassCounts& c) {
    PsdSpec s{Kind::kExplicit, 0};
    s.counts = c;
    return s;
  }
};

/// Class probabilities for one image. Gaussian weights are the normal
/// density evaluated at the class indices 1..8; random draws a flat
/// Dirichlet through normalised Exp(1) variates. Classes outside `allowed`
/// get zero weight.
inline std::array<double, kNumClasses> class_probabilities(const PsdSpec& spec, Rng& rng,
                                                           const ClassSet& allowed = kAllClasses) {
  std::array<double, kNumClasses> p{};
  for (int k = 0; k < kNumClasses; ++k) {
    double w = 0.0;
    switch (spec.kind) {
      case PsdSpec::Kind::kUniform: w = 1.0; break;
      case PsdSpec::Kind::kGaussian: {
        const double z = (static_cast<double>(k + 1) - spec.mean_class) / spec.std_class;
        w = std::exp(-0.5 * z * z);
        break;
      }
      case PsdSpec::Kind::kRandom: w = rng.exponential(); break;
      case PsdSpec::Kind::kExplicit: w = static_cast<double>(spec.counts[k]); break;
    }
    p[k] = allowed[k] ? w : 0.0;
  }
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(sum > 0.0)) throw Error(Errc::kConfig, "psd puts no mass on any allowed class");
  for (double& v : p) v /= sum;
  return p;
}

/// Per-class counts for one image. Non-explicit kinds draw a multinomial of
/// `total_count` trials; explicit counts are returned verbatim.
inline ClassCounts sample_psd(const PsdSpec& spec, Rng& rng, const ClassSet& allowed = kAllClasses) {
  spec.validate();
  if (spec.kind == PsdSpec::Kind::kExplicit) return spec.counts;
  const auto p = class_probabilities(spec, rng, allowed);
  std::array<double, kNumClasses> cdf{};
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  int last = kNumClasses - 1;
  while (last > 0 && p[last] == 0.0) --last;
  ClassCounts counts{};
  for (std::uint64_t i = 0; i < spec.total_count; ++i) {
    const double u = rng.uniform01();
    int k = 0;
    while (k < last && u >= cdf[k]) ++k;
    ++counts[k];
  }
  return counts;
}

/// Low-occlusion partner of a scene: same distribution shape, each class
/// count halved and rounded up.
inline ClassCounts pair_occlusion_variant(const ClassCounts& counts) {
  ClassCounts out{};
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = (counts[i] + 1) / 2;
  return out;
}

}  // namespace particlesynth
