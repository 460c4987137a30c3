#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace stereo {

// Deterministic draws on top of std::mt19937. The standard distributions are
// implementation-defined, so everything that must reproduce bit-exactly from
// a seed derives its values from raw engine output instead.

/// Uniform float in [0,1) with 24 bits of resolution.
inline float uniform01(std::mt19937& rng) {
  return static_cast<float>(rng() >> 8) * (1.0f / 16777216.0f);
}

/// Uniform double in [0,1) with 32 bits of resolution.
inline double uniform01d(std::mt19937& rng) {
  return static_cast<double>(rng()) * (1.0 / 4294967296.0);
}

/// Uniform integer in [0, n). n must be positive.
inline std::uint32_t bounded_uint(std::mt19937& rng, std::uint32_t n) {
  return static_cast<std::uint32_t>(
      (static_cast<std::uint64_t>(rng()) * n) >> 32);
}

/// Standard normal via Box-Muller (one value per call; the pair's second
/// member is discarded to keep the draw order trivial to reason about).
inline double normal01(std::mt19937& rng) {
  double u1 = uniform01d(rng);
  const double u2 = uniform01d(rng);
  if (u1 <= 0.0) u1 = 1.0 / 4294967296.0;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

/// Deterministic Fisher-Yates shuffle using bounded_uint.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = bounded_uint(rng, static_cast<std::uint32_t>(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace stereo
