#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace simgcl {

/// splitmix64: compact deterministic PRNG. Used for the noise streams, where
/// std::mt19937 would be a measurable fraction of an epoch; also the base for
/// deriving independent sub-seeds from one master seed.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1) with 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [0,1) with 24 random bits.
  float next_float() { return float(next_u64() >> 40) * 0x1.0p-24f; }

  template <class S>
  S next_unit();

  /// Standard normal via the polar Box-Muller transform (one value returned,
  /// the pair partner is discarded; noise rows draw many, so this is fine).
  template <class S>
  S next_gaussian() {
    for (;;) {
      double u = 2.0 * next_double() - 1.0;
      double v = 2.0 * next_double() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return S(u * std::sqrt(-2.0 * std::log(s) / s));
    }
  }

  /// Uniform integer in [0, bound) by rejection (unbiased).
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }
};

template <>
inline double SplitMix64::next_unit<double>() {
  return next_double();
}
template <>
inline float SplitMix64::next_unit<float>() {
  return next_float();
}

/// Derives an independent sub-seed from (master, tag, indices). Every random
/// stream in the engine gets its own derived seed so that methods consuming
/// different numbers of draws (e.g. augmentation vs none) still shuffle and
/// sample negatives identically under the same master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = master ^ 0x9e3779b97f4a7c15ULL;
  for (char c : tag) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  SplitMix64 mix(h);
  mix.state ^= mix.next_u64() + a;
  mix.state ^= mix.next_u64() + (b << 32 | b >> 32);
  return mix.next_u64();
}

}  // namespace simgcl
