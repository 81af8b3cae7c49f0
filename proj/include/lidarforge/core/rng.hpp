// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace lidarforge {

/// SplitMix64 output mix (Steele, Lea and Flood). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// One SplitMix64 step: advances `state` and returns the next output.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += kGoldenGamma;
  return mix64(state);
}

/// Seed of item `index` under `master`: one SplitMix64 step from state master ^ index.
/// Depends only on (master, index), never on generation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master ^ index;
  return splitmix64(state);
}

/// Maps 64 random bits to a double in [0, 1) with 53 bits of precision.
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential SplitMix64 generator. All distributions are implemented here so
/// streams are bitwise reproducible across standard libraries.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  constexpr double uniform() { return to_unit(next()); }

  /// Uniform in [lo, hi).
  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n). `n` must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection of the biased low region.
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform integer in the closed range [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Standard normal draw (Box-Muller, one of the pair).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// Counter-based stream: the k-th value is a pure function of (key, k).
class KeyedStream {
 public:
  explicit constexpr KeyedStream(std::uint64_t key) : key_(mix64(key)) {}

  constexpr KeyedStream(std::uint64_t seed, std::uint32_t a, std::uint32_t b)
      : KeyedStream(seed ^ mix64((static_cast<std::uint64_t>(a) << 32) | b)) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix64(key_ + (counter + 1) * kGoldenGamma);
  }

  constexpr double uniform(std::uint64_t counter) const { return to_unit(bits(counter)); }

  /// Standard normal from counters (c, c + 1).
  double normal(std::uint64_t counter) const {
    const double u1 = 1.0 - uniform(counter);
    const double u2 = uniform(counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace lidarforge
