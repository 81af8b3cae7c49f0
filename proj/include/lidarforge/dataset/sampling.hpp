// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lidarforge/core/error.hpp"
#include "lidarforge/core/rng.hpp"
#include "lidarforge/lidar/point_cloud.hpp"

namespace lidarforge {

/// Indices of a uniform k-subset of [0, n) without replacement, ascending.
/// Partial Fisher-Yates over the index array.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                           std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k >= n) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Keeps k uniformly chosen points in input order; k >= size returns the cloud unchanged.
inline LabeledPointCloud downsample(const LabeledPointCloud& cloud, std::size_t k, std::uint64_t seed) {
  if (k >= cloud.size()) return cloud;
  const auto idx = sample_without_replacement(cloud.size(), k, seed);
  return select_points(cloud, idx);
}

struct MixSpec {
  std::size_t total = 10000;
  double synthetic_fraction = 0.5;
  std::vector<std::string> real_pool;
  std::vector<std::string> synthetic_pool;
};

enum class Source { kSynthetic, kReal };

struct MixEntry {
  std::string path;
  Source source = Source::kSynthetic;
  std::size_t repetitions = 1;
};

struct MixResult {
  std::vector<MixEntry> entries;  // synthetic first, then real, each in shuffled order

  std::size_t total(Source s) const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.source == s ? e.repetitions : 0;
    return n;
  }
};

/// floor(total * fraction) distinct synthetic files, the remainder filled by
/// cycling a shuffled real pool so per-file repetitions differ by at most one.
inline MixResult mix_datasets(const MixSpec& spec, std::uint64_t seed) {
  if (!(spec.synthetic_fraction >= 0.0 && spec.synthetic_fraction <= 1.0)) {
    throw ConfigError("mix: synthetic fraction must be in [0, 1]");
  }
  const auto n_synth = static_cast<std::size_t>(
      std::floor(static_cast<double>(spec.total) * spec.synthetic_fraction));
  const std::size_t n_real = spec.total - n_synth;
  if (n_synth > spec.synthetic_pool.size()) {
    throw ConfigError("mix: synthetic pool has " + std::to_string(spec.synthetic_pool.size()) +
                      " files but " + std::to_string(n_synth) + " unique files are required");
  }
  if (n_real > 0 && spec.real_pool.empty()) throw ConfigError("mix: real pool is empty");

  MixResult result;
  Rng rng(seed);
  std::vector<std::string> synth = spec.synthetic_pool;
  rng.shuffle(synth);
  for (std::size_t i = 0; i < n_synth; ++i) result.entries.push_back({synth[i], Source::kSynthetic, 1});

  if (n_real > 0) {
    std::vector<std::string> real = spec.real_pool;
    rng.shuffle(real);
    const std::size_t m = real.size();
    const std::size_t base = n_real / m;
    const std::size_t extra = n_real % m;
    // Cycling n_real draws over m files gives the first `extra` files one more use.
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t reps = base + (i < extra ? 1 : 0);
      if (reps > 0) result.entries.push_back({real[i], Source::kReal, reps});
    }
  }
  return result;
}

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

/// Seeded shuffle, then the first `val_count` files go to validation. Both
/// halves keep the input's relative order.
inline Split split_dataset(const std::vector<std::string>& files, std::size_t val_count,
                           std::uint64_t seed) {
  if (val_count > files.size()) {
    throw ConfigError("split: validation count " + std::to_string(val_count) + " exceeds " +
                      std::to_string(files.size()) + " files");
  }
  std::vector<std::size_t> order(files.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> is_val(files.size(), false);
  for (std::size_t i = 0; i < val_count; ++i) is_val[order[i]] = true;
  Split s;
  for (std::size_t i = 0; i < files.size(); ++i) (is_val[i] ? s.val : s.train).push_back(files[i]);
  return s;
}

}  // namespace lidarforge
