// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "lidarforge/core/error.hpp"
#include "lidarforge/core/rng.hpp"
#include "lidarforge/core/vec3.hpp"

namespace lidarforge {

struct CellKey {
  std::int64_t x, y, z;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(k.x));
    h = mix64(h ^ static_cast<std::uint64_t>(k.y));
    return static_cast<std::size_t>(mix64(h ^ static_cast<std::uint64_t>(k.z)));
  }
};

inline CellKey cell_of(const Vec3& p, double cell_size) {
  return {static_cast<std::int64_t>(std::floor(p.x / cell_size)),
          static_cast<std::int64_t>(std::floor(p.y / cell_size)),
          static_cast<std::int64_t>(std::floor(p.z / cell_size))};
}

struct Neighbor {
  std::uint32_t id;
  double distance;
};

/// Uniform voxel hash grid over a copied point set. Immutable after construction.
class PointIndex {
 public:
  PointIndex() = default;

  PointIndex(std::span<const Vec3> points, double cell_size)
      : points_(points.begin(), points.end()), cell_size_(cell_size) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
      throw Error("PointIndex: cell size must be positive");
    }
    std::vector<CellKey> keys(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) keys[i] = cell_of(points_[i], cell_size_);
    ids_.resize(points_.size());
    std::iota(ids_.begin(), ids_.end(), 0u);
    // Group ids by cell, ascending id inside each cell.
    std::unordered_map<CellKey, std::uint32_t, CellKeyHash> counts;
    for (const CellKey& k : keys) ++counts[k];
    std::uint32_t offset = 0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      auto it = cells_.find(keys[i]);
      if (it == cells_.end()) {
        const std::uint32_t n = counts[keys[i]];
        cells_.emplace(keys[i], Range{offset, offset});
        offset += n;
      }
    }
    for (std::uint32_t i = 0; i < points_.size(); ++i) {
      Range& r = cells_[keys[i]];
      ids_[r.end++] = i;
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double cell_size() const { return cell_size_; }
  const Vec3& point(std::uint32_t id) const { return points_[id]; }
  std::span<const Vec3> points() const { return points_; }

  /// Closest point within `radius` (inclusive); ties go to the lowest id.
  std::optional<Neighbor> nearest(const Vec3& query, double radius) const {
    const double r2 = radius * radius;
    std::uint32_t best_id = std::numeric_limits<std::uint32_t>::max();
    double best_d2 = std::numeric_limits<double>::infinity();
    for_each_within(query, radius, [&](std::uint32_t id, double d2) {
      if (d2 < best_d2 || (d2 == best_d2 && id < best_id)) {
        best_d2 = d2;
        best_id = id;
      }
    });
    if (best_d2 > r2) return std::nullopt;
    return Neighbor{best_id, std::sqrt(best_d2)};
  }

  /// Calls `f(id, squared_distance)` for every point with distance <= radius.
  /// Visit order is unspecified.
  template <typename F>
  void for_each_within(const Vec3& query, double radius, F&& f) const {
    if (points_.empty() || !(radius > 0.0)) return;
    const double r2 = radius * radius;
    const CellKey lo = cell_of(query - Vec3{radius, radius, radius}, cell_size_);
    const CellKey hi = cell_of(query + Vec3{radius, radius, radius}, cell_size_);
    const double span_cells = static_cast<double>(hi.x - lo.x + 1) *
                              static_cast<double>(hi.y - lo.y + 1) *
                              static_cast<double>(hi.z - lo.z + 1);
    auto visit_range = [&](const Range& range) {
      for (std::uint32_t k = range.begin; k < range.end; ++k) {
        const std::uint32_t id = ids_[k];
        const double d2 = squared_distance(points_[id], query);
        if (d2 <= r2) f(id, d2);
      }
    };
    if (span_cells > static_cast<double>(cells_.size())) {
      for (const auto& [key, range] : cells_) {
        if (key.x >= lo.x && key.x <= hi.x && key.y >= lo.y && key.y <= hi.y && key.z >= lo.z &&
            key.z <= hi.z) {
          visit_range(range);
        }
      }
      return;
    }
    for (std::int64_t x = lo.x; x <= hi.x; ++x) {
      for (std::int64_t y = lo.y; y <= hi.y; ++y) {
        for (std::int64_t z = lo.z; z <= hi.z; ++z) {
          auto it = cells_.find({x, y, z});
          if (it != cells_.end()) visit_range(it->second);
        }
      }
    }
  }

 private:
  struct Range {
    std::uint32_t begin, end;
  };

  std::vector<Vec3> points_;
  double cell_size_ = 1.0;
  std::vector<std::uint32_t> ids_;
  std::unordered_map<CellKey, Range, CellKeyHash> cells_;
};

}  // namespace lidarforge
