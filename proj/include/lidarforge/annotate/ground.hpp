// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "lidarforge/core/rng.hpp"
#include "lidarforge/core/vec3.hpp"

namespace lidarforge {

enum class GroundMethod { kRansac, kZThreshold };

struct GroundParams {
  GroundMethod method = GroundMethod::kRansac;
  double z_threshold_m = 0.2;  // in the cloud's own frame
  int ransac_iterations = 200;
  double inlier_distance_m = 0.15;
  double min_inlier_ratio = 0.2;  // below this the RANSAC fit falls back to the z threshold
  double max_tilt_deg = 30.0;     // candidate planes steeper than this are not ground
  std::uint64_t seed = 0;
};

struct Plane {
  Vec3 normal;  // unit, normal.z >= 0
  double offset = 0.0;  // normal . p = offset on the plane

  double distance(const Vec3& p) const { return std::abs(dot(normal, p) - offset); }
};

struct GroundFit {
  std::vector<std::uint8_t> mask;  // 1 = ground
  std::optional<Plane> plane;      // set when RANSAC was used
  bool fell_back = false;
};

inline std::vector<std::uint8_t> z_threshold_mask(std::span<const Vec3> points, double z_threshold) {
  std::vector<std::uint8_t> mask(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) mask[i] = points[i].z < z_threshold ? 1 : 0;
  return mask;
}

/// RANSAC plane fit (seeded), restricted to near-horizontal planes, falling
/// back to a z threshold when the best plane explains too few points.
inline GroundFit fit_ground(std::span<const Vec3> points, const GroundParams& params) {
  GroundFit fit;
  if (params.method == GroundMethod::kZThreshold || points.size() < 3) {
    fit.mask = z_threshold_mask(points, params.z_threshold_m);
    fit.fell_back = params.method == GroundMethod::kRansac;
    return fit;
  }
  Rng rng(params.seed);
  const double min_cos = std::cos(params.max_tilt_deg * std::numbers::pi / 180.0);
  std::size_t best_count = 0;
  Plane best;
  for (int it = 0; it < params.ransac_iterations; ++it) {
    const std::size_t a = rng.below(points.size());
    const std::size_t b = rng.below(points.size());
    const std::size_t c = rng.below(points.size());
    if (a == b || b == c || a == c) continue;
    const Vec3 n = cross(points[b] - points[a], points[c] - points[a]);
    const double len = norm(n);
    if (!(len > 1e-12)) continue;
    Plane plane{n / len, 0.0};
    if (plane.normal.z < 0.0) plane.normal = -plane.normal;
    if (plane.normal.z < min_cos) continue;
    plane.offset = dot(plane.normal, points[a]);
    std::size_t count = 0;
    for (const Vec3& p : points) count += plane.distance(p) <= params.inlier_distance_m ? 1 : 0;
    if (count > best_count) {
      best_count = count;
      best = plane;
    }
  }
  if (static_cast<double>(best_count) < params.min_inlier_ratio * static_cast<double>(points.size())) {
    fit.mask = z_threshold_mask(points, params.z_threshold_m);
    fit.fell_back = true;
    return fit;
  }
  fit.plane = best;
  fit.mask.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    fit.mask[i] = best.distance(points[i]) <= params.inlier_distance_m ? 1 : 0;
  }
  return fit;
}

/// Ground mask (1 = ground) of a cloud.
inline std::vector<std::uint8_t> remove_ground(std::span<const Vec3> points, const GroundParams& params = {}) {
  return fit_ground(points, params).mask;
}

}  // namespace lidarforge
