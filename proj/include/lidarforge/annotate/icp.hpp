// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "lidarforge/annotate/ground.hpp"
#include "lidarforge/core/error.hpp"
#include "lidarforge/core/parallel.hpp"
#include "lidarforge/core/pose.hpp"
#include "lidarforge/geometry/point_index.hpp"

namespace lidarforge {

/// Index of the first point falling in each voxel, in input order.
inline std::vector<std::size_t> voxel_representatives(std::span<const Vec3> points, double voxel_m) {
  if (!(voxel_m > 0.0)) throw Error("voxel size must be positive");
  std::unordered_set<CellKey, CellKeyHash> seen;
  seen.reserve(points.size());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (seen.insert(cell_of(points[i], voxel_m)).second) keep.push_back(i);
  }
  return keep;
}

inline std::vector<Vec3> voxel_downsample(std::span<const Vec3> points, double voxel_m) {
  std::vector<Vec3> out;
  for (std::size_t i : voxel_representatives(points, voxel_m)) out.push_back(points[i]);
  return out;
}

/// Least-squares rigid transform mapping source[i] onto target[i] (Kabsch/Umeyama
/// without scale). A reflection is avoided by flipping the axis of the smallest
/// singular value.
inline Pose solve_rigid(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size() || source.empty()) {
    throw Error("solve_rigid: need equal, non-empty correspondence sets");
  }
  const double n = static_cast<double>(source.size());
  Vec3 cs, ct;
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs = cs / n;
  ct = ct / n;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 a = source[i] - cs;
    const Vec3 b = target[i] - ct;
    h += Eigen::Vector3d(a.x, a.y, a.z) * Eigen::Vector3d(b.x, b.y, b.z).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = v * d * u.transpose();
  Pose pose;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) pose.rotation(i, j) = r(i, j);
  }
  pose.translation = ct - pose.rotation * cs;
  return pose;
}

struct IcpParams {
  double voxel_m = 0.5;
  double max_correspondence_m = 1.0;
  int max_iterations = 50;
  double epsilon = 1e-6;  // stop when |delta angle| + |delta translation| falls below
  // Drop each set's dominant near-horizontal plane before matching. Ring-sampled
  // ground otherwise pulls the horizontal translation toward zero.
  bool exclude_ground = true;
  GroundParams ground;
  unsigned workers = 1;
};

struct IcpResult {
  Pose pose;
  double rmse = 0.0;
  std::size_t correspondences = 0;
  int iterations = 0;
  bool converged = false;
};

inline constexpr std::size_t kMinIcpPoints = 10;

namespace detail {

/// Points off the fitted ground plane; all points when no plane is found.
inline std::vector<Vec3> without_ground(std::span<const Vec3> points, const GroundParams& params) {
  GroundParams ransac = params;
  ransac.method = GroundMethod::kRansac;
  const GroundFit fit = fit_ground(points, ransac);
  if (fit.fell_back) return {points.begin(), points.end()};
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!fit.mask[i]) out.push_back(points[i]);
  }
  return out;
}

struct Correspondences {
  std::vector<Vec3> source;
  std::vector<Vec3> target;
  double squared_error = 0.0;
};

inline Correspondences find_correspondences(std::span<const Vec3> source, const PointIndex& target,
                                            const Pose& pose, double max_dist, unsigned workers) {
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<Vec3> moved(source.size());
  std::vector<std::uint32_t> match(source.size(), kNone);
  parallel_for(
      source.size(), workers,
      [&](std::size_t i) {
        moved[i] = pose.apply(source[i]);
        if (auto nn = target.nearest(moved[i], max_dist)) match[i] = nn->id;
      },
      512);
  Correspondences c;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (match[i] == kNone) continue;
    c.source.push_back(moved[i]);
    c.target.push_back(target.point(match[i]));
    c.squared_error += squared_distance(moved[i], target.point(match[i]));
  }
  return c;
}

}  // namespace detail

/// ICP iterations of an already reduced source against an indexed target.
inline IcpResult icp_refine(std::span<const Vec3> source, const PointIndex& target, const Pose& initial,
                            const IcpParams& params) {
  if (source.size() < kMinIcpPoints || target.size() < kMinIcpPoints) {
    throw Error("icp: fewer than 10 points after voxelization");
  }
  IcpResult result;
  result.pose = initial;
  for (int it = 0; it < params.max_iterations; ++it) {
    const auto corr = detail::find_correspondences(source, target, result.pose,
                                                   params.max_correspondence_m, params.workers);
    if (corr.source.size() < kMinIcpPoints) {
      throw Error("icp: only " + std::to_string(corr.source.size()) +
                  " correspondences at iteration " + std::to_string(it));
    }
    const Pose delta = solve_rigid(corr.source, corr.target);
    result.pose = delta * result.pose;
    result.iterations = it + 1;
    if (rotation_angle(delta.rotation) + norm(delta.translation) < params.epsilon) {
      result.converged = true;
      break;
    }
  }
  const auto final_corr = detail::find_correspondences(source, target, result.pose,
                                                       params.max_correspondence_m, params.workers);
  result.correspondences = final_corr.source.size();
  result.rmse = final_corr.source.empty()
                    ? std::numeric_limits<double>::infinity()
                    : std::sqrt(final_corr.squared_error / static_cast<double>(final_corr.source.size()));
  return result;
}

/// Point-to-point ICP on voxel-downsampled copies of both sets (ground removed
/// first unless disabled). Returns the pose mapping source into the target
/// frame. Throws Error when either set has fewer than 10 voxels or an
/// iteration finds fewer than 10 matches; hitting max_iterations is reported
/// through `converged`.
inline IcpResult icp_align(std::span<const Vec3> source, std::span<const Vec3> target,
                           const Pose& initial, const IcpParams& params) {
  std::vector<Vec3> src, tgt;
  if (params.exclude_ground) {
    src = voxel_downsample(detail::without_ground(source, params.ground), params.voxel_m);
    tgt = voxel_downsample(detail::without_ground(target, params.ground), params.voxel_m);
  } else {
    src = voxel_downsample(source, params.voxel_m);
    tgt = voxel_downsample(target, params.voxel_m);
  }
  if (src.size() < kMinIcpPoints || tgt.size() < kMinIcpPoints) {
    throw Error("icp: fewer than 10 points after voxelization");
  }
  return icp_refine(src, PointIndex(tgt, params.max_correspondence_m), initial, params);
}

}  // namespace lidarforge
