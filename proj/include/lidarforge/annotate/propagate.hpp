// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lidarforge/annotate/cluster.hpp"
#include "lidarforge/core/error.hpp"
#include "lidarforge/core/parallel.hpp"
#include "lidarforge/core/pose.hpp"
#include "lidarforge/geometry/point_index.hpp"
#include "lidarforge/lidar/point_cloud.hpp"

namespace lidarforge {

/// Labels every frame point with the class of the nearest clustered map point
/// within `radius_m` (after mapping the point through its frame pose); points
/// with no such neighbor, or whose cluster is unassigned, become `other_class`.
inline std::vector<LabeledPointCloud> propagate_labels(std::span<const LabeledPointCloud> frames,
                                                       std::span<const Pose> trajectory,
                                                       const ClusterSet& clusters, double radius_m,
                                                       Label other_class,
                                                       const std::vector<std::string>& class_names,
                                                       unsigned workers = 1) {
  if (trajectory.size() < frames.size()) throw Error("propagate_labels: trajectory shorter than sequence");
  if (!(radius_m > 0.0)) throw Error("propagate_labels: radius must be positive");
  if (other_class >= class_names.size()) throw Error("propagate_labels: 'other' class out of range");

  std::vector<Vec3> clustered;
  std::vector<Label> clustered_class;
  for (std::size_t i = 0; i < clusters.points.size(); ++i) {
    const std::int32_t id = clusters.cluster_of[i];
    if (id == kUnclustered) continue;
    const auto& assigned = clusters.clusters[id].assigned_class;
    if (assigned && *assigned >= class_names.size()) throw Error("propagate_labels: assigned class out of range");
    clustered.push_back(clusters.points[i]);
    clustered_class.push_back(assigned.value_or(other_class));
  }
  const PointIndex index(clustered, radius_m);

  std::vector<LabeledPointCloud> out(frames.begin(), frames.end());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    LabeledPointCloud& frame = out[f];
    frame.class_names = class_names;
    frame.labels.assign(frame.size(), other_class);
    const Pose& pose = trajectory[f];
    parallel_for(
        frame.size(), workers,
        [&](std::size_t i) {
          if (auto nn = index.nearest(pose.apply(frame.points[i]), radius_m)) {
            frame.labels[i] = clustered_class[nn->id];
          }
        },
        1024);
  }
  return out;
}

}  // namespace lidarforge
