// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lidarforge/core/error.hpp"
#include "lidarforge/core/pose.hpp"
#include "lidarforge/core/vec3.hpp"

namespace lidarforge {

using Label = std::uint16_t;

/// Points with parallel per-point arrays. `rings` and `columns` are either both
/// empty or both the same length as `points`.
struct LabeledPointCloud {
  std::vector<Vec3> points;
  std::vector<Label> labels;
  std::vector<std::uint16_t> rings;
  std::vector<std::uint16_t> columns;
  std::vector<std::string> class_names;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_ring_columns() const { return !rings.empty() || !columns.empty(); }

  void reserve(std::size_t n, bool with_ring_columns) {
    points.reserve(n);
    labels.reserve(n);
    if (with_ring_columns) {
      rings.reserve(n);
      columns.reserve(n);
    }
  }

  friend bool operator==(const LabeledPointCloud&, const LabeledPointCloud&) = default;
};

/// Throws Error when the per-point arrays disagree in length or a label is out of range.
inline void validate(const LabeledPointCloud& cloud) {
  const std::size_t n = cloud.points.size();
  if (cloud.labels.size() != n) throw Error("point cloud: labels length differs from points");
  if (cloud.has_ring_columns() && (cloud.rings.size() != n || cloud.columns.size() != n)) {
    throw Error("point cloud: rings/columns length differs from points");
  }
  if (cloud.class_names.size() > 0xffff) throw Error("point cloud: more than 65535 classes");
  for (std::size_t i = 0; i < n; ++i) {
    if (cloud.labels[i] >= cloud.class_names.size()) {
      throw Error("point cloud: label " + std::to_string(cloud.labels[i]) + " at point " +
                  std::to_string(i) + " exceeds class count " +
                  std::to_string(cloud.class_names.size()));
    }
  }
}

/// Copies the selected points (in the given order) with all parallel arrays.
inline LabeledPointCloud select_points(const LabeledPointCloud& cloud,
                                       std::span<const std::size_t> indices) {
  LabeledPointCloud out;
  out.class_names = cloud.class_names;
  const bool rc = cloud.has_ring_columns();
  out.reserve(indices.size(), rc);
  for (std::size_t i : indices) {
    out.points.push_back(cloud.points[i]);
    out.labels.push_back(cloud.labels[i]);
    if (rc) {
      out.rings.push_back(cloud.rings[i]);
      out.columns.push_back(cloud.columns[i]);
    }
  }
  return out;
}

/// Applies `pose` to every point; other arrays are untouched.
inline LabeledPointCloud transform_cloud(const LabeledPointCloud& cloud, const Pose& pose) {
  LabeledPointCloud out = cloud;
  for (Vec3& p : out.points) p = pose.apply(p);
  return out;
}

/// Concatenates clouds that share a class table. Ring/column arrays survive
/// only if every part has them.
inline LabeledPointCloud concatenate(std::span<const LabeledPointCloud> parts) {
  LabeledPointCloud out;
  if (parts.empty()) return out;
  out.class_names = parts.front().class_names;
  bool rc = true;
  for (const auto& p : parts) {
    if (p.class_names != out.class_names) throw Error("concatenate: class tables differ");
    rc = rc && p.has_ring_columns();
  }
  for (const auto& p : parts) {
    out.points.insert(out.points.end(), p.points.begin(), p.points.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    if (rc) {
      out.rings.insert(out.rings.end(), p.rings.begin(), p.rings.end());
      out.columns.insert(out.columns.end(), p.columns.begin(), p.columns.end());
    }
  }
  return out;
}

}  // namespace lidarforge
