// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lidarforge/core/error.hpp"
#include "lidarforge/core/vec3.hpp"
#include "lidarforge/geometry/point_index.hpp"
#include "lidarforge/lidar/point_cloud.hpp"

namespace lidarforge {

inline constexpr std::int32_t kUnclustered = -1;

struct Cluster {
  Vec3 centroid;
  Aabb extent;
  std::size_t count = 0;
  std::optional<Label> assigned_class;
};

struct ClusterSet {
  std::vector<Vec3> points;             // map frame
  std::vector<std::int32_t> cluster_of;  // per point, or kUnclustered
  std::vector<Cluster> clusters;
  double linkage_m = 0.0;
};

/// Single-linkage connected components of the graph joining points at distance
/// <= linkage. Components smaller than `min_size` stay unclustered; the rest get
/// dense ids ordered by their lowest point index.
inline ClusterSet euclidean_cluster(std::span<const Vec3> points, double linkage_m, std::size_t min_size) {
  if (!(linkage_m > 0.0)) throw Error("euclidean_cluster: linkage distance must be positive");
  ClusterSet set;
  set.points.assign(points.begin(), points.end());
  set.linkage_m = linkage_m;
  set.cluster_of.assign(points.size(), kUnclustered);
  if (points.empty()) return set;

  const PointIndex index(points, linkage_m);
  std::vector<std::uint8_t> visited(points.size(), 0);
  std::vector<std::uint32_t> component;
  std::vector<std::uint32_t> frontier;
  for (std::uint32_t seed = 0; seed < points.size(); ++seed) {
    if (visited[seed]) continue;
    component.clear();
    frontier.assign(1, seed);
    visited[seed] = 1;
    while (!frontier.empty()) {
      const std::uint32_t p = frontier.back();
      frontier.pop_back();
      component.push_back(p);
      index.for_each_within(points[p], linkage_m, [&](std::uint32_t q, double) {
        if (!visited[q]) {
          visited[q] = 1;
          frontier.push_back(q);
        }
      });
    }
    if (component.size() < min_size) continue;
    const auto id = static_cast<std::int32_t>(set.clusters.size());
    Cluster c;
    Vec3 sum;
    for (std::uint32_t p : component) {
      set.cluster_of[p] = id;
      sum += points[p];
      c.extent.extend(points[p]);
    }
    c.count = component.size();
    c.centroid = sum / static_cast<double>(component.size());
    set.clusters.push_back(c);
  }
  return set;
}

/// Assigns each cluster the most frequent of the given per-point labels
/// (ties to the lower label). Used for held-out data with known labels.
inline void assign_by_majority(ClusterSet& set, std::span<const Label> labels) {
  if (labels.size() != set.points.size()) throw Error("assign_by_majority: label count mismatch");
  std::vector<std::map<Label, std::size_t>> votes(set.clusters.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (set.cluster_of[i] != kUnclustered) ++votes[set.cluster_of[i]][labels[i]];
  }
  for (std::size_t c = 0; c < set.clusters.size(); ++c) {
    std::size_t best = 0;
    for (const auto& [label, n] : votes[c]) {
      if (n > best) {
        best = n;
        set.clusters[c].assigned_class = label;
      }
    }
  }
}

/// Parses lines `cluster_id class_name` ('#' starts a comment).
inline std::map<std::int32_t, Label> read_cluster_assignments(const std::filesystem::path& path,
                                                              const std::vector<std::string>& class_names) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open assignment file " + path.string());
  std::map<std::int32_t, Label> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::int32_t id;
    std::string name;
    if (!(ss >> id)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ParseError(path.string(), ParseError::Unit::kLine, line_no, "expected 'cluster_id class_name'");
    }
    if (!(ss >> name)) {
      throw ParseError(path.string(), ParseError::Unit::kLine, line_no, "missing class name");
    }
    std::optional<Label> label;
    for (std::size_t i = 0; i < class_names.size(); ++i) {
      if (class_names[i] == name) label = static_cast<Label>(i);
    }
    if (!label) throw ParseError(path.string(), ParseError::Unit::kLine, line_no, "unknown class '" + name + "'");
    out[id] = *label;
  }
  return out;
}

inline void apply_assignments(ClusterSet& set, const std::map<std::int32_t, Label>& assignments) {
  for (const auto& [id, label] : assignments) {
    if (id < 0 || static_cast<std::size_t>(id) >= set.clusters.size()) {
      throw Error("assignment references unknown cluster " + std::to_string(id));
    }
    set.clusters[id].assigned_class = label;
  }
}

/// Cluster ids as an LPC-ready cloud: label 0 = unclustered, label k + 1 = cluster k.
inline LabeledPointCloud cluster_cloud(const ClusterSet& set) {
  if (set.clusters.size() >= 0xffff) throw Error("too many clusters to encode");
  LabeledPointCloud cloud;
  cloud.points = set.points;
  cloud.class_names.push_back("unclustered");
  for (std::size_t c = 0; c < set.clusters.size(); ++c) cloud.class_names.push_back("cluster_" + std::to_string(c));
  cloud.labels.reserve(set.points.size());
  for (std::int32_t id : set.cluster_of) cloud.labels.push_back(static_cast<Label>(id + 1));
  return cloud;
}

/// Inverse of cluster_cloud; recomputes centroids and extents.
inline ClusterSet cluster_set_from_cloud(const LabeledPointCloud& cloud) {
  ClusterSet set;
  set.points = cloud.points;
  const std::size_t k = cloud.class_names.empty() ? 0 : cloud.class_names.size() - 1;
  set.clusters.resize(k);
  std::vector<Vec3> sums(k);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::int32_t id = static_cast<std::int32_t>(cloud.labels[i]) - 1;
    set.cluster_of.push_back(id);
    if (id == kUnclustered) continue;
    sums[id] += cloud.points[i];
    set.clusters[id].extent.extend(cloud.points[i]);
    ++set.clusters[id].count;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (set.clusters[c].count > 0) set.clusters[c].centroid = sums[c] / static_cast<double>(set.clusters[c].count);
  }
  return set;
}

}  // namespace lidarforge
