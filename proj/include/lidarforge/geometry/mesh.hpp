// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "lidarforge/core/error.hpp"
#include "lidarforge/core/pose.hpp"
#include "lidarforge/core/vec3.hpp"

namespace lidarforge {

using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle soup. `bounds` is kept in sync by the free functions in
/// this header; code that edits `vertices` directly must call update_bounds().
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  Aabb bounds;

  std::size_t triangle_count() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }

  void update_bounds() {
    bounds = Aabb{};
    for (const Vec3& v : vertices) bounds.extend(v);
  }

  Vec3 corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }
};

/// Throws Error if an index is out of range or a vertex is non-finite.
inline void validate(const TriangleMesh& mesh) {
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!is_finite(mesh.vertices[i])) {
      throw Error("mesh vertex " + std::to_string(i) + " is not finite");
    }
  }
  const auto n = static_cast<std::uint64_t>(mesh.vertices.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (std::uint32_t idx : mesh.triangles[t]) {
      if (idx >= n) {
        throw Error("triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) +
                    " of " + std::to_string(n));
      }
    }
  }
}

/// Maps every vertex v to scale * R v + t.
inline TriangleMesh transform_mesh(const TriangleMesh& mesh, const Pose& pose, double scale = 1.0) {
  if (!pose.is_finite() || !std::isfinite(scale)) throw Error("transform_mesh: non-finite pose");
  if (!(scale > 0.0)) throw Error("transform_mesh: scale must be positive");
  TriangleMesh out;
  out.triangles = mesh.triangles;
  if (pose == Pose::identity() && scale == 1.0) {
    // R v + 0 would turn -0.0 into +0.0; identity must be exact.
    out.vertices = mesh.vertices;
  } else {
    out.vertices.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) out.vertices.push_back(pose.apply(v * scale));
  }
  out.update_bounds();
  return out;
}

/// Keeps exactly the triangles whose three corners lie in the closed box.
/// Unreferenced vertices are dropped and indices compacted in first-use order.
inline TriangleMesh crop_mesh(const TriangleMesh& mesh, const Aabb& box) {
  constexpr std::uint32_t kUnmapped = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> remap(mesh.vertices.size(), kUnmapped);
  TriangleMesh out;
  for (const Triangle& tri : mesh.triangles) {
    if (!box.contains(mesh.vertices[tri[0]]) || !box.contains(mesh.vertices[tri[1]]) ||
        !box.contains(mesh.vertices[tri[2]])) {
      continue;
    }
    Triangle mapped;
    for (int k = 0; k < 3; ++k) {
      std::uint32_t& slot = remap[tri[k]];
      if (slot == kUnmapped) {
        slot = static_cast<std::uint32_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[tri[k]]);
      }
      mapped[k] = slot;
    }
    out.triangles.push_back(mapped);
  }
  out.update_bounds();
  return out;
}

/// Merges vertices closer than `tolerance` (grid-snapped, first occurrence wins).
/// Triangles that collapse to fewer than three distinct vertices are dropped.
inline TriangleMesh weld_vertices(const TriangleMesh& mesh, double tolerance = 1e-6) {
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::uint32_t> seen;
  std::vector<std::uint32_t> remap(mesh.vertices.size());
  TriangleMesh out;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    const auto key = std::make_tuple(static_cast<std::int64_t>(std::llround(v.x / tolerance)),
                                     static_cast<std::int64_t>(std::llround(v.y / tolerance)),
                                     static_cast<std::int64_t>(std::llround(v.z / tolerance)));
    auto [it, inserted] = seen.try_emplace(key, static_cast<std::uint32_t>(out.vertices.size()));
    if (inserted) out.vertices.push_back(v);
    remap[i] = it->second;
  }
  for (const Triangle& tri : mesh.triangles) {
    const Triangle t{remap[tri[0]], remap[tri[1]], remap[tri[2]]};
    if (t[0] != t[1] && t[1] != t[2] && t[0] != t[2]) out.triangles.push_back(t);
  }
  out.update_bounds();
  return out;
}

/// Appends `other` to `mesh`, offsetting its indices.
inline void append_mesh(TriangleMesh& mesh, const TriangleMesh& other) {
  const auto offset = static_cast<std::uint32_t>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const Triangle& t : other.triangles) {
    mesh.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  }
  mesh.bounds.extend(other.bounds);
}

/// Closed box with 12 outward-wound triangles.
inline TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back({(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z});
  }
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  m.update_bounds();
  return m;
}

/// Horizontal square [cx-h, cx+h] x [cy-h, cy+h] at height z, two triangles.
inline TriangleMesh make_ground_quad(double cx, double cy, double half_extent, double z = 0.0) {
  TriangleMesh m;
  m.vertices = {{cx - half_extent, cy - half_extent, z},
                {cx + half_extent, cy - half_extent, z},
                {cx + half_extent, cy + half_extent, z},
                {cx - half_extent, cy + half_extent, z}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.update_bounds();
  return m;
}

}  // namespace lidarforge
