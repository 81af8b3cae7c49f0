// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "lidarforge/core/error.hpp"
#include "lidarforge/core/pose.hpp"
#include "lidarforge/core/vec3.hpp"
#include "lidarforge/geometry/mesh.hpp"

namespace lidarforge {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();

  Vec3 at(double t) const { return origin + direction * t; }
};

struct Hit {
  double t = 0.0;
  std::uint32_t instance_id = 0;
  std::uint32_t triangle_id = 0;  // index within the instance's mesh
  Vec3 point;
};

/// A mesh placed in the world. The mesh must outlive the build call only.
struct MeshInstance {
  std::reference_wrapper<const TriangleMesh> mesh;
  Pose pose;
};

inline constexpr double kParallelDeterminant = 1e-12;

/// Two-sided Moller-Trumbore test. Returns t when the ray hits the triangle
/// (v0, v0 + e1, v0 + e2) inside [t_min, t_max].
inline std::optional<double> intersect_triangle(const Ray& ray, const Vec3& v0, const Vec3& e1,
                                                const Vec3& e2) {
  const Vec3 p = cross(ray.direction, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < kParallelDeterminant) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 s = ray.origin - v0;
  const double u = dot(s, p) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.direction, q) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv_det;
  if (!(t >= ray.t_min && t <= ray.t_max)) return std::nullopt;
  return t;
}

/// Bounding volume hierarchy over world-space triangles of all instances.
///
/// Instances are flattened at build time, so the BVH owns its geometry. Nodes
/// are stored depth first: an interior node's left child directly follows it
/// and `offset` holds the right child; a leaf's `offset` is its first slot in
/// the primitive order.
class Bvh {
 public:
  static constexpr int kBins = 16;
  static constexpr std::uint32_t kMaxLeafSize = 4;
  static constexpr int kMaxDepth = 64;

  struct Node {
    Aabb bounds;
    std::uint32_t offset = 0;
    std::uint32_t count = 0;  // 0 for interior nodes

    bool is_leaf() const { return count != 0; }
  };

  /// Flattened triangle in primitive order.
  struct Primitive {
    Vec3 v0, e1, e2;
    std::uint32_t instance_id;
    std::uint32_t triangle_id;
    std::uint32_t global_id;  // position in instance-major input order
  };

  static Bvh build(std::span<const MeshInstance> instances);

  std::optional<Hit> intersect(const Ray& ray) const;

  /// Calls `visit(primitive)` for every primitive in every leaf whose box the
  /// ray's [t_min, t_max] segment overlaps. No occlusion culling.
  template <typename Visitor>
  void visit_candidates(const Ray& ray, Visitor&& visit) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Primitive>& primitives() const { return prims_; }
  /// Global triangle id of each primitive slot.
  std::vector<std::uint32_t> primitive_order() const;
  std::size_t triangle_count() const { return prims_.size(); }
  std::size_t instance_count() const { return instance_count_; }
  int depth() const { return depth_; }
  const Aabb& bounds() const { return nodes_.front().bounds; }

 private:
  struct BuildItem {
    Aabb bounds;
    Vec3 centroid;
    std::uint32_t global_id;
  };

  std::uint32_t build_node(std::vector<BuildItem>& items, std::uint32_t begin, std::uint32_t end,
                           int depth);

  std::vector<Node> nodes_;
  std::vector<Primitive> prims_;
  std::vector<Primitive> input_;  // indexed by global id during build
  std::size_t instance_count_ = 0;
  int depth_ = 0;
};

namespace detail {

struct RayBoxContext {
  Vec3 origin;
  Vec3 inv_dir;
};

/// Entry distance of the ray into `box` clipped to [t_min, t_max], or +inf on a miss.
/// NaNs from 0 * inf on slab planes are discarded by the argument order of min/max.
inline double ray_box_entry(const RayBoxContext& ctx, const Aabb& box, double t_min, double t_max) {
  double t_near = t_min;
  double t_far = t_max;
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.lo[a] - ctx.origin[a]) * ctx.inv_dir[a];
    double t1 = (box.hi[a] - ctx.origin[a]) * ctx.inv_dir[a];
    if (t0 > t1) std::swap(t0, t1);
    // Slack keeps triangle hits on the box boundary from being culled by rounding.
    t0 -= 1e-9 * std::abs(t0) + 1e-12;
    t1 += 1e-9 * std::abs(t1) + 1e-12;
    t_near = t0 > t_near ? t0 : t_near;
    t_far = t1 < t_far ? t1 : t_far;
    if (t_near > t_far) return std::numeric_limits<double>::infinity();
  }
  return t_near;
}

inline RayBoxContext make_ray_box_context(const Ray& ray) {
  return {ray.origin, {1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z}};
}

}  // namespace detail

inline Bvh Bvh::build(std::span<const MeshInstance> instances) {
  Bvh bvh;
  bvh.instance_count_ = instances.size();
  std::vector<BuildItem> items;
  for (std::uint32_t inst = 0; inst < instances.size(); ++inst) {
    const TriangleMesh& mesh = instances[inst].mesh.get();
    const Pose& pose = instances[inst].pose;
    if (!pose.is_finite()) throw Error("build_bvh: instance " + std::to_string(inst) + " has a non-finite pose");
    validate(mesh);
    std::vector<Vec3> world(mesh.vertices.size());
    for (std::size_t v = 0; v < world.size(); ++v) world[v] = pose.apply(mesh.vertices[v]);
    for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
      const Triangle& tri = mesh.triangles[t];
      const Vec3& a = world[tri[0]];
      const Vec3& b = world[tri[1]];
      const Vec3& c = world[tri[2]];
      const auto global = static_cast<std::uint32_t>(bvh.input_.size());
      bvh.input_.push_back({a, b - a, c - a, inst, t, global});
      BuildItem item;
      item.bounds.extend(a);
      item.bounds.extend(b);
      item.bounds.extend(c);
      item.centroid = (a + b + c) * (1.0 / 3.0);
      item.global_id = global;
      items.push_back(item);
    }
  }
  if (bvh.input_.empty()) throw Error("build_bvh: empty scene");

  bvh.nodes_.reserve(2 * items.size());
  bvh.prims_.reserve(items.size());
  bvh.build_node(items, 0, static_cast<std::uint32_t>(items.size()), 1);
  bvh.input_.clear();
  bvh.input_.shrink_to_fit();
  return bvh;
}

inline std::uint32_t Bvh::build_node(std::vector<BuildItem>& items, std::uint32_t begin,
                                     std::uint32_t end, int depth) {
  depth_ = std::max(depth_, depth);
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb bounds, centroid_bounds;
  for (std::uint32_t i = begin; i < end; ++i) {
    bounds.extend(items[i].bounds);
    centroid_bounds.extend(items[i].centroid);
  }
  nodes_[index].bounds = bounds;
  const std::uint32_t count = end - begin;

  auto make_leaf = [&] {
    nodes_[index].offset = static_cast<std::uint32_t>(prims_.size());
    nodes_[index].count = count;
    for (std::uint32_t i = begin; i < end; ++i) prims_.push_back(input_[items[i].global_id]);
    return index;
  };

  if (count == 1 || depth >= kMaxDepth) return make_leaf();

  // Binned SAH over centroids. Cost is measured in units of one triangle test
  // with a node traversal costing 1.
  int best_axis = -1;
  int best_split = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  const double parent_area = bounds.surface_area();
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = centroid_bounds.lo[axis];
    const double extent = centroid_bounds.hi[axis] - lo;
    if (!(extent > 0.0)) continue;
    const double scale = kBins / extent;
    std::array<Aabb, kBins> bin_bounds;
    std::array<std::uint32_t, kBins> bin_counts{};
    for (std::uint32_t i = begin; i < end; ++i) {
      const int b = std::min(kBins - 1, static_cast<int>((items[i].centroid[axis] - lo) * scale));
      bin_bounds[b].extend(items[i].bounds);
      ++bin_counts[b];
    }
    std::array<double, kBins - 1> left_area{}, right_area{};
    std::array<std::uint32_t, kBins - 1> left_count{}, right_count{};
    Aabb acc;
    std::uint32_t n = 0;
    for (int s = 0; s < kBins - 1; ++s) {
      acc.extend(bin_bounds[s]);
      n += bin_counts[s];
      left_area[s] = acc.surface_area();
      left_count[s] = n;
    }
    acc = Aabb{};
    n = 0;
    for (int s = kBins - 1; s > 0; --s) {
      acc.extend(bin_bounds[s]);
      n += bin_counts[s];
      right_area[s - 1] = acc.surface_area();
      right_count[s - 1] = n;
    }
    for (int s = 0; s < kBins - 1; ++s) {
      if (left_count[s] == 0 || right_count[s] == 0) continue;
      const double cost =
          1.0 + (left_area[s] * left_count[s] + right_area[s] * right_count[s]) /
                    (parent_area > 0.0 ? parent_area : 1.0);
      if (cost < best_cost) {
        best_cost = cost;
        best_axis = axis;
        best_split = s;
      }
    }
  }

  if (count <= kMaxLeafSize && !(best_cost < static_cast<double>(count))) return make_leaf();

  std::uint32_t mid;
  if (best_axis >= 0) {
    const double lo = centroid_bounds.lo[best_axis];
    const double scale = kBins / (centroid_bounds.hi[best_axis] - lo);
    auto it = std::stable_partition(
        items.begin() + begin, items.begin() + end, [&](const BuildItem& item) {
          return std::min(kBins - 1, static_cast<int>((item.centroid[best_axis] - lo) * scale)) <=
                 best_split;
        });
    mid = static_cast<std::uint32_t>(it - items.begin());
  } else {
    // Coincident centroids: no plane separates them, halve in input order.
    if (count <= kMaxLeafSize) return make_leaf();
    mid = begin + count / 2;
  }

  build_node(items, begin, mid, depth + 1);
  const std::uint32_t right = build_node(items, mid, end, depth + 1);
  nodes_[index].offset = right;
  return index;
}

inline std::optional<Hit> Bvh::intersect(const Ray& ray) const {
  const auto ctx = detail::make_ray_box_context(ray);
  double best_t = ray.t_max;
  const Primitive* best = nullptr;
  Ray probe = ray;

  std::array<std::uint32_t, 2 * kMaxDepth + 2> stack;
  int top = 0;
  if (detail::ray_box_entry(ctx, nodes_[0].bounds, ray.t_min, best_t) ==
      std::numeric_limits<double>::infinity()) {
    return std::nullopt;
  }
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.is_leaf()) {
      for (std::uint32_t i = node.offset; i < node.offset + node.count; ++i) {
        const Primitive& p = prims_[i];
        probe.t_max = best_t;
        if (auto t = intersect_triangle(probe, p.v0, p.e1, p.e2)) {
          // Ties resolve to the lowest global id, matching an in-order scan.
          if (best == nullptr || *t < best_t || (*t == best_t && p.global_id < best->global_id)) {
            best_t = *t;
            best = &p;
          }
        }
      }
      continue;
    }
    const std::uint32_t left = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
    const std::uint32_t right = node.offset;
    const double t_left = detail::ray_box_entry(ctx, nodes_[left].bounds, ray.t_min, best_t);
    const double t_right = detail::ray_box_entry(ctx, nodes_[right].bounds, ray.t_min, best_t);
    constexpr double kMiss = std::numeric_limits<double>::infinity();
    if (t_left != kMiss && t_right != kMiss) {
      // Push the far child first so the near one is visited next.
      if (t_left <= t_right) {
        stack[top++] = right;
        stack[top++] = left;
      } else {
        stack[top++] = left;
        stack[top++] = right;
      }
    } else if (t_left != kMiss) {
      stack[top++] = left;
    } else if (t_right != kMiss) {
      stack[top++] = right;
    }
  }
  if (best == nullptr) return std::nullopt;
  return Hit{best_t, best->instance_id, best->triangle_id, ray.at(best_t)};
}

template <typename Visitor>
void Bvh::visit_candidates(const Ray& ray, Visitor&& visit) const {
  const auto ctx = detail::make_ray_box_context(ray);
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const std::uint32_t idx = stack.back();
    stack.pop_back();
    const Node& node = nodes_[idx];
    if (detail::ray_box_entry(ctx, node.bounds, ray.t_min, ray.t_max) ==
        std::numeric_limits<double>::infinity()) {
      continue;
    }
    if (node.is_leaf()) {
      for (std::uint32_t i = node.offset; i < node.offset + node.count; ++i) visit(prims_[i]);
    } else {
      stack.push_back(node.offset);
      stack.push_back(idx + 1);
    }
  }
}

inline std::vector<std::uint32_t> Bvh::primitive_order() const {
  std::vector<std::uint32_t> order(prims_.size());
  std::transform(prims_.begin(), prims_.end(), order.begin(),
                 [](const Primitive& p) { return p.global_id; });
  return order;
}

/// Builds the BVH of a scene. Throws Error on an empty scene.
inline Bvh build_bvh(std::span<const MeshInstance> instances) { return Bvh::build(instances); }

}  // namespace lidarforge
