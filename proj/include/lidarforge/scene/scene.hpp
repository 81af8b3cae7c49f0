// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lidarforge/core/error.hpp"
#include "lidarforge/core/pose.hpp"
#include "lidarforge/core/rng.hpp"
#include "lidarforge/geometry/bvh.hpp"
#include "lidarforge/geometry/mesh.hpp"
#include "lidarforge/geometry/mesh_io.hpp"
#include "lidarforge/lidar/point_cloud.hpp"

namespace lidarforge {

/// A class-tagged mesh in its own model frame.
struct Asset {
  std::string name;
  Label class_id = 0;
  TriangleMesh mesh;
  Vec3 centroid;                    // vertex mean
  double footprint_radius_m = 0.0;  // max horizontal vertex distance from centroid
};

inline Asset make_asset(std::string name, Label class_id, TriangleMesh mesh) {
  if (mesh.vertices.empty()) throw Error("asset '" + name + "' has no vertices");
  Asset a{std::move(name), class_id, std::move(mesh), {}, 0.0};
  Vec3 sum;
  for (const Vec3& v : a.mesh.vertices) sum += v;
  a.centroid = sum / static_cast<double>(a.mesh.vertices.size());
  for (const Vec3& v : a.mesh.vertices) {
    a.footprint_radius_m = std::max(a.footprint_radius_m, std::hypot(v.x - a.centroid.x, v.y - a.centroid.y));
  }
  return a;
}

struct AssetLibrary {
  std::vector<std::string> class_names;
  std::vector<Asset> assets;

  std::vector<std::size_t> assets_of_class(Label class_id) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assets.size(); ++i) {
      if (assets[i].class_id == class_id) out.push_back(i);
    }
    return out;
  }

  const Asset* find(const std::string& name) const {
    for (const Asset& a : assets) {
      if (a.name == name) return &a;
    }
    return nullptr;
  }
};

inline std::optional<Label> class_index(const std::vector<std::string>& class_names,
                                        const std::string& name) {
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == name) return static_cast<Label>(i);
  }
  return std::nullopt;
}

/// Loads a JSON manifest: a list of {"name", "class", "mesh", optional "scale"}.
/// Mesh paths are relative to the manifest's directory.
inline AssetLibrary load_asset_library(const std::filesystem::path& manifest_path,
                                       std::vector<std::string> class_names) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open asset manifest " + manifest_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw ConfigError(manifest_path.string() + ": manifest must be a JSON list");

  AssetLibrary lib;
  lib.class_names = std::move(class_names);
  std::set<std::string> names;
  const auto base = manifest_path.parent_path();
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& entry = doc[i];
    const std::string where = manifest_path.string() + ": entry " + std::to_string(i);
    if (!entry.is_object()) throw ConfigError(where + ": must be an object");
    for (const auto& [key, _] : entry.items()) {
      if (key != "name" && key != "class" && key != "mesh" && key != "scale") {
        throw ConfigError(where + ": unknown key '" + key + "'");
      }
    }
    if (!entry.contains("name") || !entry["name"].is_string() || !entry.contains("class") ||
        !entry["class"].is_string() || !entry.contains("mesh") || !entry["mesh"].is_string()) {
      throw ConfigError(where + ": requires string fields name, class, mesh");
    }
    const std::string name = entry["name"].get<std::string>();
    const std::string cls = entry["class"].get<std::string>();
    if (!names.insert(name).second) throw ConfigError(where + ": duplicate asset name '" + name + "'");
    const auto class_id = class_index(lib.class_names, cls);
    if (!class_id) throw ConfigError(where + ": unknown class '" + cls + "'");
    double scale = 1.0;
    if (entry.contains("scale")) {
      if (!entry["scale"].is_number() || !(entry["scale"].get<double>() > 0.0)) {
        throw ConfigError(where + ": scale must be a positive number");
      }
      scale = entry["scale"].get<double>();
    }
    const auto mesh_path = base / entry["mesh"].get<std::string>();
    if (!std::filesystem::exists(mesh_path)) {
      throw Error(where + ": missing mesh file " + mesh_path.string());
    }
    TriangleMesh mesh = load_mesh(mesh_path);
    if (scale != 1.0) mesh = transform_mesh(mesh, Pose::identity(), scale);
    lib.assets.push_back(make_asset(name, *class_id, std::move(mesh)));
  }
  return lib;
}

struct Rect {
  double min_x = -30.0, min_y = -30.0;
  double max_x = 30.0, max_y = 30.0;

  bool contains(double x, double y) const { return x >= min_x && x <= max_x && y >= min_y && y <= max_y; }
  double area() const { return (max_x - min_x) * (max_y - min_y); }
};

struct CountRange {
  std::uint32_t min = 0;
  std::uint32_t max = 0;
};

struct PlacementRules {
  Rect area;
  double min_separation_m = 2.0;
  double sensor_max_range_m = 45.0;
  double sensor_height_m = 2.5;
  std::uint32_t max_rejection_attempts = 1000;
  std::vector<CountRange> counts;  // indexed by class id; missing classes mean (0, 0)
};

struct PlacedInstance {
  std::string asset;
  std::uint32_t asset_index = 0;
  Label class_id = 0;
  double x = 0.0;  // footprint center, m
  double y = 0.0;
  double yaw = 0.0;
  Pose pose;  // model frame -> world
};

struct SceneDescription {
  std::vector<PlacedInstance> instances;
  Pose sensor_pose;
  std::uint64_t seed = 0;
};

/// Throws ConfigError if the rules cannot be honored by this library or sensor.
inline void validate_rules(const AssetLibrary& lib, const PlacementRules& rules,
                           double lidar_range_max_m) {
  const Rect& a = rules.area;
  if (!(a.min_x < a.max_x) || !(a.min_y < a.max_y)) throw ConfigError("scene.area: min must be below max");
  if (!(rules.min_separation_m >= 0.0)) throw ConfigError("scene.min_separation_m: must be >= 0");
  if (!(rules.sensor_max_range_m > 0.0)) throw ConfigError("scene.sensor_max_range_m: must be positive");
  if (rules.sensor_max_range_m > lidar_range_max_m) {
    throw ConfigError("scene.sensor_max_range_m: exceeds lidar range_max_m");
  }
  if (!std::isfinite(rules.sensor_height_m)) throw ConfigError("scene.sensor_height_m: must be finite");
  if (rules.max_rejection_attempts == 0) throw ConfigError("scene.max_rejection_attempts: must be >= 1");
  if (rules.counts.size() > lib.class_names.size()) {
    throw ConfigError("scene.counts: more entries than classes");
  }
  double needed_area = 0.0;
  for (std::size_t c = 0; c < rules.counts.size(); ++c) {
    const CountRange& cr = rules.counts[c];
    if (cr.min > cr.max) throw ConfigError("scene.counts." + lib.class_names[c] + ": min exceeds max");
    if (cr.max == 0) continue;
    const auto ids = lib.assets_of_class(static_cast<Label>(c));
    if (ids.empty()) {
      throw ConfigError("scene.counts." + lib.class_names[c] + ": no assets of this class");
    }
    double r = 0.0;
    for (std::size_t i : ids) r = std::max(r, lib.assets[i].footprint_radius_m);
    const double side = 2.0 * r + rules.min_separation_m;
    needed_area += cr.max * side * side;
  }
  if (needed_area > a.area()) {
    throw ConfigError("scene.area: too small for the maximum total footprint (" +
                      std::to_string(needed_area) + " m^2 needed)");
  }
}

/// Draws a scene by rejection sampling. Per class (in class order) the count is
/// uniform in [min, max] and each instance's asset is uniform over the class.
/// Each instance gets up to `max_rejection_attempts` position draws; a center
/// is accepted when it lies within sensor_max_range of the sensor, at least
/// (footprint + min_separation) from the sensor, and at least
/// (min_separation + both footprints) from every earlier instance.
inline SceneDescription randomize_scene(const AssetLibrary& lib, const PlacementRules& rules,
                                        std::uint64_t seed) {
  Rng rng(seed);
  SceneDescription scene;
  scene.seed = seed;
  const Rect& area = rules.area;
  const double sx = rng.uniform(area.min_x, area.max_x);
  const double sy = rng.uniform(area.min_y, area.max_y);
  const double syaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
  scene.sensor_pose = Pose::from_yaw(syaw, {sx, sy, rules.sensor_height_m});

  std::vector<std::size_t> plan;
  for (std::size_t c = 0; c < rules.counts.size(); ++c) {
    const auto n = static_cast<std::uint32_t>(rng.between(rules.counts[c].min, rules.counts[c].max));
    if (n == 0) continue;
    const auto ids = lib.assets_of_class(static_cast<Label>(c));
    if (ids.empty()) throw PlacementError("no assets for class " + lib.class_names[c]);
    for (std::uint32_t k = 0; k < n; ++k) plan.push_back(ids[rng.below(ids.size())]);
  }

  for (std::size_t asset_index : plan) {
    const Asset& asset = lib.assets[asset_index];
    const double r = asset.footprint_radius_m;
    bool placed = false;
    for (std::uint32_t attempt = 0; attempt < rules.max_rejection_attempts && !placed; ++attempt) {
      const double x = rng.uniform(area.min_x, area.max_x);
      const double y = rng.uniform(area.min_y, area.max_y);
      const double to_sensor = std::hypot(x - sx, y - sy);
      if (to_sensor > rules.sensor_max_range_m || to_sensor < r + rules.min_separation_m) continue;
      bool clear = true;
      for (const PlacedInstance& other : scene.instances) {
        const double need = rules.min_separation_m + r + lib.assets[other.asset_index].footprint_radius_m;
        if (std::hypot(x - other.x, y - other.y) < need) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      PlacedInstance inst;
      inst.asset = asset.name;
      inst.asset_index = static_cast<std::uint32_t>(asset_index);
      inst.class_id = asset.class_id;
      inst.x = x;
      inst.y = y;
      inst.yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Mat3 rot = rotation_z(inst.yaw);
      const Vec3 c = rot * Vec3{asset.centroid.x, asset.centroid.y, 0.0};
      inst.pose = {rot, {x - c.x, y - c.y, -asset.mesh.bounds.lo.z}};
      scene.instances.push_back(std::move(inst));
      placed = true;
    }
    if (!placed) {
      throw PlacementError("rejection budget of " + std::to_string(rules.max_rejection_attempts) +
                           " attempts exhausted placing '" + asset.name + "' (instance " +
                           std::to_string(scene.instances.size()) + ")");
    }
  }
  return scene;
}

/// Scene flattened for ray casting: placed assets plus a ground quad at z = 0
/// centered under the sensor and wide enough that no in-range ray misses it.
struct SceneGeometry {
  Bvh bvh;
  std::vector<Label> instance_labels;
};

inline SceneGeometry build_scene_geometry(const AssetLibrary& lib, const SceneDescription& scene,
                                          std::optional<Label> ground_class, double ground_half_extent_m) {
  std::vector<MeshInstance> instances;
  SceneGeometry geo;
  for (const PlacedInstance& inst : scene.instances) {
    instances.push_back({std::cref(lib.assets[inst.asset_index].mesh), inst.pose});
    geo.instance_labels.push_back(inst.class_id);
  }
  TriangleMesh ground;
  if (ground_class) {
    ground = make_ground_quad(scene.sensor_pose.translation.x, scene.sensor_pose.translation.y,
                              ground_half_extent_m);
    instances.push_back({std::cref(ground), Pose::identity()});
    geo.instance_labels.push_back(*ground_class);
  }
  geo.bvh = Bvh::build(instances);
  return geo;
}

}  // namespace lidarforge
