// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "lidarforge/core/error.hpp"
#include "lidarforge/dataset/generate.hpp"
#include "lidarforge/lidar/lidar.hpp"
#include "lidarforge/scene/scene.hpp"

namespace lidarforge {

struct SceneConfig {
  std::filesystem::path assets;  // resolved against the config file's directory
  std::vector<std::string> class_names{"other", "tractor", "combine"};
  std::optional<std::string> ground_class = "other";  // null in JSON disables the ground plane
  PlacementRules rules;
  bool counts_explicit = false;  // defaults are trimmed to classes that have assets
};

struct OutputConfig {
  std::filesystem::path dir;
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> seed;
  std::string name = "synthetic";
};

struct RunConfig {
  LidarSpec lidar;
  SceneConfig scene;
  OutputConfig output;
  std::optional<std::size_t> downsample_points;
  std::optional<std::size_t> mix_total;
  std::optional<double> mix_synthetic_fraction;
  std::string digest;  // FNV-1a of the canonical lidar + scene sections
};

namespace detail {

/// Typed, strict access to one JSON object: every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": must be an object");
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : j_.items()) {
      if (!allowed.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const nlohmann::json& raw(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return where_ + "." + key; }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) throw ConfigError(path(key) + ": must be a number");
    out = j_.at(key).get<double>();
  }

  template <typename T>
  void integer(const char* key, T& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + ": must be an integer");
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
        throw ConfigError(path(key) + ": out of range");
      }
      out = static_cast<T>(u);
      return;
    }
    const auto s = v.get<std::int64_t>();
    if constexpr (std::is_unsigned_v<T>) {
      if (s < 0) throw ConfigError(path(key) + ": must be non-negative");
    }
    if (s > static_cast<std::int64_t>(std::min<std::uint64_t>(std::numeric_limits<T>::max(), INT64_MAX)) ||
        (std::is_signed_v<T> && s < static_cast<std::int64_t>(std::numeric_limits<T>::min()))) {
      throw ConfigError(path(key) + ": out of range");
    }
    out = static_cast<T>(s);
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(path(key) + ": must be a string");
    out = j_.at(key).get<std::string>();
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
};

inline std::vector<double> number_list(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": must be a list of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + ": must be a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::pair<double, double> number_pair(const nlohmann::json& j, const std::string& where) {
  auto v = number_list(j, where);
  if (v.size() != 2) throw ConfigError(where + ": must be [min, max]");
  return {v[0], v[1]};
}

inline void parse_lidar(const nlohmann::json& j, LidarSpec& s) {
  ObjectReader r(j, "lidar");
  r.allow_only({"channels", "columns", "vertical_fov_deg", "beam_elevations_deg", "range_min_m", "range_max_m",
                "rotation_rate_hz", "range_noise_sigma_m", "dropout_prob"});
  r.integer("channels", s.channels);
  r.integer("columns", s.columns);
  if (r.has("vertical_fov_deg")) {
    std::tie(s.vertical_fov_min_deg, s.vertical_fov_max_deg) =
        number_pair(r.raw("vertical_fov_deg"), r.path("vertical_fov_deg"));
  }
  if (r.has("beam_elevations_deg")) {
    s.beam_elevations_deg = number_list(r.raw("beam_elevations_deg"), r.path("beam_elevations_deg"));
  }
  r.number("range_min_m", s.range_min_m);
  r.number("range_max_m", s.range_max_m);
  r.number("rotation_rate_hz", s.rotation_rate_hz);
  r.number("range_noise_sigma_m", s.range_noise_sigma_m);
  r.number("dropout_prob", s.dropout_prob);
}

inline void parse_scene(const nlohmann::json& j, const std::filesystem::path& base, SceneConfig& sc) {
  ObjectReader r(j, "scene");
  r.allow_only({"assets", "class_names", "ground_class", "area", "min_separation_m", "sensor_max_range_m",
                "sensor_height_m", "max_rejection_attempts", "counts"});
  if (!r.has("assets")) throw ConfigError("scene.assets: required");
  std::string assets;
  r.string("assets", assets);
  sc.assets = base / assets;
  if (r.has("class_names")) {
    const auto& names = r.raw("class_names");
    if (!names.is_array() || names.empty()) throw ConfigError("scene.class_names: must be a non-empty list");
    sc.class_names.clear();
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (!n.is_string()) throw ConfigError("scene.class_names: entries must be strings");
      if (!seen.insert(n.get<std::string>()).second) {
        throw ConfigError("scene.class_names: duplicate '" + n.get<std::string>() + "'");
      }
      sc.class_names.push_back(n.get<std::string>());
    }
    if (sc.class_names.size() > 0xffff) throw ConfigError("scene.class_names: too many classes");
  }
  if (r.has("ground_class")) {
    const auto& g = r.raw("ground_class");
    if (g.is_null()) {
      sc.ground_class.reset();
    } else if (g.is_string()) {
      sc.ground_class = g.get<std::string>();
    } else {
      throw ConfigError("scene.ground_class: must be a class name or null");
    }
  }
  if (sc.ground_class && !class_index(sc.class_names, *sc.ground_class)) {
    throw ConfigError("scene.ground_class: '" + *sc.ground_class + "' is not in class_names");
  }
  PlacementRules& rules = sc.rules;
  if (r.has("area")) {
    ObjectReader a(r.raw("area"), "scene.area");
    a.allow_only({"min", "max"});
    if (!a.has("min") || !a.has("max")) throw ConfigError("scene.area: requires min and max");
    std::tie(rules.area.min_x, rules.area.min_y) = number_pair(a.raw("min"), "scene.area.min");
    std::tie(rules.area.max_x, rules.area.max_y) = number_pair(a.raw("max"), "scene.area.max");
  }
  r.number("min_separation_m", rules.min_separation_m);
  r.number("sensor_max_range_m", rules.sensor_max_range_m);
  r.number("sensor_height_m", rules.sensor_height_m);
  r.integer("max_rejection_attempts", rules.max_rejection_attempts);

  // Default: every class except the ground class gets 0..3 instances.
  rules.counts.assign(sc.class_names.size(), CountRange{0, 3});
  if (sc.ground_class) rules.counts[*class_index(sc.class_names, *sc.ground_class)] = {0, 0};
  if (r.has("counts")) {
    const auto& counts = r.raw("counts");
    if (!counts.is_object()) throw ConfigError("scene.counts: must map class names to [min, max]");
    rules.counts.assign(sc.class_names.size(), CountRange{0, 0});
    sc.counts_explicit = true;
    for (const auto& [name, range] : counts.items()) {
      const auto id = class_index(sc.class_names, name);
      if (!id) throw ConfigError("scene.counts: unknown class '" + name + "'");
      const std::string where = "scene.counts." + name;
      if (!range.is_array() || range.size() != 2 || !range[0].is_number_unsigned() ||
          !range[1].is_number_unsigned() || range[0].get<std::uint64_t>() > 0xffffffffULL ||
          range[1].get<std::uint64_t>() > 0xffffffffULL) {
        throw ConfigError(where + ": must be [min, max] non-negative integers");
      }
      rules.counts[*id] = {range[0].get<std::uint32_t>(), range[1].get<std::uint32_t>()};
      if (rules.counts[*id].min > rules.counts[*id].max) throw ConfigError(where + ": min exceeds max");
    }
  }
}

/// Canonical form of the fields that determine generated geometry and labels.
inline nlohmann::ordered_json canonical_json(const LidarSpec& l, const SceneConfig& s) {
  nlohmann::ordered_json lidar;
  lidar["channels"] = l.channels;
  lidar["columns"] = l.columns;
  lidar["vertical_fov_deg"] = {l.vertical_fov_min_deg, l.vertical_fov_max_deg};
  lidar["beam_elevations_deg"] = beam_elevations_deg(l);
  lidar["range_min_m"] = l.range_min_m;
  lidar["range_max_m"] = l.range_max_m;
  lidar["rotation_rate_hz"] = l.rotation_rate_hz;
  lidar["range_noise_sigma_m"] = l.range_noise_sigma_m;
  lidar["dropout_prob"] = l.dropout_prob;

  nlohmann::ordered_json scene;
  scene["assets"] = s.assets.filename().string();
  scene["class_names"] = s.class_names;
  scene["ground_class"] = s.ground_class ? nlohmann::ordered_json(*s.ground_class) : nlohmann::ordered_json(nullptr);
  scene["area"] = {{"min", {s.rules.area.min_x, s.rules.area.min_y}},
                   {"max", {s.rules.area.max_x, s.rules.area.max_y}}};
  scene["min_separation_m"] = s.rules.min_separation_m;
  scene["sensor_max_range_m"] = s.rules.sensor_max_range_m;
  scene["sensor_height_m"] = s.rules.sensor_height_m;
  scene["max_rejection_attempts"] = s.rules.max_rejection_attempts;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < s.rules.counts.size(); ++c) {
    counts[s.class_names[c]] = {s.rules.counts[c].min, s.rules.counts[c].max};
  }
  scene["counts"] = std::move(counts);
  return {{"lidar", std::move(lidar)}, {"scene", std::move(scene)}};
}

}  // namespace detail

/// Parses and validates a run config. Relative paths resolve against `base`.
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base) {
  RunConfig cfg;
  detail::ObjectReader root(j, "config");
  root.allow_only({"lidar", "scene", "output", "noise", "downsample", "mix"});
  if (root.has("lidar")) detail::parse_lidar(root.raw("lidar"), cfg.lidar);
  if (root.has("noise")) {
    detail::ObjectReader n(root.raw("noise"), "noise");
    n.allow_only({"range_sigma_m", "dropout_prob"});
    n.number("range_sigma_m", cfg.lidar.range_noise_sigma_m);
    n.number("dropout_prob", cfg.lidar.dropout_prob);
  }
  if (!root.has("scene")) throw ConfigError("scene: required");
  detail::parse_scene(root.raw("scene"), base, cfg.scene);
  if (root.has("output")) {
    detail::ObjectReader o(root.raw("output"), "output");
    o.allow_only({"dir", "count", "seed", "name"});
    std::string dir;
    o.string("dir", dir);
    if (!dir.empty()) cfg.output.dir = base / dir;
    if (o.has("count")) o.integer("count", cfg.output.count.emplace());
    if (o.has("seed")) o.integer("seed", cfg.output.seed.emplace());
    o.string("name", cfg.output.name);
  }
  if (root.has("downsample")) {
    detail::ObjectReader d(root.raw("downsample"), "downsample");
    d.allow_only({"points"});
    if (d.has("points")) d.integer("points", cfg.downsample_points.emplace());
  }
  if (root.has("mix")) {
    detail::ObjectReader m(root.raw("mix"), "mix");
    m.allow_only({"total", "synthetic_fraction"});
    if (m.has("total")) m.integer("total", cfg.mix_total.emplace());
    if (m.has("synthetic_fraction")) m.number("synthetic_fraction", cfg.mix_synthetic_fraction.emplace());
    if (cfg.mix_synthetic_fraction && !(*cfg.mix_synthetic_fraction >= 0.0 && *cfg.mix_synthetic_fraction <= 1.0)) {
      throw ConfigError("mix.synthetic_fraction: must be within [0, 1]");
    }
  }
  validate(cfg.lidar);
  cfg.digest = hex64(fnv1a64(detail::canonical_json(cfg.lidar, cfg.scene).dump()));
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

}  // namespace lidarforge
