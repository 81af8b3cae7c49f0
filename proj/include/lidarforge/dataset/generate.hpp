// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lidarforge/core/bytes.hpp"
#include "lidarforge/core/error.hpp"
#include "lidarforge/core/parallel.hpp"
#include "lidarforge/core/rng.hpp"
#include "lidarforge/dataset/lpc.hpp"
#include "lidarforge/lidar/lidar.hpp"
#include "lidarforge/scene/scene.hpp"

namespace lidarforge {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::vector<std::uint64_t> class_histogram(const LabeledPointCloud& cloud) {
  std::vector<std::uint64_t> h(cloud.class_names.size(), 0);
  for (Label l : cloud.labels) ++h.at(l);
  return h;
}

/// 100 * count / total per class; all zero when total is zero.
inline std::vector<double> histogram_percentages(const std::vector<std::uint64_t>& histogram) {
  std::uint64_t total = 0;
  for (auto c : histogram) total += c;
  std::vector<double> out(histogram.size(), 0.0);
  if (total == 0) return out;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    out[i] = 100.0 * static_cast<double>(histogram[i]) / static_cast<double>(total);
  }
  return out;
}

struct ManifestEntry {
  std::string path;  // relative to the manifest
  std::uint64_t points = 0;
  std::vector<std::uint64_t> histogram;
  std::uint64_t scene_seed = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::string name;
  std::uint64_t master_seed = 0;
  std::string config_digest;
  std::vector<std::string> class_names;
  std::vector<ManifestEntry> files;
  std::vector<std::uint64_t> histogram;
  std::vector<double> percentages;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

inline nlohmann::ordered_json manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["master_seed"] = m.master_seed;
  j["config_digest"] = m.config_digest;
  j["class_names"] = m.class_names;
  j["count"] = m.files.size();
  j["histogram"] = m.histogram;
  j["percentages"] = m.percentages;
  auto files = nlohmann::ordered_json::array();
  for (const auto& e : m.files) {
    nlohmann::ordered_json f;
    f["path"] = e.path;
    f["points"] = e.points;
    f["histogram"] = e.histogram;
    f["scene_seed"] = e.scene_seed;
    files.push_back(std::move(f));
  }
  j["files"] = std::move(files);
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.histogram = j.at("histogram").get<std::vector<std::uint64_t>>();
    m.percentages = j.at("percentages").get<std::vector<double>>();
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("path").get<std::string>(), f.at("points").get<std::uint64_t>(),
                         f.at("histogram").get<std::vector<std::uint64_t>>(),
                         f.at("scene_seed").get<std::uint64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  write_file_text(path, manifest_to_json(m).dump(2) + "\n");
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline std::string dataset_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.lpc", index);
  return buf;
}

inline constexpr const char* kManifestFileName = "manifest.json";

struct GenerateOptions {
  std::string name = "synthetic";
  std::uint64_t master_seed = 0;
  std::size_t count = 0;
  std::filesystem::path out_dir;
  unsigned workers = 1;
  std::string config_digest;
  std::optional<Label> ground_class;  // nullopt: no ground plane
};

/// Scene seed of dataset item `index`.
constexpr std::uint64_t scene_seed(std::uint64_t master_seed, std::size_t index) {
  return derive_seed(master_seed, index);
}

/// Generates and scans one scene.
inline LabeledPointCloud generate_cloud(const AssetLibrary& lib, const PlacementRules& rules,
                                        const LidarSpec& spec, const ScanPattern& pattern,
                                        std::optional<Label> ground_class, std::uint64_t seed) {
  const SceneDescription scene = randomize_scene(lib, rules, seed);
  const SceneGeometry geo = build_scene_geometry(lib, scene, ground_class, spec.range_max_m + 1.0);
  return simulate_scan(geo.bvh, geo.instance_labels, scene.sensor_pose, pattern, spec, seed,
                       lib.class_names);
}

/// Writes `{index:06}.lpc` for every index plus manifest.json to out_dir.
/// Output bytes depend only on the inputs, never on `workers`.
inline DatasetManifest generate_dataset(const AssetLibrary& lib, const PlacementRules& rules,
                                        const LidarSpec& spec, const GenerateOptions& opt) {
  validate(spec);
  validate_rules(lib, rules, spec.range_max_m);
  std::filesystem::create_directories(opt.out_dir);
  const ScanPattern pattern = scan_pattern(spec);

  DatasetManifest manifest;
  manifest.name = opt.name;
  manifest.master_seed = opt.master_seed;
  manifest.config_digest = opt.config_digest;
  manifest.class_names = lib.class_names;
  manifest.files.resize(opt.count);

  parallel_for(opt.count, opt.workers, [&](std::size_t i) {
    const std::uint64_t seed = scene_seed(opt.master_seed, i);
    LabeledPointCloud cloud;
    try {
      cloud = generate_cloud(lib, rules, spec, pattern, opt.ground_class, seed);
    } catch (const PlacementError& e) {
      throw PlacementError("scene " + std::to_string(i) + ": " + e.what());
    }
    const std::string file = dataset_file_name(i);
    write_lpc(cloud, opt.out_dir / file);
    manifest.files[i] = {file, cloud.size(), class_histogram(cloud), seed};
  });

  manifest.histogram.assign(lib.class_names.size(), 0);
  for (const auto& e : manifest.files) {
    for (std::size_t c = 0; c < e.histogram.size(); ++c) manifest.histogram[c] += e.histogram[c];
  }
  manifest.percentages = histogram_percentages(manifest.histogram);
  write_manifest(manifest, opt.out_dir / kManifestFileName);
  return manifest;
}

}  // namespace lidarforge
