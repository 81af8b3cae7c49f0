// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "lidarforge/core/bytes.hpp"
#include "lidarforge/core/error.hpp"
#include "lidarforge/lidar/point_cloud.hpp"

namespace lidarforge {

using Rgb = std::array<std::uint8_t, 3>;

/// Class name -> color.
using Colormap = std::map<std::string, Rgb>;

/// other red, tractor green, combine blue, trailer pink.
inline Colormap default_colormap() {
  return {
      {"other", {255, 0, 0}},
      {"tractor", {0, 255, 0}},
      {"combine", {0, 0, 255}},
      {"combine_harvester", {0, 0, 255}},
      {"trailer", {255, 105, 180}},
  };
}

/// ASCII PLY with `x y z red green blue` per vertex. Colors follow `predictions`
/// when given, otherwise the cloud's labels.
inline std::string ply_text(const LabeledPointCloud& cloud,
                            std::optional<std::span<const Label>> predictions = std::nullopt,
                            const Colormap& colormap = default_colormap()) {
  if (predictions && predictions->size() != cloud.size()) {
    throw Error("export_ply: " + std::to_string(predictions->size()) + " predictions for " +
                std::to_string(cloud.size()) + " points");
  }
  std::vector<Rgb> palette;
  for (const auto& name : cloud.class_names) {
    auto it = colormap.find(name);
    palette.push_back(it == colormap.end() ? Rgb{0, 0, 0} : it->second);
  }
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n"
                    "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  char buf[32];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Label label = predictions ? (*predictions)[i] : cloud.labels[i];
    if (label >= cloud.class_names.size() || !colormap.contains(cloud.class_names[label])) {
      throw Error("export_ply: no color for label " + std::to_string(label) + " at point " +
                  std::to_string(i));
    }
    const Vec3& p = cloud.points[i];
    for (int k = 0; k < 3; ++k) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(p[k]));
      out.append(buf, res.ptr);
      out += ' ';
    }
    const Rgb& c = palette[label];
    out += std::to_string(c[0]) + ' ' + std::to_string(c[1]) + ' ' + std::to_string(c[2]) + '\n';
  }
  return out;
}

inline void export_ply(const LabeledPointCloud& cloud, std::optional<std::span<const Label>> predictions,
                       const Colormap& colormap, const std::filesystem::path& path) {
  write_file_text(path, ply_text(cloud, predictions, colormap));
}

}  // namespace lidarforge
