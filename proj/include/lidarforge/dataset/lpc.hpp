// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

// LPC1 labeled point cloud format, all integers little-endian:
//
//   "LPC1"                       4 bytes
//   flags                        u16   bit 0: ring/column arrays present
//   class count                  u16
//   point count                  u64
//   class table                  per class: u16 byte length, UTF-8 name
//   points                       per point: x, y, z f32, label u16,
//                                [ring u16, column u16 if bit 0]

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lidarforge/core/bytes.hpp"
#include "lidarforge/core/error.hpp"
#include "lidarforge/lidar/point_cloud.hpp"

namespace lidarforge {

inline constexpr char kLpcMagic[4] = {'L', 'P', 'C', '1'};
inline constexpr std::uint16_t kLpcFlagRingColumns = 0x1;

inline std::vector<unsigned char> encode_lpc(const LabeledPointCloud& cloud) {
  validate(cloud);
  const bool rc = cloud.has_ring_columns();
  std::vector<unsigned char> out;
  std::size_t names_bytes = 0;
  for (const auto& name : cloud.class_names) names_bytes += 2 + name.size();
  out.reserve(16 + names_bytes + cloud.size() * (rc ? 18 : 14));
  out.insert(out.end(), kLpcMagic, kLpcMagic + 4);
  put_le(out, static_cast<std::uint16_t>(rc ? kLpcFlagRingColumns : 0));
  put_le(out, static_cast<std::uint16_t>(cloud.class_names.size()));
  put_le(out, static_cast<std::uint64_t>(cloud.size()));
  for (const auto& name : cloud.class_names) {
    if (name.size() > 0xffff) throw Error("class name longer than 65535 bytes");
    put_le(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    put_le(out, static_cast<float>(cloud.points[i].x));
    put_le(out, static_cast<float>(cloud.points[i].y));
    put_le(out, static_cast<float>(cloud.points[i].z));
    put_le(out, cloud.labels[i]);
    if (rc) {
      put_le(out, cloud.rings[i]);
      put_le(out, cloud.columns[i]);
    }
  }
  return out;
}

inline LabeledPointCloud decode_lpc(std::span<const unsigned char> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  if (r.read_string(4, "magic") != std::string(kLpcMagic, 4)) r.fail_at(0, "bad magic (expected LPC1)");
  const auto flags = r.read<std::uint16_t>("flags");
  if ((flags & ~kLpcFlagRingColumns) != 0) r.fail_at(4, "unknown flag bits");
  const bool rc = (flags & kLpcFlagRingColumns) != 0;
  const auto class_count = r.read<std::uint16_t>("class count");
  const auto point_count = r.read<std::uint64_t>("point count");

  LabeledPointCloud cloud;
  cloud.class_names.reserve(class_count);
  for (std::uint16_t c = 0; c < class_count; ++c) {
    const auto len = r.read<std::uint16_t>("class name length");
    cloud.class_names.push_back(r.read_string(len, "class name"));
  }
  const std::size_t record = rc ? 18 : 14;
  if (point_count > r.remaining() / record) {
    r.fail("truncated: header declares " + std::to_string(point_count) + " points but only " +
           std::to_string(r.remaining()) + " bytes follow");
  }
  if (point_count * record != r.remaining()) {
    r.fail_at(r.offset() + point_count * record,
              "trailing bytes after " + std::to_string(point_count) + " points");
  }
  cloud.reserve(point_count, rc);
  for (std::uint64_t i = 0; i < point_count; ++i) {
    const std::size_t at = r.offset();
    const float x = r.read<float>("x");
    const float y = r.read<float>("y");
    const float z = r.read<float>("z");
    const auto label = r.read<Label>("label");
    if (label >= class_count) {
      r.fail_at(at + 12, "label " + std::to_string(label) + " of point " + std::to_string(i) +
                             " exceeds class count " + std::to_string(class_count));
    }
    cloud.points.push_back({x, y, z});
    cloud.labels.push_back(label);
    if (rc) {
      cloud.rings.push_back(r.read<std::uint16_t>("ring"));
      cloud.columns.push_back(r.read<std::uint16_t>("column"));
    }
  }
  return cloud;
}

inline void write_lpc(const LabeledPointCloud& cloud, const std::filesystem::path& path) {
  write_file_bytes(path, encode_lpc(cloud));
}

inline LabeledPointCloud read_lpc(const std::filesystem::path& path) {
  return decode_lpc(read_file_bytes(path), path.string());
}

}  // namespace lidarforge
