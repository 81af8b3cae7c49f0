// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidarforge/core/error.hpp"
#include "lidarforge/core/parallel.hpp"
#include "lidarforge/core/pose.hpp"
#include "lidarforge/core/rng.hpp"
#include "lidarforge/geometry/bvh.hpp"
#include "lidarforge/lidar/point_cloud.hpp"

namespace lidarforge {

/// Geometry of a spinning multi-channel LiDAR. Defaults model an Ouster
/// OS0-128: 128 channels over +/-45 degrees, 1024 columns, 0.3-50 m, 10 Hz.
struct LidarSpec {
  int channels = 128;
  int columns = 1024;
  double vertical_fov_min_deg = -45.0;
  double vertical_fov_max_deg = 45.0;
  std::vector<double> beam_elevations_deg;  // optional, strictly increasing, one per channel
  double range_min_m = 0.3;
  double range_max_m = 50.0;
  double rotation_rate_hz = 10.0;
  double range_noise_sigma_m = 0.0;
  double dropout_prob = 0.0;

  friend bool operator==(const LidarSpec&, const LidarSpec&) = default;
};

/// One message per violated field; empty when the spec is valid.
inline std::vector<std::string> lidar_spec_errors(const LidarSpec& s) {
  std::vector<std::string> errors;
  if (s.channels < 1 || s.channels > 65535) errors.push_back("channels: must be in [1, 65535]");
  if (s.columns < 1 || s.columns > 65535) errors.push_back("columns: must be in [1, 65535]");
  if (!std::isfinite(s.vertical_fov_min_deg) || !std::isfinite(s.vertical_fov_max_deg) ||
      s.vertical_fov_min_deg < -90.0 || s.vertical_fov_max_deg > 90.0) {
    errors.push_back("vertical_fov_deg: bounds must be finite and within [-90, 90]");
  } else if (s.channels == 1 ? s.vertical_fov_min_deg > s.vertical_fov_max_deg
                             : s.vertical_fov_min_deg >= s.vertical_fov_max_deg) {
    errors.push_back("vertical_fov_deg: min must be below max");
  }
  if (!s.beam_elevations_deg.empty()) {
    if (static_cast<int>(s.beam_elevations_deg.size()) != s.channels) {
      errors.push_back("beam_elevations_deg: length must equal channels");
    }
    for (std::size_t i = 0; i < s.beam_elevations_deg.size(); ++i) {
      const double e = s.beam_elevations_deg[i];
      if (!std::isfinite(e) || e < -90.0 || e > 90.0) {
        errors.push_back("beam_elevations_deg: entry " + std::to_string(i) + " out of [-90, 90]");
        break;
      }
      if (i > 0 && !(e > s.beam_elevations_deg[i - 1])) {
        errors.push_back("beam_elevations_deg: must be strictly increasing");
        break;
      }
    }
  }
  if (!(s.range_min_m >= 0.0) || !std::isfinite(s.range_min_m)) {
    errors.push_back("range_min_m: must be finite and >= 0");
  }
  if (!(s.range_max_m > s.range_min_m) || !std::isfinite(s.range_max_m)) {
    errors.push_back("range_max_m: must be finite and greater than range_min_m");
  }
  if (!(s.rotation_rate_hz > 0.0) || !std::isfinite(s.rotation_rate_hz)) {
    errors.push_back("rotation_rate_hz: must be positive");
  }
  if (!(s.range_noise_sigma_m >= 0.0) || !std::isfinite(s.range_noise_sigma_m)) {
    errors.push_back("range_noise_sigma_m: must be finite and >= 0");
  }
  if (!(s.dropout_prob >= 0.0 && s.dropout_prob <= 1.0)) {
    errors.push_back("dropout_prob: must be in [0, 1]");
  }
  return errors;
}

inline void validate(const LidarSpec& spec) {
  const auto errors = lidar_spec_errors(spec);
  if (errors.empty()) return;
  std::string msg = "invalid lidar spec";
  for (const auto& e : errors) msg += "; " + e;
  throw ConfigError(msg);
}

/// Per-channel elevation in degrees: the explicit table if given, else uniform
/// inclusive spacing over the FOV (a single channel sits at the FOV midpoint).
inline std::vector<double> beam_elevations_deg(const LidarSpec& spec) {
  if (!spec.beam_elevations_deg.empty()) return spec.beam_elevations_deg;
  std::vector<double> out(static_cast<std::size_t>(spec.channels));
  if (spec.channels == 1) {
    out[0] = 0.5 * (spec.vertical_fov_min_deg + spec.vertical_fov_max_deg);
    return out;
  }
  const double step = (spec.vertical_fov_max_deg - spec.vertical_fov_min_deg) / (spec.channels - 1);
  for (int r = 0; r < spec.channels; ++r) out[r] = spec.vertical_fov_min_deg + step * r;
  out.back() = spec.vertical_fov_max_deg;
  return out;
}

/// Ray table of one revolution in the sensor frame. Ray i has ring i / columns
/// and column i % columns.
struct ScanPattern {
  std::uint32_t channels = 0;
  std::uint32_t columns = 0;
  std::vector<Vec3> directions;

  std::size_t size() const { return directions.size(); }
  std::uint16_t ring(std::size_t ray) const { return static_cast<std::uint16_t>(ray / columns); }
  std::uint16_t column(std::size_t ray) const { return static_cast<std::uint16_t>(ray % columns); }
};

inline double column_azimuth(std::uint32_t column, std::uint32_t columns) {
  return 2.0 * std::numbers::pi * static_cast<double>(column) / static_cast<double>(columns);
}

inline ScanPattern scan_pattern(const LidarSpec& spec) {
  validate(spec);
  ScanPattern pattern;
  pattern.channels = static_cast<std::uint32_t>(spec.channels);
  pattern.columns = static_cast<std::uint32_t>(spec.columns);
  const auto elevations = beam_elevations_deg(spec);
  pattern.directions.reserve(static_cast<std::size_t>(spec.channels) * spec.columns);
  for (std::uint32_t r = 0; r < pattern.channels; ++r) {
    const double el = elevations[r] * std::numbers::pi / 180.0;
    const double ce = std::cos(el);
    const double se = std::sin(el);
    for (std::uint32_t c = 0; c < pattern.columns; ++c) {
      const double az = column_azimuth(c, pattern.columns);
      pattern.directions.push_back({ce * std::cos(az), ce * std::sin(az), se});
    }
  }
  return pattern;
}

/// Casts every ray of `pattern` from `sensor_pose` into the scene. A ray returns
/// its nearest hit in [range_min, range_max], expressed in the sensor frame and
/// labeled with the hit instance's class. Optional range noise and dropout use
/// a stream keyed by (seed, ring, column), so output never depends on `workers`.
inline LabeledPointCloud simulate_scan(const Bvh& bvh, std::span<const Label> instance_labels,
                                       const Pose& sensor_pose, const ScanPattern& pattern,
                                       const LidarSpec& spec, std::uint64_t seed,
                                       std::vector<std::string> class_names, unsigned workers = 1) {
  if (instance_labels.size() != bvh.instance_count()) {
    throw Error("simulate_scan: " + std::to_string(instance_labels.size()) +
                " instance labels for " + std::to_string(bvh.instance_count()) + " instances");
  }
  for (Label l : instance_labels) {
    if (l >= class_names.size()) throw Error("simulate_scan: instance label exceeds class table");
  }

  struct Return {
    double range;
    Label label;
    bool valid;
  };
  std::vector<Return> returns(pattern.size());
  const bool noisy = spec.range_noise_sigma_m > 0.0;
  const bool dropout = spec.dropout_prob > 0.0;
  constexpr std::size_t kGrain = 256;

  parallel_for(
      pattern.size(), workers,
      [&](std::size_t i) {
        Return& out = returns[i];
        out.valid = false;
        const Ray ray{sensor_pose.translation, sensor_pose.rotate(pattern.directions[i]),
                      spec.range_min_m, spec.range_max_m};
        const auto hit = bvh.intersect(ray);
        if (!hit) return;
        double range = hit->t;
        if (noisy || dropout) {
          const KeyedStream stream(seed, pattern.ring(i), pattern.column(i));
          if (dropout && stream.uniform(0) < spec.dropout_prob) return;
          if (noisy) {
            range += spec.range_noise_sigma_m * stream.normal(1);
            if (range < spec.range_min_m || range > spec.range_max_m) return;
          }
        }
        out = {range, instance_labels[hit->instance_id], true};
      },
      kGrain);

  LabeledPointCloud cloud;
  cloud.class_names = std::move(class_names);
  std::size_t n = 0;
  for (const Return& r : returns) n += r.valid ? 1 : 0;
  cloud.reserve(n, true);
  for (std::size_t i = 0; i < returns.size(); ++i) {
    if (!returns[i].valid) continue;
    cloud.points.push_back(pattern.directions[i] * returns[i].range);
    cloud.labels.push_back(returns[i].label);
    cloud.rings.push_back(pattern.ring(i));
    cloud.columns.push_back(pattern.column(i));
  }
  return cloud;
}

}  // namespace lidarforge
