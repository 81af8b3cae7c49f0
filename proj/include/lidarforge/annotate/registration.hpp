// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "lidarforge/annotate/icp.hpp"
#include "lidarforge/core/bytes.hpp"
#include "lidarforge/core/error.hpp"
#include "lidarforge/lidar/point_cloud.hpp"

namespace lidarforge {

/// Per-frame poses mapping frame i into frame 0; poses[0] is the identity.
using Trajectory = std::vector<Pose>;

struct SequenceRegistration {
  Trajectory poses;
  std::vector<IcpResult> steps;  // steps[i - 1] aligned frame i onto the map of frames 0..i-1
  LabeledPointCloud map;         // all frames in frame 0, one point per map voxel
};

/// ICP voxels trade detail for speed; the output map feeds clustering and label
/// propagation, so it keeps finer cells than the propagation radius needs.
inline constexpr double kDefaultMapVoxel = 0.2;

/// Registers each frame against the map accumulated so far, in frame-0
/// coordinates, starting from a constant-velocity guess. Registering against
/// the map rather than only the previous frame keeps per-pair sampling bias
/// from compounding along the sequence. Ground is removed once per frame, in
/// its own sensor frame, when `exclude_ground` is set. Any failure raises
/// RegistrationError naming the frame.
inline SequenceRegistration register_sequence(std::span<const LabeledPointCloud> frames,
                                              const IcpParams& params, double map_voxel_m = kDefaultMapVoxel) {
  if (!(map_voxel_m > 0.0)) throw Error("register_sequence: map voxel must be positive");
  if (frames.size() < 2) throw Error("register_sequence: need at least 2 frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].empty()) throw RegistrationError(i, "empty frame");
  }
  auto reduced = [&](std::size_t i) {
    try {
      const auto& pts = frames[i].points;
      return voxel_downsample(params.exclude_ground ? detail::without_ground(pts, params.ground)
                                                    : std::vector<Vec3>(pts.begin(), pts.end()),
                              params.voxel_m);
    } catch (const Error& e) {
      throw RegistrationError(i, e.what());
    }
  };

  // First point per voxel, in insertion order, like voxel_downsample over the
  // concatenation of all registered frames.
  std::vector<Vec3> map;
  std::unordered_set<CellKey, CellKeyHash> occupied;
  auto grow = [&](const std::vector<Vec3>& pts, const Pose& pose) {
    for (const Vec3& p : pts) {
      const Vec3 q = pose.apply(p);
      if (occupied.insert(cell_of(q, params.voxel_m)).second) map.push_back(q);
    }
  };

  SequenceRegistration out;
  out.poses.push_back(Pose::identity());
  grow(reduced(0), Pose::identity());
  Pose velocity = Pose::identity();
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const std::vector<Vec3> src = reduced(i);
    const Pose guess = out.poses.back() * velocity;
    IcpResult r;
    try {
      r = icp_refine(src, PointIndex(map, params.max_correspondence_m), guess, params);
    } catch (const Error& e) {
      throw RegistrationError(i, e.what());
    }
    velocity = out.poses.back().inverse() * r.pose;
    out.poses.push_back(r.pose);
    out.steps.push_back(r);
    grow(src, r.pose);
  }

  std::vector<LabeledPointCloud> moved;
  moved.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    LabeledPointCloud f = transform_cloud(frames[i], out.poses[i]);
    f.rings.clear();
    f.columns.clear();
    f.class_names = frames[0].class_names;
    moved.push_back(std::move(f));
  }
  const LabeledPointCloud all = concatenate(moved);
  out.map = select_points(all, voxel_representatives(all.points, map_voxel_m));
  return out;
}

/// Text lines `frame tx ty tz qx qy qz qw` (Hamilton unit quaternion).
inline std::string trajectory_text(const Trajectory& poses) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Quaternion q = to_quaternion(poses[i].rotation);
    const double values[7] = {poses[i].translation.x, poses[i].translation.y, poses[i].translation.z,
                              q.x, q.y, q.z, q.w};
    out += std::to_string(i);
    for (double v : values) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out += ' ';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

inline void write_trajectory(const Trajectory& poses, const std::filesystem::path& path) {
  write_file_text(path, trajectory_text(poses));
}

inline Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trajectory " + path.string());
  Trajectory poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::size_t frame;
    double tx, ty, tz;
    Quaternion q;
    if (!(ss >> frame >> tx >> ty >> tz >> q.x >> q.y >> q.z >> q.w)) {
      throw ParseError(path.string(), ParseError::Unit::kLine, line_no, "expected 'frame tx ty tz qx qy qz qw'");
    }
    if (frame != poses.size()) {
      throw ParseError(path.string(), ParseError::Unit::kLine, line_no, "frames must be consecutive from 0");
    }
    poses.push_back({from_quaternion(q), {tx, ty, tz}});
  }
  return poses;
}

}  // namespace lidarforge
