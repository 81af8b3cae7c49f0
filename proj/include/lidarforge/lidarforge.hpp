// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lidarforge/annotate/cluster.hpp"
#include "lidarforge/annotate/ground.hpp"
#include "lidarforge/annotate/icp.hpp"
#include "lidarforge/annotate/propagate.hpp"
#include "lidarforge/annotate/registration.hpp"
#include "lidarforge/core/bytes.hpp"
#include "lidarforge/core/error.hpp"
#include "lidarforge/core/parallel.hpp"
#include "lidarforge/core/pose.hpp"
#include "lidarforge/core/rng.hpp"
#include "lidarforge/core/vec3.hpp"
#include "lidarforge/dataset/generate.hpp"
#include "lidarforge/dataset/lpc.hpp"
#include "lidarforge/dataset/ply_export.hpp"
#include "lidarforge/dataset/sampling.hpp"
#include "lidarforge/geometry/bvh.hpp"
#include "lidarforge/geometry/mesh.hpp"
#include "lidarforge/geometry/mesh_io.hpp"
#include "lidarforge/geometry/point_index.hpp"
#include "lidarforge/lidar/lidar.hpp"
#include "lidarforge/lidar/point_cloud.hpp"
#include "lidarforge/metrics/metrics.hpp"
#include "lidarforge/scene/scene.hpp"
