// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

// Walks through the library without the CLI: randomize a few scenes from the
// demo config, scan them, report the class split, then downsample one cloud
// and score a deliberately sloppy "prediction" against it.
//
//   lidarforge_demo [config.json] [first_cloud.ply]

#include <cstdio>
#include <fstream>
#include <iostream>

#include "lidarforge/cli/config.hpp"
#include "lidarforge/lidarforge.hpp"

using namespace lidarforge;

int main(int argc, char** argv) {
  const std::filesystem::path config = argc > 1 ? argv[1] : LIDARFORGE_DEMO_CONFIG;
  try {
    const RunConfig cfg = load_run_config(config);
    const AssetLibrary lib = load_asset_library(cfg.scene.assets, cfg.scene.class_names);
    validate_rules(lib, cfg.scene.rules, cfg.lidar.range_max_m);
    const auto ground = class_index(lib.class_names, cfg.scene.ground_class.value_or(""));
    const ScanPattern pattern = scan_pattern(cfg.lidar);

    std::vector<LabeledPointCloud> clouds;
    for (std::size_t i = 0; i < 5; ++i) {
      const std::uint64_t seed = scene_seed(42, i);
      const SceneDescription scene = randomize_scene(lib, cfg.scene.rules, seed);
      clouds.push_back(generate_cloud(lib, cfg.scene.rules, cfg.lidar, pattern, ground, seed));
      std::printf("scene %zu: %zu assets, %zu returns\n", i, scene.instances.size(), clouds.back().size());
      for (const auto& inst : scene.instances) {
        std::printf("  %-14s at (%6.1f, %6.1f)\n", inst.asset.c_str(), inst.x, inst.y);
      }
    }
    std::cout << "\nclass split over all scenes\n" << distribution_text(class_distribution(clouds));

    // Training-sized copy of the first cloud.
    const LabeledPointCloud small = downsample(clouds.front(), cfg.downsample_points.value_or(40000), 1);
    std::printf("\ndownsampled scene 0 to %zu points\n", small.size());
    if (argc > 2) {
      std::ofstream(argv[2], std::ios::binary) << ply_text(small);
      std::printf("wrote %s\n", argv[2]);
    }

    // A classifier that calls everything 0.5 m above the ground a tractor.
    // Points are in the sensor frame, which sits sensor_height_m up.
    const double cut = 0.5 - cfg.scene.rules.sensor_height_m;
    const Label tractor = *class_index(small.class_names, "tractor");
    const Label other = *class_index(small.class_names, "other");
    std::vector<Label> guess(small.size());
    for (std::size_t i = 0; i < small.size(); ++i) guess[i] = small.points[i].z > cut ? tractor : other;
    ConfusionMatrix cm(small.class_names);
    cm.accumulate(small.labels, guess);
    const IouReport r = iou_report(cm);
    std::printf("\nheight-threshold baseline mIoU %.4f\n", r.miou);
    for (std::size_t k = 0; k < r.iou.size(); ++k) {
      if (r.iou[k]) std::printf("  %-8s %.4f\n", r.class_names[k].c_str(), *r.iou[k]);
    }
  } catch (const std::exception& e) {
    std::cerr << "demo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
