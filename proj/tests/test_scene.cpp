// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <numbers>

#include "test_support.hpp"

namespace lidarforge {
namespace {

using testing::box_library;
using testing::scene_violations;
using testing::TempDir;

const std::vector<std::string> kClasses{"other", "tractor", "combine"};

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

PlacementRules rules_with(std::vector<CountRange> counts) {
  PlacementRules r;
  r.counts = std::move(counts);
  return r;
}

TEST(AssetLibrary, SingleAssetFootprint) {
  TempDir dir;
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {4, 0, 1}, {0, 2, 3}, {1, 1, 5}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.update_bounds();
  save_mesh(m, dir / "a.obj");
  write_text(dir / "assets.json", R"([{"name": "a", "class": "tractor", "mesh": "a.obj"}])");
  const AssetLibrary lib = load_asset_library(dir / "assets.json", kClasses);
  ASSERT_EQ(lib.assets.size(), 1u);
  EXPECT_EQ(lib.assets[0].class_id, 1);
  // Vertex mean (1.25, 0.75); the farthest vertex horizontally is (4, 0).
  EXPECT_DOUBLE_EQ(lib.assets[0].footprint_radius_m, std::hypot(4 - 1.25, 0 - 0.75));
}

TEST(AssetLibrary, ScaleApplies) {
  TempDir dir;
  save_mesh(make_box({-1, -1, 0}, {1, 1, 1}), dir / "b.ply");
  write_text(dir / "assets.json", R"([{"name": "b", "class": "other", "mesh": "b.ply", "scale": 3}])");
  const AssetLibrary lib = load_asset_library(dir / "assets.json", kClasses);
  EXPECT_DOUBLE_EQ(lib.assets[0].mesh.bounds.hi.z, 3.0);
  EXPECT_DOUBLE_EQ(lib.assets[0].footprint_radius_m, 3.0 * std::sqrt(2.0));
}

TEST(AssetLibrary, ErrorsNameTheProblem) {
  TempDir dir;
  save_mesh(make_box({0, 0, 0}, {1, 1, 1}), dir / "b.stl");
  auto message = [&](const std::string& manifest) -> std::string {
    write_text(dir / "m.json", manifest);
    try {
      load_asset_library(dir / "m.json", kClasses);
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message(R"([{"name": "x", "class": "tractor", "mesh": "nope.obj"}])").find("nope.obj"),
            std::string::npos);
  EXPECT_NE(message(R"([{"name": "x", "class": "trailer", "mesh": "b.stl"}])").find("unknown class 'trailer'"),
            std::string::npos);
  EXPECT_NE(message(R"([{"name": "x", "class": "tractor", "mesh": "b.stl"},
                        {"name": "x", "class": "combine", "mesh": "b.stl"}])")
                .find("duplicate asset name 'x'"),
            std::string::npos);
  EXPECT_NE(message(R"([{"name": "x", "class": "tractor", "mesh": "b.stl", "color": 1}])").find("unknown key"),
            std::string::npos);
  EXPECT_NE(message(R"({"name": "x"})").find("list"), std::string::npos);
  EXPECT_NE(message("[").find("m.json"), std::string::npos);
}

TEST(AssetLibrary, TwelveAssetLibrary) {
  TempDir dir;
  std::string manifest = "[";
  auto add = [&](const std::string& name, const std::string& cls, const TriangleMesh& mesh) {
    save_mesh(mesh, dir / (name + ".ply"));
    if (manifest.size() > 1) manifest += ",";
    manifest += R"({"name": ")" + name + R"(", "class": ")" + cls + R"(", "mesh": ")" + name + R"(.ply"})";
  };
  for (int i = 0; i < 7; ++i) add("tractor" + std::to_string(i), "tractor", make_box({0, 0, 0}, {3.0 + i * 0.2, 2, 2.5}));
  for (int i = 0; i < 3; ++i) add("combine" + std::to_string(i), "combine", make_box({0, 0, 0}, {8.0 + i, 3, 4}));
  for (int i = 0; i < 2; ++i) add("misc" + std::to_string(i), "other", make_box({0, 0, 0}, {1, 1, 1}));
  manifest += "]";
  write_text(dir / "assets.json", manifest);
  const AssetLibrary lib = load_asset_library(dir / "assets.json", kClasses);
  EXPECT_GE(lib.assets.size(), 10u);
  EXPECT_EQ(lib.assets_of_class(1).size(), 7u);
  EXPECT_EQ(lib.assets_of_class(2).size(), 3u);
  EXPECT_EQ(lib.assets_of_class(0).size(), 2u);
}

TEST(RandomizeScene, ZeroCountsGiveSensorOnly) {
  const AssetLibrary lib = box_library();
  const SceneDescription s = randomize_scene(lib, rules_with({{0, 0}, {0, 0}, {0, 0}}), 5);
  EXPECT_TRUE(s.instances.empty());
  EXPECT_TRUE(scene_violations(lib, rules_with({{0, 0}, {0, 0}, {0, 0}}), s).empty());
  EXPECT_EQ(s.sensor_pose.translation.z, 2.5);
}

TEST(RandomizeScene, SingleTractorInHugeArea) {
  const AssetLibrary lib = box_library();
  PlacementRules r = rules_with({{0, 0}, {1, 1}, {0, 0}});
  r.area = {-1e4, -1e4, 1e4, 1e4};
  r.sensor_max_range_m = 3e4;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneDescription s = randomize_scene(lib, r, seed);
    ASSERT_EQ(s.instances.size(), 1u);
    EXPECT_EQ(s.instances[0].class_id, 1);
    EXPECT_TRUE(scene_violations(lib, r, s).empty());
  }
}

TEST(RandomizeScene, ValidatorAcceptsEveryScene) {
  const AssetLibrary lib = box_library();
  PlacementRules r = rules_with({{0, 2}, {1, 3}, {1, 2}});
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const SceneDescription s = randomize_scene(lib, r, seed);
    const auto v = scene_violations(lib, r, s);
    ASSERT_TRUE(v.empty()) << "seed " << seed << ": " << v.front();
    for (const auto& inst : s.instances) {
      EXPECT_GE(inst.yaw, 0.0);
      EXPECT_LT(inst.yaw, 2 * std::numbers::pi);
    }
  }
}

TEST(RandomizeScene, ValidatorCatchesViolations) {
  const AssetLibrary lib = box_library();
  PlacementRules r = rules_with({{0, 0}, {2, 2}, {0, 0}});
  SceneDescription s = randomize_scene(lib, r, 1);
  ASSERT_TRUE(scene_violations(lib, r, s).empty());
  // Stack the second tractor on the first.
  s.instances[1].pose = s.instances[0].pose;
  s.instances[1].asset = s.instances[0].asset;
  s.instances[1].asset_index = s.instances[0].asset_index;
  EXPECT_FALSE(scene_violations(lib, r, s).empty());
}

TEST(RandomizeScene, Deterministic) {
  const AssetLibrary lib = box_library();
  const PlacementRules r = rules_with({{0, 2}, {1, 3}, {1, 2}});
  const SceneDescription a = randomize_scene(lib, r, 42), b = randomize_scene(lib, r, 42);
  ASSERT_EQ(a.instances.size(), b.instances.size());
  EXPECT_EQ(a.sensor_pose, b.sensor_pose);
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    EXPECT_EQ(a.instances[i].asset, b.instances[i].asset);
    EXPECT_EQ(a.instances[i].pose, b.instances[i].pose);
  }
  EXPECT_NE(randomize_scene(lib, r, 43).sensor_pose, a.sensor_pose);
}

TEST(RandomizeScene, CountsAndAssetsAreUniform) {
  const AssetLibrary lib = box_library();
  const PlacementRules r = rules_with({{0, 0}, {1, 3}, {0, 0}});
  std::map<std::size_t, int> count_hist;
  std::map<std::string, int> asset_hist;
  int instances = 0;
  const int scenes = 1000;
  for (int seed = 0; seed < scenes; ++seed) {
    const SceneDescription s = randomize_scene(lib, r, seed);
    ++count_hist[s.instances.size()];
    for (const auto& inst : s.instances) {
      ++asset_hist[inst.asset];
      ++instances;
    }
  }
  for (std::size_t k = 1; k <= 3; ++k) {
    const double p = 1.0 / 3.0;
    EXPECT_NEAR(count_hist[k], scenes * p, 3 * std::sqrt(scenes * p * (1 - p))) << k;
  }
  ASSERT_EQ(asset_hist.size(), 3u);
  for (const auto& [name, n] : asset_hist) {
    const double p = 1.0 / 3.0;
    EXPECT_NEAR(n, instances * p, 3 * std::sqrt(instances * p * (1 - p))) << name;
  }
}

TEST(RandomizeScene, BudgetExhaustionIsReported) {
  const AssetLibrary lib = box_library();
  PlacementRules r = rules_with({{0, 0}, {0, 0}, {3, 3}});
  r.min_separation_m = 50;  // no center within sensor range is far enough from the sensor
  r.max_rejection_attempts = 50;
  EXPECT_THROW(randomize_scene(lib, r, 0), PlacementError);
}

TEST(ValidateRules, RejectsImpossibleRules) {
  const AssetLibrary lib = box_library();
  PlacementRules r = rules_with({{0, 0}, {1, 3}, {1, 2}});
  EXPECT_NO_THROW(validate_rules(lib, r, 50));
  EXPECT_THROW(validate_rules(lib, r, 40), ConfigError);  // sensor range beyond lidar range
  PlacementRules tight = r;
  tight.area = {-5, -5, 5, 5};
  EXPECT_THROW(validate_rules(lib, tight, 50), ConfigError);
  PlacementRules inverted = r;
  inverted.counts[1] = {3, 1};
  EXPECT_THROW(validate_rules(lib, inverted, 50), ConfigError);
  PlacementRules extra = r;
  extra.counts.push_back({0, 1});
  EXPECT_THROW(validate_rules(lib, extra, 50), ConfigError);
  AssetLibrary no_combines = lib;
  std::erase_if(no_combines.assets, [](const Asset& a) { return a.class_id == 2; });
  EXPECT_THROW(validate_rules(no_combines, r, 50), ConfigError);
}

TEST(SceneGeometry, GroundAndInstancesLabeled) {
  const AssetLibrary lib = box_library();
  const PlacementRules r = rules_with({{0, 0}, {1, 1}, {1, 1}});
  const SceneDescription s = randomize_scene(lib, r, 3);
  const SceneGeometry g = build_scene_geometry(lib, s, Label{0}, 51.0);
  ASSERT_EQ(g.instance_labels.size(), 3u);
  EXPECT_EQ(g.instance_labels.back(), 0);
  // Straight down from the sensor hits the ground 2.5 m below.
  const auto hit = g.bvh.intersect({s.sensor_pose.translation, {0, 0, -1}});
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->t, 2.5, 1e-12);
  EXPECT_EQ(hit->instance_id, 2u);
  const SceneGeometry bare = build_scene_geometry(lib, s, std::nullopt, 51.0);
  EXPECT_EQ(bare.instance_labels.size(), 2u);
}

}  // namespace
}  // namespace lidarforge
