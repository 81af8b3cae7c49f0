// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include "test_support.hpp"

namespace lidarforge {
namespace {

using testing::random_unit;

Pose random_pose(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> t(-10.0, 10.0);
  return {rotation_axis_angle(random_unit(gen), angle(gen)), {t(gen), t(gen), t(gen)}};
}

void expect_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

TEST(Vec3, Arithmetic) {
  const Vec3 a{1, 2, 3}, b{-4, 5, 0.5};
  EXPECT_EQ(a + b, (Vec3{-3, 7, 3.5}));
  EXPECT_EQ(a - b, (Vec3{5, -3, 2.5}));
  EXPECT_DOUBLE_EQ(dot(a, b), -4 + 10 + 1.5);
  EXPECT_EQ(cross(Vec3{1, 0, 0}, Vec3{0, 1, 0}), (Vec3{0, 0, 1}));
  EXPECT_DOUBLE_EQ(norm(Vec3{3, 4, 0}), 5.0);
  EXPECT_FALSE(is_finite(Vec3{0, std::numeric_limits<double>::quiet_NaN(), 0}));
}

TEST(Pose, RandomRotationsAreValid) {
  std::mt19937_64 gen(1);
  for (int i = 0; i < 200; ++i) EXPECT_TRUE(random_pose(gen).is_valid());
}

TEST(Pose, CompositionIsAssociative) {
  std::mt19937_64 gen(2);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(gen), b = random_pose(gen), c = random_pose(gen);
    const Vec3 p{0.3, -1.7, 2.2};
    expect_near(((a * b) * c).apply(p), (a * (b * c)).apply(p), 1e-9);
  }
}

TEST(Pose, InverseRoundTrip) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(gen);
    const Vec3 p{1.5, 2.5, -0.5};
    expect_near(a.inverse().apply(a.apply(p)), p, 1e-9);
    EXPECT_LT(rotation_angle((a * a.inverse()).rotation), 1e-7);
  }
}

TEST(Pose, YawRotatesXOntoY) {
  expect_near(Pose::from_yaw(std::numbers::pi / 2).apply({1, 0, 0}), {0, 1, 0}, 1e-12);
}

TEST(Pose, RotationAngleOfAxisAngle) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  for (int i = 0; i < 100; ++i) {
    const double a = angle(gen);
    EXPECT_NEAR(rotation_angle(rotation_axis_angle(random_unit(gen), a)), a, 1e-7);
  }
}

TEST(Pose, QuaternionRoundTrip) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = random_pose(gen).rotation;
    const Quaternion q = to_quaternion(r);
    EXPECT_NEAR(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z, 1.0, 1e-12);
    const Mat3 back = from_quaternion(q);
    for (int k = 0; k < 9; ++k) EXPECT_NEAR(back.m[k], r.m[k], 1e-12);
  }
}

TEST(Pose, QuaternionIsHamilton) {
  // +90 degrees about z is (x, y, z, w) = (0, 0, sin 45, cos 45).
  const Quaternion q = to_quaternion(rotation_z(std::numbers::pi / 2));
  EXPECT_NEAR(q.x, 0.0, 1e-12);
  EXPECT_NEAR(q.y, 0.0, 1e-12);
  EXPECT_NEAR(std::abs(q.z), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(q.w * q.z, 0.5, 1e-12);
}

TEST(Rng, SplitMix64ReferenceOutput) {
  // First outputs of the reference SplitMix64 seeded with 0.
  std::uint64_t state = 0;
  EXPECT_EQ(splitmix64(state), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(splitmix64(state), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(splitmix64(state), 0x06c45d188009454fULL);
}

TEST(Rng, DeterministicPerSeed) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs |= x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformAndBoundedRanges) {
  Rng rng(7);
  std::vector<int> hits(6, 0);
  for (int i = 0; i < 60000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = rng.between(-2, 3);
    ASSERT_GE(k, -2);
    ASSERT_LE(k, 3);
    ++hits[k + 2];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, NormalMoments) {
  Rng rng(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(11);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(Rng, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(7, i));
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_NE(derive_seed(7, 0), derive_seed(8, 0));
}

TEST(Rng, KeyedStreamIsOrderFree) {
  const KeyedStream a(5, 3, 17), b(5, 3, 17), c(5, 17, 3);
  EXPECT_EQ(a.bits(1), b.bits(1));
  EXPECT_EQ(a.bits(0), KeyedStream(5, 3, 17).bits(0));
  EXPECT_NE(a.bits(0), c.bits(0));
  EXPECT_NE(a.bits(0), a.bits(1));
}

TEST(Parallel, VisitsEveryIndexOnce) {
  for (unsigned workers : {1u, 3u, 8u}) {
    std::vector<std::atomic<int>> count(1000);
    parallel_for(count.size(), workers, [&](std::size_t i) { ++count[i]; }, 7);
    for (auto& c : count) EXPECT_EQ(c.load(), 1);
  }
}

TEST(Parallel, RethrowsLowestFailingIndex) {
  for (unsigned workers : {1u, 4u}) {
    try {
      parallel_for(100, workers, [](std::size_t i) {
        if (i == 30 || i == 70) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "no exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "30");
    }
  }
}

TEST(Parallel, WorkersFromEnvironment) {
  ::setenv("LIDARFORGE_WORKERS", "3", 1);
  EXPECT_EQ(default_workers(), 3u);
  ::setenv("LIDARFORGE_WORKERS", "junk", 1);
  EXPECT_GE(default_workers(), 1u);
  ::unsetenv("LIDARFORGE_WORKERS");
  EXPECT_GE(default_workers(), 1u);
}

TEST(Bytes, LittleEndianRoundTrip) {
  std::vector<unsigned char> buf;
  put_le(buf, std::uint16_t{0x1234});
  put_le(buf, std::uint64_t{0x0102030405060708ULL});
  put_le(buf, 1.5f);
  ASSERT_EQ(buf.size(), 14u);
  EXPECT_EQ(buf[0], 0x34);
  EXPECT_EQ(buf[1], 0x12);
  EXPECT_EQ(buf[2], 0x08);
  ByteReader r(buf, "mem");
  EXPECT_EQ(r.read<std::uint16_t>("a"), 0x1234);
  EXPECT_EQ(r.read<std::uint64_t>("b"), 0x0102030405060708ULL);
  EXPECT_EQ(r.read<float>("c"), 1.5f);
  EXPECT_EQ(r.remaining(), 0u);
}

TEST(Bytes, TruncationReportsOffset) {
  const std::vector<unsigned char> buf{1, 2, 3};
  ByteReader r(buf, "blob");
  r.read<std::uint16_t>("head");
  try {
    r.read<std::uint32_t>("count");
    FAIL() << "no exception";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.unit(), ParseError::Unit::kByte);
    EXPECT_EQ(e.location(), 2u);
    EXPECT_NE(std::string(e.what()).find("blob:byte 2"), std::string::npos);
  }
}

}  // namespace
}  // namespace lidarforge
