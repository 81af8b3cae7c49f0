// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "test_support.hpp"

namespace lidarforge {
namespace {

using testing::brute_force_cast;
using testing::random_soup;
using testing::random_unit;
using testing::TempDir;

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

template <typename T>
void append_raw(std::vector<unsigned char>& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));  // the test host is little-endian
  out.insert(out.end(), buf, buf + sizeof(T));
}

/// Binary STL assembled by hand: 80-byte header, count, 50-byte facets.
std::vector<unsigned char> stl_bytes(const std::vector<std::array<Vec3, 3>>& facets) {
  std::vector<unsigned char> out(80, ' ');
  append_raw(out, static_cast<std::uint32_t>(facets.size()));
  for (const auto& f : facets) {
    for (int k = 0; k < 3; ++k) append_raw(out, 0.0f);
    for (const Vec3& v : f) {
      append_raw(out, static_cast<float>(v.x));
      append_raw(out, static_cast<float>(v.y));
      append_raw(out, static_cast<float>(v.z));
    }
    append_raw(out, std::uint16_t{0});
  }
  return out;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

// ---- mesh readers ----------------------------------------------------------

TEST(MeshIo, AsciiPlySingleTriangle) {
  TempDir dir;
  write_text(dir / "t.ply",
             "ply\nformat ascii 1.0\ncomment hi\nelement vertex 3\nproperty float x\nproperty float y\n"
             "property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
             "0 0 0\n2 0 -1\n0 3 4\n3 0 1 2\n");
  const TriangleMesh m = load_mesh(dir / "t.ply");
  ASSERT_EQ(m.triangles.size(), 1u);
  EXPECT_EQ(m.triangles[0], (Triangle{0, 1, 2}));
  EXPECT_EQ(m.bounds.lo, (Vec3{0, 0, -1}));
  EXPECT_EQ(m.bounds.hi, (Vec3{2, 3, 4}));
}

TEST(MeshIo, BinaryPlyWithExtraPropertiesAndQuad) {
  TempDir dir;
  std::string header =
      "ply\nformat binary_little_endian 1.0\nelement vertex 4\nproperty double x\nproperty double y\n"
      "property double z\nproperty uchar red\nelement face 1\nproperty list uchar uint vertex_indices\n"
      "end_header\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  const double vs[4][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  for (const auto& v : vs) {
    for (double c : v) append_raw(bytes, c);
    append_raw(bytes, std::uint8_t{7});
  }
  append_raw(bytes, std::uint8_t{4});
  for (std::uint32_t i = 0; i < 4; ++i) append_raw(bytes, i);
  write_bytes(dir / "q.ply", bytes);
  const TriangleMesh m = load_mesh(dir / "q.ply");
  ASSERT_EQ(m.vertices.size(), 4u);
  EXPECT_EQ(m.vertices[2], (Vec3{1, 1, 0}));
  ASSERT_EQ(m.triangles.size(), 2u);  // fan triangulation
  EXPECT_EQ(m.triangles[0], (Triangle{0, 1, 2}));
  EXPECT_EQ(m.triangles[1], (Triangle{0, 2, 3}));
}

TEST(MeshIo, ObjOneBasedAndSlashForms) {
  TempDir dir;
  write_text(dir / "t.obj", "# c\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1 2 3\nf 1/1/1 2//1 -1\n");
  const TriangleMesh m = load_mesh(dir / "t.obj");
  ASSERT_EQ(m.triangles.size(), 2u);
  EXPECT_EQ(m.triangles[0], (Triangle{0, 1, 2}));
  EXPECT_EQ(m.triangles[1], (Triangle{0, 1, 2}));
}

TEST(MeshIo, BinaryStlCountsAgreeWithHeader) {
  TempDir dir;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<std::array<Vec3, 3>> facets(37);
  for (auto& f : facets) {
    for (auto& v : f) v = {u(gen), u(gen), u(gen)};
  }
  const auto bytes = stl_bytes(facets);
  write_bytes(dir / "m.stl", bytes);
  std::uint32_t header_count;
  std::memcpy(&header_count, bytes.data() + 80, 4);
  const TriangleMesh m = load_mesh(dir / "m.stl");
  EXPECT_EQ(m.triangles.size(), header_count);
  EXPECT_EQ(m.vertices.size(), 3u * header_count);
  EXPECT_EQ(m.vertices[3].x, static_cast<double>(static_cast<float>(facets[1][0].x)));
}

TEST(MeshIo, WeldingIsOptIn) {
  TempDir dir;
  // Two facets sharing an edge.
  write_bytes(dir / "w.stl", stl_bytes({{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}},
                                        {Vec3{1, 0, 0}, Vec3{1, 1, 0}, Vec3{0, 1, 0}}}));
  EXPECT_EQ(load_mesh(dir / "w.stl").vertices.size(), 6u);
  MeshLoadOptions weld;
  weld.weld = true;
  const TriangleMesh m = load_mesh(dir / "w.stl", weld);
  EXPECT_EQ(m.vertices.size(), 4u);
  EXPECT_EQ(m.triangles.size(), 2u);
}

TEST(MeshIo, ErrorsCarryLocation) {
  TempDir dir;
  EXPECT_NE(error_of([&] { load_mesh(dir / "missing.ply"); }).find("missing.ply"), std::string::npos);

  write_text(dir / "bad.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n");
  EXPECT_NE(error_of([&] { load_mesh(dir / "bad.obj"); }).find(":line 4"), std::string::npos);

  write_text(dir / "range.obj", "v 0 0 0\nf 1 2 3\n");
  EXPECT_THROW(load_mesh(dir / "range.obj"), ParseError);

  write_text(dir / "empty.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\n");
  EXPECT_NE(error_of([&] { load_mesh(dir / "empty.obj"); }).find("zero triangles"), std::string::npos);

  auto stl = stl_bytes({{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}}, {Vec3{}, Vec3{}, Vec3{}}});
  stl.resize(stl.size() - 10);
  write_bytes(dir / "trunc.stl", stl);
  try {
    load_mesh(dir / "trunc.stl");
    FAIL() << "truncated STL accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.unit(), ParseError::Unit::kByte);
    EXPECT_EQ(e.location(), 84u + 50u);  // start of the incomplete second facet
  }

  write_text(dir / "trunc.ply",
             "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
             "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n");
  EXPECT_THROW(load_mesh(dir / "trunc.ply"), ParseError);
  EXPECT_THROW(load_mesh(dir / "mesh.xyz"), Error);
}

TEST(MeshIo, WriteReadRoundTripAllFormats) {
  TempDir dir;
  std::mt19937_64 gen(8);
  const TriangleMesh soup = random_soup(gen, 50, 10.0, 2.0);
  for (const char* ext : {".ply", ".obj", ".stl"}) {
    const fs::path p = dir / (std::string("m") + ext);
    save_mesh(soup, p);
    const TriangleMesh back = load_mesh(p);
    ASSERT_EQ(back.triangles.size(), soup.triangles.size()) << ext;
    const double tol = std::string(ext) == ".stl" ? 1e-5 : 0.0;  // STL stores float32
    for (std::size_t t = 0; t < soup.triangles.size(); ++t) {
      for (int k = 0; k < 3; ++k) {
        const Vec3 a = soup.corner(t, k), b = back.corner(t, k);
        EXPECT_NEAR(a.x, b.x, tol * std::max(1.0, std::abs(a.x)));
        EXPECT_NEAR(a.y, b.y, tol * std::max(1.0, std::abs(a.y)));
        EXPECT_NEAR(a.z, b.z, tol * std::max(1.0, std::abs(a.z)));
      }
    }
  }
}

// ---- transforms and cropping -------------------------------------------------

TriangleMesh unit_triangle() {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}};
  m.update_bounds();
  return m;
}

TEST(Transform, IdentityIsBitwise) {
  TriangleMesh m = unit_triangle();
  m.vertices[0] = {-0.0, 1e-300, -7.25};
  m.update_bounds();
  const TriangleMesh t = transform_mesh(m, Pose::identity(), 1.0);
  ASSERT_EQ(t.vertices.size(), m.vertices.size());
  EXPECT_EQ(std::memcmp(t.vertices.data(), m.vertices.data(), sizeof(Vec3) * m.vertices.size()), 0);
}

TEST(Transform, TranslationYawAndScale) {
  const TriangleMesh shifted = transform_mesh(unit_triangle(), {Mat3::identity(), {1, 0, 0}});
  EXPECT_EQ(shifted.vertices[0].x, 1.0);
  EXPECT_EQ(shifted.vertices[1].x, 2.0);
  EXPECT_EQ(shifted.bounds.lo.x, 1.0);

  const TriangleMesh turned = transform_mesh(unit_triangle(), Pose::from_yaw(std::numbers::pi / 2));
  EXPECT_NEAR(turned.vertices[1].x, 0.0, 1e-12);
  EXPECT_NEAR(turned.vertices[1].y, 1.0, 1e-12);

  const TriangleMesh big = transform_mesh(unit_triangle(), Pose::identity(), 2.5);
  EXPECT_EQ(big.vertices[2], (Vec3{0, 2.5, 0}));
  EXPECT_THROW(transform_mesh(unit_triangle(), Pose::identity(), 0.0), Error);
  Pose bad;
  bad.translation.x = std::numeric_limits<double>::infinity();
  EXPECT_THROW(transform_mesh(unit_triangle(), bad), Error);
}

TEST(Transform, RoundTripWithinTolerance) {
  std::mt19937_64 gen(12);
  const TriangleMesh soup = random_soup(gen, 200, 20.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    const Pose p{rotation_axis_angle(random_unit(gen), 0.1 * i), {i * 0.7, -3.0, i * 0.1}};
    const TriangleMesh back = transform_mesh(transform_mesh(soup, p), p.inverse());
    for (std::size_t v = 0; v < soup.vertices.size(); ++v) {
      EXPECT_LT(distance(back.vertices[v], soup.vertices[v]), 1e-9);
    }
  }
}

/// 2x1 grid of unit squares split into 8 triangles: each square [x, x+1] has a
/// center vertex and four triangles fanning around it.
TriangleMesh eight_triangle_grid() {
  TriangleMesh m;
  for (int s = 0; s < 2; ++s) {
    const auto b = static_cast<std::uint32_t>(m.vertices.size());
    const double x = s;
    m.vertices.push_back({x, 0, 0});
    m.vertices.push_back({x + 1, 0, 0});
    m.vertices.push_back({x + 1, 1, 0});
    m.vertices.push_back({x, 1, 0});
    m.vertices.push_back({x + 0.5, 0.5, 0});
    m.triangles.push_back({b, b + 1, b + 4});
    m.triangles.push_back({b + 1, b + 2, b + 4});
    m.triangles.push_back({b + 2, b + 3, b + 4});
    m.triangles.push_back({b + 3, b, b + 4});
  }
  m.update_bounds();
  return m;
}

TEST(Crop, SupersetDisjointAndHalf) {
  const TriangleMesh m = eight_triangle_grid();
  const TriangleMesh all = crop_mesh(m, {{-1, -1, -1}, {3, 2, 1}});
  ASSERT_EQ(all.triangles.size(), m.triangles.size());
  EXPECT_EQ(all.vertices.size(), m.vertices.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) EXPECT_EQ(all.vertices[all.triangles[t][k]], m.vertices[m.triangles[t][k]]);
  }

  EXPECT_TRUE(crop_mesh(m, {{10, 10, 10}, {11, 11, 11}}).empty());

  // Left half: the closed box [0, 1] x [0, 1] holds exactly the first square's
  // four triangles; the second square's triangles all touch x > 1.
  const TriangleMesh left = crop_mesh(m, {{0, 0, 0}, {1, 1, 0}});
  ASSERT_EQ(left.triangles.size(), 4u);
  EXPECT_EQ(left.vertices.size(), 5u);
  for (const Vec3& v : left.vertices) EXPECT_LE(v.x, 1.0);
}

TEST(Crop, Idempotent) {
  std::mt19937_64 gen(21);
  const TriangleMesh soup = random_soup(gen, 500, 10.0, 2.0);
  const Aabb box{{-4, -6, -2}, {5, 3, 7}};
  const TriangleMesh once = crop_mesh(soup, box);
  const TriangleMesh twice = crop_mesh(once, box);
  EXPECT_EQ(once.vertices, twice.vertices);
  EXPECT_EQ(once.triangles, twice.triangles);
  EXPECT_GT(once.triangles.size(), 0u);
}

// ---- BVH ---------------------------------------------------------------------

Bvh build_single(const TriangleMesh& m) {
  const MeshInstance inst{std::cref(m), Pose::identity()};
  return Bvh::build(std::span<const MeshInstance>(&inst, 1));
}

void check_invariants(const Bvh& bvh, std::size_t triangles) {
  EXPECT_LE(bvh.depth(), Bvh::kMaxDepth);
  auto order = bvh.primitive_order();
  ASSERT_EQ(order.size(), triangles);
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i) ASSERT_EQ(order[i], i);
  for (const auto& node : bvh.nodes()) {
    if (!node.is_leaf()) continue;
    // Corners are stored as v0 + edge, which can round one ulp past the box.
    Aabb box = node.bounds;
    box.lo = box.lo - Vec3{1e-9, 1e-9, 1e-9};
    box.hi = box.hi + Vec3{1e-9, 1e-9, 1e-9};
    for (std::uint32_t k = node.offset; k < node.offset + node.count; ++k) {
      const auto& p = bvh.primitives()[k];
      EXPECT_TRUE(box.contains(p.v0));
      EXPECT_TRUE(box.contains(p.v0 + p.e1));
      EXPECT_TRUE(box.contains(p.v0 + p.e2));
    }
  }
}

TEST(Bvh, SingleTriangleIsOneLeaf) {
  const TriangleMesh t = unit_triangle();
  const Bvh bvh = build_single(t);
  ASSERT_EQ(bvh.nodes().size(), 1u);
  EXPECT_TRUE(bvh.nodes()[0].is_leaf());
  EXPECT_EQ(bvh.nodes()[0].bounds.lo, t.bounds.lo);
  EXPECT_EQ(bvh.nodes()[0].bounds.hi, t.bounds.hi);
}

TEST(Bvh, TwoDistantTrianglesSplit) {
  TriangleMesh m = unit_triangle();
  append_mesh(m, transform_mesh(unit_triangle(), {Mat3::identity(), {100, 0, 0}}));
  const Bvh bvh = build_single(m);
  const auto& root = bvh.nodes()[0];
  ASSERT_FALSE(root.is_leaf());
  const auto& left = bvh.nodes()[1];
  const auto& right = bvh.nodes()[root.offset];
  EXPECT_TRUE(left.is_leaf());
  EXPECT_TRUE(right.is_leaf());
  EXPECT_TRUE(left.bounds.hi.x < right.bounds.lo.x || right.bounds.hi.x < left.bounds.lo.x);
}

TEST(Bvh, EmptySceneRejected) {
  EXPECT_THROW(Bvh::build(std::span<const MeshInstance>()), Error);
  const TriangleMesh empty;
  EXPECT_THROW(build_single(empty), Error);
}

TEST(Bvh, InvariantsAndCentroidReachability) {
  std::mt19937_64 gen(5);
  const TriangleMesh soup = random_soup(gen, 5000, 50.0, 3.0);
  const Bvh bvh = build_single(soup);
  check_invariants(bvh, soup.triangles.size());
  for (std::uint32_t t = 0; t < soup.triangles.size(); ++t) {
    const Vec3 a = soup.corner(t, 0), b = soup.corner(t, 1), c = soup.corner(t, 2);
    const Vec3 centroid = (a + b + c) / 3.0;
    const Vec3 n = cross(b - a, c - a);
    if (norm(n) < 1e-9) continue;
    const Vec3 dir = normalized(n);
    const Ray ray{centroid - dir, dir, 0.0, 2.0};
    bool seen = false;
    bvh.visit_candidates(ray, [&](const Bvh::Primitive& p) { seen |= p.global_id == t; });
    ASSERT_TRUE(seen) << "triangle " << t;
  }
}

TEST(Bvh, BuildIsDeterministic) {
  std::mt19937_64 gen(6);
  const TriangleMesh soup = random_soup(gen, 3000, 30.0, 2.0);
  const Bvh a = build_single(soup), b = build_single(soup);
  ASSERT_EQ(a.nodes().size(), b.nodes().size());
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    EXPECT_EQ(a.nodes()[i].offset, b.nodes()[i].offset);
    EXPECT_EQ(a.nodes()[i].count, b.nodes()[i].count);
    EXPECT_EQ(a.nodes()[i].bounds.lo, b.nodes()[i].bounds.lo);
    EXPECT_EQ(a.nodes()[i].bounds.hi, b.nodes()[i].bounds.hi);
  }
  EXPECT_EQ(a.primitive_order(), b.primitive_order());
}

TEST(Bvh, AxisAlignedHitAndMiss) {
  TriangleMesh t;
  t.vertices = {{-1, -1, 5}, {1, -1, 5}, {0, 1, 5}};
  t.triangles = {{0, 1, 2}};
  t.update_bounds();
  const Ray ray{{0, 0, 0}, {0, 0, 1}};
  const auto hit = build_single(t).intersect(ray);
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->t, 5.0);
  EXPECT_EQ(hit->point, (Vec3{0, 0, 5}));

  const TriangleMesh far = transform_mesh(t, {Mat3::identity(), {11, 0, 0}});
  EXPECT_FALSE(build_single(far).intersect(ray));

  // Range gates are honored on both ends.
  EXPECT_FALSE(build_single(t).intersect({{0, 0, 0}, {0, 0, 1}, 0.0, 4.9}));
  EXPECT_FALSE(build_single(t).intersect({{0, 0, 0}, {0, 0, 1}, 5.1, 10.0}));
  // Back faces count.
  EXPECT_TRUE(build_single(t).intersect({{0, 0, 10}, {0, 0, -1}}));
}

TEST(Bvh, EdgeOnRaysStayInRange) {
  std::mt19937_64 gen(17);
  const TriangleMesh soup = random_soup(gen, 500, 5.0, 2.0);
  const Bvh bvh = build_single(soup);
  for (std::uint32_t t = 0; t < soup.triangles.size(); ++t) {
    // A ray lying in the triangle's plane, along an edge.
    const Vec3 a = soup.corner(t, 0), b = soup.corner(t, 1);
    if (distance(a, b) < 1e-6) continue;
    const Ray ray{a - normalized(b - a), normalized(b - a), 0.5, 3.0};
    if (auto hit = bvh.intersect(ray)) {
      EXPECT_GE(hit->t, ray.t_min);
      EXPECT_LE(hit->t, ray.t_max);
    }
  }
}

TEST(Bvh, MatchesBruteForceWithInstances) {
  std::mt19937_64 gen(99);
  std::vector<TriangleMesh> local;
  std::vector<Pose> poses;
  for (int i = 0; i < 4; ++i) {
    local.push_back(random_soup(gen, 300, 5.0, 2.0));
    poses.push_back({rotation_axis_angle(random_unit(gen), 0.4 * i), {8.0 * i - 12.0, 0.5 * i, 0}});
  }
  std::vector<MeshInstance> inst;
  std::vector<TriangleMesh> world;
  for (int i = 0; i < 4; ++i) {
    inst.push_back({std::cref(local[i]), poses[i]});
    world.push_back(transform_mesh(local[i], poses[i]));
  }
  const Bvh bvh = Bvh::build(inst);
  check_invariants(bvh, 1200);
  std::uniform_real_distribution<double> o(-20.0, 20.0);
  int hits = 0;
  for (int r = 0; r < 3000; ++r) {
    const Ray ray{{o(gen), o(gen), o(gen)}, random_unit(gen)};
    const auto got = bvh.intersect(ray);
    const auto want = brute_force_cast(world, ray);
    ASSERT_EQ(got.has_value(), want.has_value()) << "ray " << r;
    if (!got) continue;
    ++hits;
    EXPECT_NEAR(got->t, want->t, 1e-9 * std::max(1.0, want->t));
    EXPECT_EQ(got->instance_id, want->instance);
    EXPECT_EQ(got->triangle_id, want->triangle);
    EXPECT_LT(distance(got->point, ray.at(got->t)), 1e-6);
  }
  EXPECT_GT(hits, 100);
}

// ---- PointIndex ----------------------------------------------------------------

TEST(PointIndex, EmptyAndSingle) {
  const PointIndex empty(std::span<const Vec3>(), 1.0);
  EXPECT_FALSE(empty.nearest({0, 0, 0}, 1.0));
  const std::vector<Vec3> one{{0.5, 0, 0}};
  const PointIndex idx(one, 1.0);
  const auto nn = idx.nearest({0, 0, 0}, 1.0);
  ASSERT_TRUE(nn);
  EXPECT_EQ(nn->id, 0u);
  EXPECT_DOUBLE_EQ(nn->distance, 0.5);
  EXPECT_FALSE(idx.nearest({0, 0, 0}, 0.4));
  EXPECT_THROW(PointIndex(one, 0.0), Error);
}

TEST(PointIndex, MatchesLinearScan) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (double cell : {0.5, 2.0, 7.0}) {
    std::vector<Vec3> pts(2000);
    for (auto& p : pts) p = {u(gen), u(gen), u(gen)};
    // Exact duplicates exercise the lowest-id tie break.
    for (int k = 0; k < 50; ++k) pts[1000 + k] = pts[k];
    const PointIndex idx(pts, cell);
    for (int q = 0; q < 200; ++q) {
      const Vec3 query = q < 50 ? pts[q] : Vec3{u(gen), u(gen), u(gen)};
      const double radius = 2.0;
      std::optional<Neighbor> want;
      std::set<std::uint32_t> within;
      for (std::uint32_t i = 0; i < pts.size(); ++i) {
        const double d2 = squared_distance(pts[i], query);
        if (d2 > radius * radius) continue;
        within.insert(i);
        if (!want || d2 < want->distance * want->distance) want = Neighbor{i, std::sqrt(d2)};
      }
      const auto got = idx.nearest(query, radius);
      ASSERT_EQ(got.has_value(), want.has_value());
      if (got) {
        EXPECT_EQ(got->id, want->id);
        EXPECT_EQ(got->distance, want->distance);
      }
      std::set<std::uint32_t> visited;
      idx.for_each_within(query, radius, [&](std::uint32_t id, double) { visited.insert(id); });
      EXPECT_EQ(visited, within);
    }
  }
}

}  // namespace
}  // namespace lidarforge
