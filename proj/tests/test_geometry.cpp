// Copyright 2026 The instmask Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <set>

#include "instmask/geometry.hpp"
#include "instmask/scene.hpp"
#include "test_util.hpp"

using namespace instmask;

namespace {

CameraFrame identity_camera() { return CameraFrame{}; }

CameraFrame pinhole(double f, double cx, double cy) {
  CameraFrame cam;
  cam.intrinsics = {{{f, 0, cx}, {0, f, cy}, {0, 0, 1}}};
  return cam;
}

ProjectedPolygon make_poly(const std::vector<oracle::P2>& pts) {
  ProjectedPolygon p;
  for (const auto& v : pts) p.vertices.push_back({v.x, v.y});
  return p;
}

std::set<std::pair<int, int>> set_pixels(const std::vector<std::uint8_t>& px, std::uint32_t w) {
  std::set<std::pair<int, int>> out;
  for (std::size_t i = 0; i < px.size(); ++i)
    if (px[i]) out.insert({static_cast<int>(i / w), static_cast<int>(i % w)});
  return out;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("identity camera divides by depth") {
  const auto p = project_corner({0.5, -0.5, 2}, identity_camera());
  REQUIRE(p.has_value());
  CHECK(p->x == 0.25);
  CHECK(p->y == -0.25);
  CHECK(p->depth == 2.0);
}

TEST_CASE("points at or behind the near plane are flagged") {
  CHECK_FALSE(project_corner({1, 1, 0}, identity_camera()).has_value());
  CHECK_FALSE(project_corner({1, 1, 1e-3}, identity_camera()).has_value());
  CHECK_FALSE(project_corner({1, 1, -5}, identity_camera()).has_value());
  CHECK(project_corner({1, 1, 2e-3}, identity_camera()).has_value());
}

TEST_CASE("hand-multiplied intrinsics example") {
  const auto p = project_corner({1, 1, 10}, pinhole(100, 64, 48));
  REQUIRE(p.has_value());
  CHECK(p->x == 74.0);
  CHECK(p->y == 58.0);
  CHECK(p->depth == 10.0);
}

TEST_CASE("projection agrees with the oracle under random cameras") {
  CounterRng rng(21);
  for (int i = 0; i < 200; ++i) {
    CameraFrame cam = pinhole(50 + 200 * rng.uniform(), 100 * rng.uniform(), 100 * rng.uniform());
    cam.rotation = rotation_z(6.3 * rng.uniform());
    cam.translation = {rng.normal(), rng.normal(), rng.normal()};
    const Vec3 x{3 * rng.normal(), 3 * rng.normal(), 3 * rng.normal()};
    const auto a = project_corner(x, cam);
    const auto b = oracle::project(cam, x);
    REQUIRE(a.has_value() == b.has_value());
    if (a) {
      CHECK(a->x == doctest::Approx(b->x).epsilon(1e-12));
      CHECK(a->y == doctest::Approx(b->y).epsilon(1e-12));
      CHECK(a->depth == doctest::Approx(b->depth).epsilon(1e-12));
    }
  }
}

TEST_CASE("box in front of an identity camera has a 4 to 6 vertex hull") {
  const auto box = corners_from_pose({1, 1, 1}, {0.3, 0.2, 5}, 0.0);
  const auto poly = hull_polygon(box, identity_camera());
  CHECK(poly.vertices.size() >= 4);
  CHECK(poly.vertices.size() <= 6);
  std::vector<oracle::P2> pts;
  for (const auto& c : box.corners) {
    const auto p = oracle::project(identity_camera(), c);
    pts.push_back({p->x, p->y});
  }
  std::set<oracle::P2> got;
  for (const auto& v : poly.vertices) got.insert({v[0], v[1]});
  CHECK(got == oracle::extreme_points(pts));
}

TEST_CASE("hull matches exhaustive extreme points on random clouds") {
  CounterRng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 14);
    std::vector<Vec2> pts;
    std::vector<oracle::P2> opts;
    for (int i = 0; i < n; ++i) {
      // Coarse lattice: plenty of duplicates and collinear triples.
      const double x = std::floor(6 * rng.uniform()), y = std::floor(6 * rng.uniform());
      pts.push_back({x, y});
      opts.push_back({x, y});
    }
    const auto hull = convex_hull(pts);
    std::set<oracle::P2> got;
    for (const auto& v : hull) got.insert({v[0], v[1]});
    CHECK(got.size() == hull.size());
    CHECK(got == oracle::extreme_points(opts));
    // Counter-clockwise, strictly convex.
    if (hull.size() >= 3) {
      for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        const auto& c = hull[(i + 2) % hull.size()];
        CHECK(oracle::orient({a[0], a[1]}, {b[0], b[1]}, {c[0], c[1]}) > 0);
      }
      // Every input point lies inside or on the hull.
      std::vector<oracle::P2> h;
      for (const auto& v : hull) h.push_back({v[0], v[1]});
      for (const auto& p : opts) CHECK(oracle::in_closed_polygon(h, p));
    }
  }
}

TEST_CASE("box fully behind the camera yields an empty polygon") {
  const auto box = corners_from_pose({1, 1, 1}, {0, 0, -5}, 0.3);
  const auto poly = hull_polygon(box, identity_camera());
  CHECK(poly.empty());
  CHECK_FALSE(poly.degenerate());
  const auto px = rasterize(poly, 8, 8);
  CHECK(std::count(px.begin(), px.end(), 1) == 0);
}

TEST_CASE("box straddling the near plane is clipped, not wrapped") {
  const CameraFrame cam = pinhole(50, 32, 32);
  CounterRng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 center{rng.normal(), rng.normal(), 0.2 * rng.normal()};
    const auto box = corners_from_pose({1 + rng.uniform(), 1 + rng.uniform(), 1}, center,
                                       6.3 * rng.uniform());
    const auto pts = clip_box_to_near_plane(box, cam);
    for (const auto& p : pts) CHECK(p[2] >= kNearPlane);
    const auto ref = oracle::clipped_points(box.corners, cam);
    CHECK(pts.size() == ref.size());
    const auto poly = hull_polygon(box, cam);
    // Every hull vertex is the projection of a clipped point.
    for (const auto& v : poly.vertices) {
      bool found = false;
      for (const auto& p : pts) {
        const Vec3 h = cam.intrinsics * p;
        if (h[0] / h[2] == v[0] && h[1] / h[2] == v[1]) found = true;
      }
      CHECK(found);
    }
  }
}

TEST_CASE("square raster example") {
  const auto poly = make_poly({{1, 1}, {3, 1}, {3, 3}, {1, 3}});
  const auto px = rasterize(poly, 4, 4);
  CHECK(set_pixels(px, 4) == std::set<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 1}, {2, 2}});
}

TEST_CASE("full-image polygon saturates") {
  const std::uint32_t h = 7, w = 9;
  const auto poly = make_poly({{-1, -1}, {w + 1.0, -1}, {w + 1.0, h + 1.0}, {-1, h + 1.0}});
  const auto px = rasterize(poly, h, w);
  CHECK(std::count(px.begin(), px.end(), 1) == static_cast<long>(h * w));
}

TEST_CASE("centers exactly on edges count as inside") {
  // Triangle with an edge through the centers of row 1.
  const auto poly = make_poly({{0.5, 1.5}, {3.5, 1.5}, {2, 4}});
  const auto px = rasterize(poly, 5, 5);
  for (int c = 0; c < 4; ++c) CHECK(px[1 * 5 + c] == 1);
  CHECK(px == oracle::raster({{0.5, 1.5}, {3.5, 1.5}, {2, 4}}, 5, 5));
}

TEST_CASE("degenerate polygons mark their vertex pixels") {
  // A segment: centers on it plus the two end pixels.
  const auto seg = make_poly({{0.2, 0.2}, {3.8, 0.2}});
  auto px = rasterize(seg, 4, 4);
  CHECK(set_pixels(px, 4) == std::set<std::pair<int, int>>{{0, 0}, {0, 3}});
  // A sliver triangle of area < 1 missing every center.
  const auto sliver = make_poly({{1.1, 1.1}, {1.9, 1.2}, {1.4, 1.3}});
  CHECK(sliver.degenerate());
  px = rasterize(sliver, 4, 4);
  CHECK(set_pixels(px, 4) == std::set<std::pair<int, int>>{{1, 1}});
  // A single point off-grid leaves nothing.
  px = rasterize(make_poly({{-3, 2}}), 4, 4);
  CHECK(std::count(px.begin(), px.end(), 1) == 0);
}

TEST_CASE("rasterization matches the center-in-polygon oracle") {
  CounterRng rng(99);
  std::size_t mismatches = 0, polygons = 0;
  for (double grain : {2.0, 8.0, 1024.0}) {
    for (int trial = 0; trial < 300; ++trial) {
      const std::uint32_t h = 1 + rng.next_u64() % 64, w = 1 + rng.next_u64() % 64;
      const auto poly = testutil::random_convex_polygon(rng, w, h, grain);
      const auto got = rasterize(make_poly(poly), h, w);
      const auto want = oracle::raster(poly, h, w);
      for (std::size_t i = 0; i < got.size(); ++i) mismatches += got[i] != want[i];
      ++polygons;
    }
  }
  CHECK(polygons == 900);
  CHECK(mismatches == 0);
}

TEST_CASE("integer translation shifts the raster") {
  CounterRng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint32_t h = 40, w = 40;
    auto poly = testutil::random_convex_polygon(rng, 20, 20, 16);
    const int dx = static_cast<int>(rng.next_u64() % 15), dy = static_cast<int>(rng.next_u64() % 15);
    auto moved = poly;
    for (auto& p : moved) {
      p.x += dx;
      p.y += dy;
    }
    const auto a = rasterize(make_poly(poly), h, w);
    const auto b = rasterize(make_poly(moved), h, w);
    for (std::uint32_t r = 0; r + dy < h; ++r)
      for (std::uint32_t c = 0; c + dx < w; ++c) CHECK(a[r * w + c] == b[(r + dy) * w + c + dx]);
  }
}

TEST_CASE("growing a box never clears a pixel") {
  // Sizes keep the projected hull well above one square pixel, where the
  // center rule alone decides coverage.
  const CameraFrame cam = pinhole(60, 32, 32);
  CounterRng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 center{2 * rng.normal(), 2 * rng.normal(), 4 + 6 * rng.uniform()};
    const Vec3 size{0.5 + rng.uniform(), 0.5 + rng.uniform(), 0.5 + rng.uniform()};
    const double yaw = 6.3 * rng.uniform();
    const double grow = 1.0 + rng.uniform();
    const auto small = hull_polygon(corners_from_pose(size, center, yaw), cam);
    const auto big = hull_polygon(corners_from_pose(grow * size, center, yaw), cam);
    REQUIRE_FALSE(small.degenerate());
    const auto a = rasterize(small, 64, 64);
    const auto b = rasterize(big, 64, 64);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i]) CHECK(b[i] == 1);
  }
}

TEST_CASE("mask stack follows poses and leaves absent frames empty") {
  GeneratorSpec spec;
  spec.dims = {6, 64, 96, 1, 8, 8};
  spec.instance_count = 3;
  spec.motions = {MotionKind::kOccludedGap, MotionKind::kLinear, MotionKind::kTurning};
  const auto scene = generate_synthetic_scene(7, spec);
  for (const auto& inst : scene.instances) {
    const auto stack = build_mask_stack(inst, scene, 0);
    const auto ref = oracle::instance_pixels(inst, scene, 0);
    std::size_t diff = 0;
    for (std::uint32_t t = 0; t < 6; ++t)
      for (std::uint32_t r = 0; r < 64; ++r)
        for (std::uint32_t c = 0; c < 96; ++c)
          diff += stack.get(t, r, c) != (ref[(t * 64 + r) * 96 + c] != 0);
    CHECK(diff == 0);
    for (std::uint32_t t = 0; t < 6; ++t)
      if (!inst.pose_at(t)) CHECK(stack.count_frame(t) == 0);
  }
}

TEST_CASE("absent instance and static scenes") {
  GeneratorSpec spec;
  spec.dims = {4, 32, 32, 1, 8, 8};
  spec.instance_count = 1;
  auto scene = generate_synthetic_scene(4, spec);
  Instance ghost = scene.instances[0];
  ghost.poses.clear();
  CHECK(build_mask_stack(ghost, scene, 0).count() == 0);

  Instance still = scene.instances[0];
  const Pose p0 = still.poses.begin()->second;
  for (auto& [t, pose] : still.poses) pose = p0;
  const auto stack = build_mask_stack(still, scene, 0);
  CHECK(stack.count_frame(0) > 0);
  for (std::uint32_t t = 1; t < 4; ++t) CHECK(stack.frame(t) == stack.frame(0));
}

TEST_CASE("mask stack binary and PGM encodings") {
  PixelMaskStack stack(42, 3, 5, 7);
  CounterRng rng(1);
  for (std::uint32_t t = 0; t < 3; ++t)
    for (std::uint32_t r = 0; r < 5; ++r)
      for (std::uint32_t c = 0; c < 7; ++c)
        if (rng.uniform() < 0.4) stack.set(t, r, c);
  const auto bytes = encode_mask_stack(stack);
  CHECK(bytes.size() == 16 + (3 * 5 * 7 + 7) / 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "IMBM");
  CHECK(bytes[4] == 1);
  CHECK(bytes[6] == 3);
  CHECK(bytes[8] == 5);
  CHECK(bytes[12] == 7);
  // LSB-first packing in (t, row, col) order.
  CHECK(((bytes[16] >> 0) & 1) == stack.get(0, 0, 0));
  CHECK(((bytes[16] >> 1) & 1) == stack.get(0, 0, 1));
  CHECK(((bytes[16 + 4] >> 3) & 1) == stack.get(0, 5, 0));  // bit 35
  CHECK(decode_mask_stack(bytes, 42) == stack);

  auto bad = bytes;
  bad[0] = 'X';
  testutil::expect_error([&] { decode_mask_stack(bad, 42); }, ErrorCode::kParse);
  bad = bytes;
  bad.pop_back();
  testutil::expect_error([&] { decode_mask_stack(bad, 42); }, ErrorCode::kParse);

  const auto pgm = encode_pgm(stack, 1);
  const std::string head = "P5\n7 5\n255\n";
  CHECK(std::string(pgm.begin(), pgm.begin() + head.size()) == head);
  CHECK(pgm.size() == head.size() + 35);
  CHECK(pgm[head.size() + 2] == (stack.get(1, 0, 2) ? 255 : 0));
}

}  // TEST_SUITE
