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

#include "instmask/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "instmask/error.hpp"

namespace instmask {

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

Vec2 project_camera_point(const Vec3& p, const Mat3& k) {
  const Vec3 h = k * p;
  return {h[0] / h[2], h[1] / h[2]};
}

// Closed-polygon membership for a CCW convex polygon with >= 3 vertices.
bool inside_convex(std::span<const Vec2> poly, const Vec2& p) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(poly[i], poly[(i + 1) % n], p) < 0.0) return false;
  }
  return true;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  if (cross(a, b, p) != 0.0) return false;
  return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) &&
         std::min(a[1], b[1]) <= p[1] && p[1] <= std::max(a[1], b[1]);
}

}  // namespace

std::optional<ProjectedPoint> project_corner(const Vec3& world, const CameraFrame& cam) {
  const Vec3 h = cam.intrinsics * (cam.rotation * world + cam.translation);
  if (!(h[2] > kNearPlane)) return std::nullopt;
  return ProjectedPoint{h[0] / h[2], h[1] / h[2], h[2]};
}

std::vector<Vec3> clip_box_to_near_plane(const BoxCorners3D& box, const CameraFrame& cam) {
  std::array<Vec3, 8> pts{};
  for (int c = 0; c < 8; ++c) pts[c] = cam.rotation * box.corners[c] + cam.translation;

  std::vector<Vec3> out;
  for (int c = 0; c < 8; ++c) {
    if (pts[c][2] > kNearPlane) out.push_back(pts[c]);
  }
  if (out.size() == 8 || out.empty()) return out;

  // The 12 edges join corners that differ in exactly one bit.
  for (int a = 0; a < 8; ++a) {
    for (int bit = 1; bit < 8; bit <<= 1) {
      const int b = a | bit;
      if (b == a) continue;
      const bool front_a = pts[a][2] > kNearPlane;
      const bool front_b = pts[b][2] > kNearPlane;
      if (front_a == front_b) continue;
      const Vec3& p = pts[a];
      const Vec3& q = pts[b];
      const double s = (kNearPlane - p[2]) / (q[2] - p[2]);
      Vec3 hit = p + s * (q - p);
      hit[2] = kNearPlane;
      out.push_back(hit);
    }
  }
  return out;
}

double ProjectedPolygon::area() const {
  const std::size_t n = vertices.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % n];
    twice += a[0] * b[1] - a[1] * b[0];
  }
  return 0.5 * twice;
}

bool ProjectedPolygon::degenerate() const {
  return !vertices.empty() && (vertices.size() <= 2 || area() < 1.0);
}

std::vector<Vec2> convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() <= 2) return points;

  std::vector<Vec2> hull(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    const auto& p = points[i];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

ProjectedPolygon hull_polygon(const BoxCorners3D& box, const CameraFrame& cam) {
  ProjectedPolygon poly;
  poly.frame_index = cam.frame_index;
  const auto clipped = clip_box_to_near_plane(box, cam);
  std::vector<Vec2> projected;
  projected.reserve(clipped.size());
  for (const auto& p : clipped) projected.push_back(project_camera_point(p, cam.intrinsics));
  poly.vertices = convex_hull(std::move(projected));
  return poly;
}

// ---- mask stack ----------------------------------------------------------

PixelMaskStack::PixelMaskStack(InstanceId id, std::uint32_t frames, std::uint32_t height,
                               std::uint32_t width)
    : instance_id_(id),
      frames_(frames),
      height_(height),
      width_(width),
      words_((std::size_t{frames} * height * width + 63) / 64, 0) {}

std::size_t PixelMaskStack::count() const {
  std::size_t total = 0;
  for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

std::size_t PixelMaskStack::count_frame(std::uint32_t t) const {
  std::size_t total = 0;
  for (std::uint32_t r = 0; r < height_; ++r)
    for (std::uint32_t c = 0; c < width_; ++c) total += get(t, r, c);
  return total;
}

void PixelMaskStack::set_frame(std::uint32_t t, std::span<const std::uint8_t> pixels) {
  if (t >= frames_ || pixels.size() != std::size_t{height_} * width_) {
    fail(ErrorCode::kShape, "set_frame: frame index or pixel count out of range");
  }
  for (std::uint32_t r = 0; r < height_; ++r)
    for (std::uint32_t c = 0; c < width_; ++c)
      set(t, r, c, pixels[std::size_t{r} * width_ + c] != 0);
}

std::vector<std::uint8_t> PixelMaskStack::frame(std::uint32_t t) const {
  std::vector<std::uint8_t> out(std::size_t{height_} * width_);
  for (std::uint32_t r = 0; r < height_; ++r)
    for (std::uint32_t c = 0; c < width_; ++c)
      out[std::size_t{r} * width_ + c] = get(t, r, c) ? 1 : 0;
  return out;
}

// ---- rasterization -------------------------------------------------------

namespace {

void mark_vertex_pixels(std::span<const Vec2> verts, std::uint32_t height,
                        std::uint32_t width, std::vector<std::uint8_t>& out) {
  for (const auto& v : verts) {
    const double c = std::floor(v[0]);
    const double r = std::floor(v[1]);
    if (c >= 0.0 && r >= 0.0 && c < width && r < height) {
      out[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)] = 1;
    }
  }
}

// Integer range of pixel indices whose centers fall in [lo, hi], clamped to
// [0, limit). Returns false if empty.
bool center_range(double lo, double hi, std::uint32_t limit, std::int64_t& first,
                  std::int64_t& last) {
  const double a = std::ceil(lo - 0.5);
  const double b = std::floor(hi - 0.5);
  first = static_cast<std::int64_t>(std::max(a, 0.0));
  last = static_cast<std::int64_t>(std::min(b, static_cast<double>(limit) - 1.0));
  return a <= b && first <= last && b >= 0.0 && a < limit;
}

void rasterize_segment(std::span<const Vec2> verts, std::uint32_t height,
                       std::uint32_t width, std::vector<std::uint8_t>& out) {
  const Vec2& a = verts[0];
  const Vec2& b = verts.size() > 1 ? verts[1] : verts[0];
  std::int64_t r0, r1, c0, c1;
  if (!center_range(std::min(a[1], b[1]), std::max(a[1], b[1]), height, r0, r1)) return;
  if (!center_range(std::min(a[0], b[0]), std::max(a[0], b[0]), width, c0, c1)) return;
  for (std::int64_t r = r0; r <= r1; ++r) {
    for (std::int64_t c = c0; c <= c1; ++c) {
      const Vec2 p{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
      if (on_segment(a, b, p)) out[static_cast<std::size_t>(r) * width + c] = 1;
    }
  }
}

}  // namespace

std::vector<std::uint8_t> rasterize(const ProjectedPolygon& poly, std::uint32_t height,
                                    std::uint32_t width) {
  std::vector<std::uint8_t> out(std::size_t{height} * width, 0);
  const auto& verts = poly.vertices;
  if (verts.empty()) return out;

  if (verts.size() <= 2) {
    rasterize_segment(verts, height, width, out);
    mark_vertex_pixels(verts, height, width, out);
    return out;
  }

  double ymin = verts[0][1], ymax = verts[0][1];
  for (const auto& v : verts) {
    ymin = std::min(ymin, v[1]);
    ymax = std::max(ymax, v[1]);
  }
  std::int64_t r0, r1;
  if (center_range(ymin, ymax, height, r0, r1)) {
    const std::size_t n = verts.size();
    for (std::int64_t r = r0; r <= r1; ++r) {
      const double y = static_cast<double>(r) + 0.5;
      // Span of the scanline inside the polygon, from the crossing edges.
      double xl = INFINITY, xr = -INFINITY;
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = verts[i];
        const Vec2& b = verts[(i + 1) % n];
        const double lo = std::min(a[1], b[1]);
        const double hi = std::max(a[1], b[1]);
        if (y < lo || y > hi) continue;
        if (a[1] == b[1]) {
          xl = std::min({xl, a[0], b[0]});
          xr = std::max({xr, a[0], b[0]});
          continue;
        }
        const double x = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
        xl = std::min(xl, x);
        xr = std::max(xr, x);
      }
      if (xl > xr) continue;
      // Columns well inside the span are taken as is; the two columns at
      // each end are decided by the exact edge predicate.
      const auto lo = static_cast<std::int64_t>(std::floor(xl - 0.5)) - 1;
      const auto hi = static_cast<std::int64_t>(std::ceil(xr - 0.5)) + 1;
      const std::int64_t c_first = std::max<std::int64_t>(lo, 0);
      const std::int64_t c_last = std::min<std::int64_t>(hi, std::int64_t{width} - 1);
      std::uint8_t* row = out.data() + static_cast<std::size_t>(r) * width;
      for (std::int64_t c = c_first; c <= c_last; ++c) {
        const bool edge_zone = c <= lo + 2 || c >= hi - 2;
        if (!edge_zone) {
          row[c] = 1;
        } else if (inside_convex(verts, {static_cast<double>(c) + 0.5, y})) {
          row[c] = 1;
        }
      }
    }
  }
  if (poly.degenerate()) mark_vertex_pixels(verts, height, width, out);
  return out;
}

PixelMaskStack build_mask_stack(const Instance& instance, const Scene& scene,
                                std::uint32_t view_id) {
  const auto& d = scene.dims;
  PixelMaskStack stack(instance.tracking_id, d.frames, d.height, d.width);
  for (const auto& [frame, pose] : instance.poses) {
    const CameraFrame* cam = scene.camera(view_id, frame);
    if (cam == nullptr) {
      fail(ErrorCode::kValidation, "no camera for view " + std::to_string(view_id) +
                                       ", frame " + std::to_string(frame));
    }
    const auto box = corners_from_pose(instance.size, pose.center, pose.yaw);
    auto poly = hull_polygon(box, *cam);
    poly.instance_id = instance.tracking_id;
    stack.set_frame(frame, rasterize(poly, d.height, d.width));
  }
  return stack;
}

// ---- encodings -----------------------------------------------------------

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t{b[at]} | std::uint32_t{b[at + 1]} << 8 |
         std::uint32_t{b[at + 2]} << 16 | std::uint32_t{b[at + 3]} << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_mask_stack(const PixelMaskStack& stack) {
  if (stack.frames() > 0xFFFF) fail(ErrorCode::kShape, "mask stack: T exceeds 65535");
  std::vector<std::uint8_t> out{'I', 'M', 'B', 'M'};
  put_u16(out, 1);
  put_u16(out, static_cast<std::uint16_t>(stack.frames()));
  put_u32(out, stack.height());
  put_u32(out, stack.width());
  const std::size_t bits = std::size_t{stack.frames()} * stack.height() * stack.width();
  std::vector<std::uint8_t> payload((bits + 7) / 8, 0);
  std::size_t i = 0;
  for (std::uint32_t t = 0; t < stack.frames(); ++t)
    for (std::uint32_t r = 0; r < stack.height(); ++r)
      for (std::uint32_t c = 0; c < stack.width(); ++c, ++i)
        if (stack.get(t, r, c)) payload[i >> 3] |= static_cast<std::uint8_t>(1U << (i & 7));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

PixelMaskStack decode_mask_stack(std::span<const std::uint8_t> bytes, InstanceId id) {
  if (bytes.size() < 16 || bytes[0] != 'I' || bytes[1] != 'M' || bytes[2] != 'B' ||
      bytes[3] != 'M') {
    fail(ErrorCode::kParse, "mask stack: bad magic");
  }
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | bytes[5] << 8);
  if (version != 1) fail(ErrorCode::kParse, "mask stack: unsupported version");
  const std::uint32_t frames = static_cast<std::uint32_t>(bytes[6] | bytes[7] << 8);
  const std::uint32_t height = get_u32(bytes, 8);
  const std::uint32_t width = get_u32(bytes, 12);
  const std::size_t bits = std::size_t{frames} * height * width;
  if (bytes.size() != 16 + (bits + 7) / 8) {
    fail(ErrorCode::kParse, "mask stack: payload size does not match header");
  }
  PixelMaskStack stack(id, frames, height, width);
  std::size_t i = 0;
  for (std::uint32_t t = 0; t < frames; ++t)
    for (std::uint32_t r = 0; r < height; ++r)
      for (std::uint32_t c = 0; c < width; ++c, ++i)
        if ((bytes[16 + (i >> 3)] >> (i & 7)) & 1U) stack.set(t, r, c);
  return stack;
}

std::vector<std::uint8_t> encode_pgm(const PixelMaskStack& stack, std::uint32_t t) {
  const std::string header = "P5\n" + std::to_string(stack.width()) + " " +
                             std::to_string(stack.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (std::uint32_t r = 0; r < stack.height(); ++r)
    for (std::uint32_t c = 0; c < stack.width(); ++c)
      out.push_back(stack.get(t, r, c) ? 255 : 0);
  return out;
}

}  // namespace instmask
