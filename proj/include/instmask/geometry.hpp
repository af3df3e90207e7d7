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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "instmask/linalg.hpp"
#include "instmask/scene.hpp"

namespace instmask {

// Points with camera-space depth at or below this (meters) are behind the
// camera for projection purposes.
inline constexpr double kNearPlane = 1e-3;

struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;
};

// x~ = K (R X + T), returns (x~/z~, y~/z~, z~). nullopt when z~ <= kNearPlane.
std::optional<ProjectedPoint> project_corner(const Vec3& world, const CameraFrame& cam);

// Camera-space points of the box clipped to z >= kNearPlane: corners in front
// of the plane plus the plane intersections of edges that cross it. Empty when
// the whole box is behind the camera.
std::vector<Vec3> clip_box_to_near_plane(const BoxCorners3D& box, const CameraFrame& cam);

struct ProjectedPolygon {
  // Counter-clockwise in (x, y) pixel coordinates, no repeated first vertex.
  std::vector<Vec2> vertices;
  std::uint32_t frame_index = 0;
  InstanceId instance_id = 0;

  bool empty() const { return vertices.empty(); }
  // Two or fewer vertices, or area below one square pixel.
  bool degenerate() const;
  double area() const;
};

// Andrew's monotone chain. Collinear and duplicate points are dropped, so a
// collinear input yields at most two vertices.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

ProjectedPolygon hull_polygon(const BoxCorners3D& box, const CameraFrame& cam);

/// Bit-packed binary occupancy over T x H x W, flattened (t, row, col).
class PixelMaskStack {
 public:
  PixelMaskStack() = default;
  PixelMaskStack(InstanceId id, std::uint32_t frames, std::uint32_t height,
                 std::uint32_t width);

  InstanceId instance_id() const { return instance_id_; }
  std::uint32_t frames() const { return frames_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }

  bool get(std::uint32_t t, std::uint32_t row, std::uint32_t col) const {
    const std::size_t i = index(t, row, col);
    return (words_[i >> 6] >> (i & 63)) & 1U;
  }
  void set(std::uint32_t t, std::uint32_t row, std::uint32_t col, bool on = true) {
    const std::size_t i = index(t, row, col);
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (on) {
      words_[i >> 6] |= bit;
    } else {
      words_[i >> 6] &= ~bit;
    }
  }

  std::size_t count_frame(std::uint32_t t) const;
  std::size_t count() const;

  // Overwrites frame t with a row-major H x W byte image (nonzero = set).
  void set_frame(std::uint32_t t, std::span<const std::uint8_t> pixels);
  std::vector<std::uint8_t> frame(std::uint32_t t) const;

  bool operator==(const PixelMaskStack&) const = default;

 private:
  std::size_t index(std::uint32_t t, std::uint32_t row, std::uint32_t col) const {
    return (std::size_t{t} * height_ + row) * width_ + col;
  }

  InstanceId instance_id_ = 0;
  std::uint32_t frames_ = 0;
  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

// Row-major H x W bytes (0/1). Pixel (r, c) is set iff its center
// (c + 0.5, r + 0.5) lies inside or on the polygon. Degenerate polygons also
// set every in-image pixel that contains one of their vertices.
std::vector<std::uint8_t> rasterize(const ProjectedPolygon& poly, std::uint32_t height,
                                    std::uint32_t width);

PixelMaskStack build_mask_stack(const Instance& instance, const Scene& scene,
                                std::uint32_t view_id);

// Binary stack file: 16-byte little-endian header
//   magic "IMBM" | u16 version (1) | u16 T | u32 H | u32 W
// followed by ceil(T*H*W / 8) bytes, bit i of the flattened (t, row, col)
// order stored in byte i/8 at bit position i%8.
std::vector<std::uint8_t> encode_mask_stack(const PixelMaskStack& stack);
PixelMaskStack decode_mask_stack(std::span<const std::uint8_t> bytes, InstanceId id);

// Binary PGM (P5, maxval 255) of one frame.
std::vector<std::uint8_t> encode_pgm(const PixelMaskStack& stack, std::uint32_t t);

}  // namespace instmask
