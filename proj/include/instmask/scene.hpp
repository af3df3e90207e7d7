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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "instmask/linalg.hpp"

namespace instmask {

using InstanceId = std::uint64_t;

/// Pinhole camera for one (view, frame). World points map to pixels through
/// x~ = K (R X + T).
struct CameraFrame {
  Mat3 intrinsics = identity3();
  Mat3 rotation = identity3();
  Vec3 translation{};
  std::uint32_t frame_index = 0;
  std::uint32_t view_id = 0;

  bool operator==(const CameraFrame&) const = default;
};

/// Box center (meters, world frame) and heading about the world z axis.
struct Pose {
  Vec3 center{};
  double yaw = 0.0;

  bool operator==(const Pose&) const = default;
};

struct Instance {
  InstanceId tracking_id = 0;
  std::string category;
  Vec3 size{1, 1, 1};  // (dx, dy, dz), all > 0
  // Frames without an entry are occluded or absent.
  std::map<std::uint32_t, Pose> poses;

  const Pose* pose_at(std::uint32_t frame) const {
    auto it = poses.find(frame);
    return it == poses.end() ? nullptr : &it->second;
  }

  bool operator==(const Instance&) const = default;
};

struct SceneDims {
  std::uint32_t frames = 1;  // T
  std::uint32_t height = 1;  // H
  std::uint32_t width = 1;   // W
  std::uint32_t f_t = 1;
  std::uint32_t f_h = 1;
  std::uint32_t f_w = 1;

  std::uint32_t latent_frames() const { return frames / f_t; }
  std::uint32_t latent_height() const { return height / f_h; }
  std::uint32_t latent_width() const { return width / f_w; }
  std::size_t token_count() const {
    return std::size_t{latent_frames()} * latent_height() * latent_width();
  }

  bool operator==(const SceneDims&) const = default;
};

struct Scene {
  SceneDims dims;
  std::vector<CameraFrame> cameras;
  std::vector<Instance> instances;

  // Distinct view ids in ascending order.
  std::vector<std::uint32_t> view_ids() const;
  const CameraFrame* camera(std::uint32_t view_id, std::uint32_t frame) const;
  // Tracking ids in ascending order.
  std::vector<InstanceId> sorted_instance_ids() const;

  bool operator==(const Scene&) const = default;
};

/// Eight box corners. Corner c has offset
/// (±dx/2, ±dy/2, ±dz/2) where bit 0 of c selects the x sign, bit 1 the y
/// sign and bit 2 the z sign (bit set = +). The offsets are rotated by yaw
/// about z and translated to the center.
struct BoxCorners3D {
  std::array<Vec3, 8> corners{};
};

BoxCorners3D corners_from_pose(const Vec3& size, const Vec3& center, double yaw);

// Throws Error(kValidation) naming the offending field.
void validate_camera(const CameraFrame& cam, const std::string& context);
void validate_scene(const Scene& scene);

enum class MotionKind { kLinear, kTurning, kOccludedGap };

const char* motion_name(MotionKind kind);
std::optional<MotionKind> parse_motion(const std::string& name);

struct GeneratorSpec {
  SceneDims dims{16, 256, 448, 4, 32, 32};
  std::uint32_t views = 1;
  std::uint32_t instance_count = 4;
  // Instance j gets motions[j % motions.size()].
  std::vector<MotionKind> motions{MotionKind::kLinear, MotionKind::kTurning};
};

/// Pure function of (seed, spec). Cameras sit 1.5 m above the ground plane;
/// view v looks along world heading 2*pi*v/views. Occluded-gap instances have
/// no pose on frames [g0, g1) with g0 = max(1, T/3), g1 = max(g0 + 1, 2T/3),
/// which needs T >= 3.
Scene generate_synthetic_scene(std::uint64_t seed, const GeneratorSpec& spec);

std::string scene_to_text(const Scene& scene);
Scene scene_from_text(const std::string& text, const std::string& source = "scene");

void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

}  // namespace instmask
