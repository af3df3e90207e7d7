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

#include "instmask/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include "instmask/error.hpp"
#include "instmask/rng.hpp"
#include "instmask/serialize.hpp"

namespace instmask {

std::vector<std::uint32_t> Scene::view_ids() const {
  std::set<std::uint32_t> ids;
  for (const auto& cam : cameras) ids.insert(cam.view_id);
  return {ids.begin(), ids.end()};
}

const CameraFrame* Scene::camera(std::uint32_t view_id, std::uint32_t frame) const {
  for (const auto& cam : cameras) {
    if (cam.view_id == view_id && cam.frame_index == frame) return &cam;
  }
  return nullptr;
}

std::vector<InstanceId> Scene::sorted_instance_ids() const {
  std::vector<InstanceId> ids;
  ids.reserve(instances.size());
  for (const auto& inst : instances) ids.push_back(inst.tracking_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

BoxCorners3D corners_from_pose(const Vec3& size, const Vec3& center, double yaw) {
  for (int a = 0; a < 3; ++a) {
    if (!(size[a] > 0.0) || !std::isfinite(size[a])) {
      fail(ErrorCode::kValidation,
           "box size component " + std::to_string(a) + " must be > 0 (got " +
               format_real(std::isfinite(size[a]) ? size[a] : 0.0) + ")");
    }
  }
  const Mat3 rot = rotation_z(yaw);
  BoxCorners3D box;
  for (int c = 0; c < 8; ++c) {
    const Vec3 offset{(c & 1 ? 0.5 : -0.5) * size[0],
                      (c & 2 ? 0.5 : -0.5) * size[1],
                      (c & 4 ? 0.5 : -0.5) * size[2]};
    box.corners[c] = rot * offset + center;
  }
  return box;
}

namespace {

bool finite3(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

void validate_dims(const SceneDims& d) {
  const std::pair<const char*, std::uint32_t> fields[] = {
      {"T", d.frames}, {"H", d.height}, {"W", d.width},
      {"f_t", d.f_t},  {"f_h", d.f_h},  {"f_w", d.f_w}};
  for (const auto& [name, value] : fields) {
    if (value < 1) {
      fail(ErrorCode::kValidation, std::string("dims.") + name + " must be >= 1");
    }
  }
  auto check = [](std::uint32_t total, std::uint32_t factor, const char* total_name,
                  const char* factor_name) {
    if (total % factor != 0) {
      fail(ErrorCode::kValidation,
           std::string("dims.") + total_name + " (" + std::to_string(total) +
               ") is not divisible by dims." + factor_name + " (" +
               std::to_string(factor) + ")");
    }
  };
  check(d.frames, d.f_t, "T", "f_t");
  check(d.height, d.f_h, "H", "f_h");
  check(d.width, d.f_w, "W", "f_w");
}

}  // namespace

void validate_camera(const CameraFrame& cam, const std::string& context) {
  for (int r = 0; r < 3; ++r) {
    if (!finite3(cam.intrinsics[r]) || !finite3(cam.rotation[r])) {
      fail(ErrorCode::kValidation, context + ": non-finite matrix entry");
    }
  }
  if (!finite3(cam.translation)) {
    fail(ErrorCode::kValidation, context + ".T: non-finite entry");
  }
  const Mat3 rtr = transpose(cam.rotation) * cam.rotation;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const double expected = r == c ? 1.0 : 0.0;
      if (std::abs(rtr[r][c] - expected) > 1e-9) {
        fail(ErrorCode::kValidation, context + ".R is not orthonormal (R^T R deviates by " +
                                         format_real(std::abs(rtr[r][c] - expected)) + ")");
      }
    }
  }
  const Mat3& k = cam.intrinsics;
  if (!(k[0][0] > 0.0) || !(k[1][1] > 0.0)) {
    fail(ErrorCode::kValidation, context + ".K: focal entries K[0][0], K[1][1] must be > 0");
  }
  if (k[2][0] != 0.0 || k[2][1] != 0.0 || k[2][2] != 1.0) {
    fail(ErrorCode::kValidation, context + ".K: last row must be (0, 0, 1)");
  }
}

void validate_scene(const Scene& scene) {
  validate_dims(scene.dims);
  const auto frames = scene.dims.frames;

  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    const auto& cam = scene.cameras[i];
    const std::string ctx = "cameras[" + std::to_string(i) + "]";
    if (cam.frame_index >= frames) {
      fail(ErrorCode::kValidation, ctx + ".frame_index " + std::to_string(cam.frame_index) +
                                       " is outside [0, T)");
    }
    if (!seen.emplace(cam.view_id, cam.frame_index).second) {
      fail(ErrorCode::kValidation, ctx + ": duplicate camera for view " +
                                       std::to_string(cam.view_id) + ", frame " +
                                       std::to_string(cam.frame_index));
    }
    validate_camera(cam, ctx);
  }
  if (scene.cameras.empty()) {
    fail(ErrorCode::kValidation, "cameras: at least one view is required");
  }
  for (auto view : scene.view_ids()) {
    for (std::uint32_t t = 0; t < frames; ++t) {
      if (!seen.contains({view, t})) {
        fail(ErrorCode::kValidation, "cameras: view " + std::to_string(view) +
                                         " has no camera for frame " + std::to_string(t));
      }
    }
  }

  std::set<InstanceId> ids;
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const auto& inst = scene.instances[i];
    const std::string ctx = "instances[" + std::to_string(i) + "]";
    if (!ids.insert(inst.tracking_id).second) {
      fail(ErrorCode::kValidation,
           ctx + ": duplicate tracking_id " + std::to_string(inst.tracking_id));
    }
    if (inst.category.empty()) {
      fail(ErrorCode::kValidation, ctx + ".category must be non-empty");
    }
    for (int a = 0; a < 3; ++a) {
      if (!(inst.size[a] > 0.0) || !std::isfinite(inst.size[a])) {
        fail(ErrorCode::kValidation,
             ctx + ".size[" + std::to_string(a) + "] must be a finite value > 0");
      }
    }
    for (const auto& [frame, pose] : inst.poses) {
      if (frame >= frames) {
        fail(ErrorCode::kValidation, ctx + ".poses: frame " + std::to_string(frame) +
                                         " is outside [0, T)");
      }
      if (!finite3(pose.center) || !std::isfinite(pose.yaw)) {
        fail(ErrorCode::kValidation, ctx + ".poses: non-finite pose at frame " +
                                         std::to_string(frame));
      }
    }
  }
}

const char* motion_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::kLinear:
      return "linear";
    case MotionKind::kTurning:
      return "turning";
    case MotionKind::kOccludedGap:
      return "occluded-gap";
  }
  return "?";
}

std::optional<MotionKind> parse_motion(const std::string& name) {
  for (auto kind : {MotionKind::kLinear, MotionKind::kTurning, MotionKind::kOccludedGap}) {
    if (name == motion_name(kind)) return kind;
  }
  return std::nullopt;
}

namespace {

constexpr double kCameraHeight = 1.5;

struct CategoryPrior {
  const char* name;
  Vec3 size;
};

constexpr CategoryPrior kCategories[] = {
    {"car", {4.5, 1.9, 1.6}},        {"truck", {7.5, 2.5, 3.0}},
    {"bus", {11.0, 2.9, 3.3}},       {"pedestrian", {0.7, 0.7, 1.8}},
    {"bicycle", {1.8, 0.6, 1.4}},
};

// Camera axes in the world frame: x right, y down, z forward.
CameraFrame make_camera(const SceneDims& dims, std::uint32_t view, std::uint32_t views,
                        std::uint32_t frame) {
  const double heading = 2.0 * std::numbers::pi * view / views;
  const Vec3 forward{std::cos(heading), std::sin(heading), 0.0};
  const Vec3 right{std::sin(heading), -std::cos(heading), 0.0};
  const Vec3 down{0.0, 0.0, -1.0};
  CameraFrame cam;
  cam.rotation = {right, down, forward};
  const Vec3 center{0.0, 0.0, kCameraHeight};
  const Vec3 rc = cam.rotation * center;
  cam.translation = {-rc[0], -rc[1], -rc[2]};
  const double focal = 0.5 * dims.width;
  cam.intrinsics = {{{focal, 0.0, 0.5 * dims.width},
                     {0.0, focal, 0.5 * dims.height},
                     {0.0, 0.0, 1.0}}};
  cam.frame_index = frame;
  cam.view_id = view;
  return cam;
}

}  // namespace

Scene generate_synthetic_scene(std::uint64_t seed, const GeneratorSpec& spec) {
  validate_dims(spec.dims);
  if (spec.views < 1) fail(ErrorCode::kValidation, "generator: views must be >= 1");
  if (spec.instance_count > 0 && spec.motions.empty()) {
    fail(ErrorCode::kValidation, "generator: motions must be non-empty");
  }
  const std::uint32_t frames = spec.dims.frames;
  const bool wants_gap =
      spec.instance_count > 0 &&
      std::find(spec.motions.begin(), spec.motions.end(), MotionKind::kOccludedGap) !=
          spec.motions.end();
  if (wants_gap && frames < 3) {
    fail(ErrorCode::kValidation, "generator: occluded-gap motion needs T >= 3 (got T=" +
                                     std::to_string(frames) + ")");
  }
  if (spec.instance_count > 999) {
    fail(ErrorCode::kValidation, "generator: at most 999 instances");
  }

  Scene scene;
  scene.dims = spec.dims;
  for (std::uint32_t v = 0; v < spec.views; ++v) {
    for (std::uint32_t t = 0; t < frames; ++t) {
      scene.cameras.push_back(make_camera(spec.dims, v, spec.views, t));
    }
  }

  CounterRng rng(seed);
  std::set<InstanceId> used;
  const std::uint32_t gap_begin = std::max<std::uint32_t>(1, frames / 3);
  const std::uint32_t gap_end =
      std::min(frames - 1, std::max(gap_begin + 1, 2 * frames / 3));

  for (std::uint32_t j = 0; j < spec.instance_count; ++j) {
    CounterRng local = rng.split(j);
    Instance inst;
    do {
      inst.tracking_id = 1 + local.next_u64() % 999;
    } while (!used.insert(inst.tracking_id).second);

    const auto& prior = kCategories[local.next_u64() % std::size(kCategories)];
    inst.category = prior.name;
    for (int a = 0; a < 3; ++a) {
      inst.size[a] = prior.size[a] * (0.9 + 0.2 * local.uniform());
    }

    const std::uint32_t view = j % spec.views;
    const double heading = 2.0 * std::numbers::pi * view / spec.views;
    const double distance = 5.0 + 9.0 * local.uniform();
    const double lateral = -4.0 + 8.0 * local.uniform();
    Vec3 center{distance * std::cos(heading) + lateral * std::sin(heading),
                distance * std::sin(heading) - lateral * std::cos(heading),
                0.5 * inst.size[2]};
    double yaw = heading + (local.uniform() < 0.5 ? 0.5 : -0.5) * std::numbers::pi +
                 0.3 * (local.uniform() - 0.5);
    const double speed = 0.1 + 0.4 * local.uniform();
    const MotionKind motion = spec.motions[j % spec.motions.size()];
    const double turn_rate =
        motion == MotionKind::kTurning ? (local.uniform() < 0.5 ? 1.0 : -1.0) *
                                             (0.05 + 0.1 * local.uniform())
                                       : 0.0;

    for (std::uint32_t t = 0; t < frames; ++t) {
      const bool hidden =
          motion == MotionKind::kOccludedGap && t >= gap_begin && t < gap_end;
      if (!hidden) inst.poses[t] = Pose{center, yaw};
      center[0] += speed * std::cos(yaw);
      center[1] += speed * std::sin(yaw);
      yaw += turn_rate;
    }
    scene.instances.push_back(std::move(inst));
  }
  validate_scene(scene);
  return scene;
}

// ---- serialization -------------------------------------------------------

namespace {

Json vec_to_json(const Vec3& v) {
  return Json::array({real_to_json(v[0]), real_to_json(v[1]), real_to_json(v[2])});
}

Json mat_to_json(const Mat3& m) {
  return Json::array({vec_to_json(m[0]), vec_to_json(m[1]), vec_to_json(m[2])});
}

Vec3 vec_from_json(const Json& node, const std::string& ctx) {
  if (!node.is_array() || node.size() != 3) {
    fail(ErrorCode::kParse, ctx + ": expected an array of 3 reals");
  }
  Vec3 v{};
  for (std::size_t i = 0; i < 3; ++i) {
    v[i] = real_from_json(node[i], ctx + "[" + std::to_string(i) + "]");
  }
  return v;
}

Mat3 mat_from_json(const Json& node, const std::string& ctx) {
  if (!node.is_array() || node.size() != 3) {
    fail(ErrorCode::kParse, ctx + ": expected a 3x3 array");
  }
  Mat3 m{};
  for (std::size_t r = 0; r < 3; ++r) {
    m[r] = vec_from_json(node[r], ctx + "[" + std::to_string(r) + "]");
  }
  return m;
}

std::uint32_t u32_from_json(const Json& node, const std::string& ctx) {
  const auto v = uint_from_json(node, ctx);
  if (v > 0xFFFFFFFFULL) fail(ErrorCode::kParse, ctx + ": value too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string scene_to_text(const Scene& scene) {
  Json doc;
  doc["format"] = "instmask-scene";
  doc["version"] = 1;
  const auto& d = scene.dims;
  doc["dims"] = {{"T", d.frames}, {"H", d.height}, {"W", d.width},
                 {"f_t", d.f_t},  {"f_h", d.f_h},  {"f_w", d.f_w}};
  Json cams = Json::array();
  for (const auto& cam : scene.cameras) {
    cams.push_back({{"view_id", cam.view_id},
                    {"frame_index", cam.frame_index},
                    {"K", mat_to_json(cam.intrinsics)},
                    {"R", mat_to_json(cam.rotation)},
                    {"T", vec_to_json(cam.translation)}});
  }
  doc["cameras"] = std::move(cams);
  Json insts = Json::array();
  for (const auto& inst : scene.instances) {
    Json poses = Json::array();
    for (const auto& [frame, pose] : inst.poses) {
      poses.push_back({{"frame", frame},
                       {"center", vec_to_json(pose.center)},
                       {"yaw", real_to_json(pose.yaw)}});
    }
    insts.push_back({{"tracking_id", inst.tracking_id},
                     {"category", inst.category},
                     {"size", vec_to_json(inst.size)},
                     {"poses", std::move(poses)}});
  }
  doc["instances"] = std::move(insts);
  return dump_json(doc);
}

Scene scene_from_text(const std::string& text, const std::string& source) {
  const Json doc = parse_json(text, source);
  if (!doc.is_object()) fail(ErrorCode::kParse, source + ": top level must be an object");
  if (auto it = doc.find("format"); it != doc.end() && *it != "instmask-scene") {
    fail(ErrorCode::kParse, source + ": format must be \"instmask-scene\"");
  }
  Scene scene;
  const Json& dims = require_key(doc, "dims", source);
  const std::string dctx = source + ": dims";
  scene.dims.frames = u32_from_json(require_key(dims, "T", dctx), dctx + ".T");
  scene.dims.height = u32_from_json(require_key(dims, "H", dctx), dctx + ".H");
  scene.dims.width = u32_from_json(require_key(dims, "W", dctx), dctx + ".W");
  scene.dims.f_t = u32_from_json(require_key(dims, "f_t", dctx), dctx + ".f_t");
  scene.dims.f_h = u32_from_json(require_key(dims, "f_h", dctx), dctx + ".f_h");
  scene.dims.f_w = u32_from_json(require_key(dims, "f_w", dctx), dctx + ".f_w");

  const Json& cams = require_key(doc, "cameras", source);
  if (!cams.is_array()) fail(ErrorCode::kParse, source + ": cameras must be an array");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string ctx = source + ": cameras[" + std::to_string(i) + "]";
    const Json& c = cams[i];
    CameraFrame cam;
    cam.view_id = u32_from_json(require_key(c, "view_id", ctx), ctx + ".view_id");
    cam.frame_index =
        u32_from_json(require_key(c, "frame_index", ctx), ctx + ".frame_index");
    cam.intrinsics = mat_from_json(require_key(c, "K", ctx), ctx + ".K");
    cam.rotation = mat_from_json(require_key(c, "R", ctx), ctx + ".R");
    cam.translation = vec_from_json(require_key(c, "T", ctx), ctx + ".T");
    scene.cameras.push_back(cam);
  }

  const Json& insts = require_key(doc, "instances", source);
  if (!insts.is_array()) fail(ErrorCode::kParse, source + ": instances must be an array");
  for (std::size_t i = 0; i < insts.size(); ++i) {
    const std::string ctx = source + ": instances[" + std::to_string(i) + "]";
    const Json& n = insts[i];
    Instance inst;
    inst.tracking_id = uint_from_json(require_key(n, "tracking_id", ctx), ctx + ".tracking_id");
    const Json& cat = require_key(n, "category", ctx);
    if (!cat.is_string()) fail(ErrorCode::kParse, ctx + ".category must be a string");
    inst.category = cat.get<std::string>();
    inst.size = vec_from_json(require_key(n, "size", ctx), ctx + ".size");
    const Json& poses = require_key(n, "poses", ctx);
    if (!poses.is_array()) fail(ErrorCode::kParse, ctx + ".poses must be an array");
    for (std::size_t p = 0; p < poses.size(); ++p) {
      const std::string pctx = ctx + ".poses[" + std::to_string(p) + "]";
      const auto frame = u32_from_json(require_key(poses[p], "frame", pctx), pctx + ".frame");
      Pose pose{vec_from_json(require_key(poses[p], "center", pctx), pctx + ".center"),
                real_from_json(require_key(poses[p], "yaw", pctx), pctx + ".yaw")};
      if (!inst.poses.emplace(frame, pose).second) {
        fail(ErrorCode::kParse, pctx + ": duplicate pose for frame " + std::to_string(frame));
      }
    }
    scene.instances.push_back(std::move(inst));
  }

  try {
    validate_scene(scene);
  } catch (const Error& e) {
    fail(e.code(), source + ": " + e.what());
  }
  return scene;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  validate_scene(scene);
  write_text(path, scene_to_text(scene));
}

Scene load_scene(const std::filesystem::path& path) {
  return scene_from_text(read_text_file(path), path.string());
}

}  // namespace instmask
