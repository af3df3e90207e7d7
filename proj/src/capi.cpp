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

#include "instmask/instmask.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "instmask/checks.hpp"
#include "instmask/demo.hpp"
#include "instmask/error.hpp"
#include "instmask/pipeline.hpp"
#include "instmask/scene.hpp"

struct im_scene {
  instmask::Scene scene;
};

struct im_mask_bundle {
  instmask::MaskBundle bundle;
};

namespace {

thread_local std::string g_last_error;

im_status to_status(instmask::ErrorCode code) {
  using instmask::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return IM_ERR_INVALID_ARGUMENT;
    case ErrorCode::kValidation:
      return IM_ERR_VALIDATION;
    case ErrorCode::kParse:
      return IM_ERR_PARSE;
    case ErrorCode::kIo:
      return IM_ERR_IO;
    case ErrorCode::kShape:
      return IM_ERR_SHAPE;
    case ErrorCode::kProperty:
      return IM_ERR_PROPERTY;
  }
  return IM_ERR_INTERNAL;
}

template <typename Fn>
im_status guarded(Fn&& fn) {
  try {
    fn();
    return IM_OK;
  } catch (const instmask::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return IM_ERR_INTERNAL;
}

void require(bool cond, const char* what) {
  if (!cond) instmask::fail(instmask::ErrorCode::kInvalidArgument, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

instmask::MaskOptions to_options(const im_mask_options& o) {
  instmask::MaskOptions out;
  require(o.theta >= 0.0 && o.theta < 1.0, "theta must lie in [0, 1)");
  require(o.trajectory == IM_TRAJECTORY_FOREGROUND_ONLY || o.trajectory == IM_TRAJECTORY_STRICT,
          "unknown trajectory policy");
  require(o.condition == IM_CONDITION_IDENTITY_ONLY || o.condition == IM_CONDITION_ALL_OPEN,
          "unknown condition policy");
  out.theta = o.theta;
  out.trajectory = o.trajectory == IM_TRAJECTORY_STRICT ? instmask::TrajectoryPolicy::kStrict
                                                        : instmask::TrajectoryPolicy::kForegroundOnly;
  out.condition = o.condition == IM_CONDITION_ALL_OPEN ? instmask::ConditionPolicy::kAllOpen
                                                       : instmask::ConditionPolicy::kIdentityOnly;
  out.view_mode = o.concat_views ? instmask::ViewMode::kConcatenated
                                 : instmask::ViewMode::kIndependent;
  out.threads = o.threads;
  return out;
}

}  // namespace

extern "C" {

const char* im_version(void) { return "0.1.0"; }

const char* im_last_error(void) { return g_last_error.c_str(); }

void im_string_free(char* str) { std::free(str); }

void im_generator_options_default(im_generator_options* opts) {
  if (opts == nullptr) return;
  const instmask::GeneratorSpec spec;
  opts->frames = spec.dims.frames;
  opts->height = spec.dims.height;
  opts->width = spec.dims.width;
  opts->f_t = spec.dims.f_t;
  opts->f_h = spec.dims.f_h;
  opts->f_w = spec.dims.f_w;
  opts->views = spec.views;
  opts->instances = spec.instance_count;
  opts->occlusion = 0;
}

im_status im_scene_generate(uint64_t seed, const im_generator_options* opts, im_scene** out) {
  return guarded([&] {
    require(opts != nullptr && out != nullptr, "null argument");
    instmask::GeneratorSpec spec;
    spec.dims = {opts->frames, opts->height, opts->width, opts->f_t, opts->f_h, opts->f_w};
    spec.views = opts->views;
    spec.instance_count = opts->instances;
    if (opts->occlusion) {
      using instmask::MotionKind;
      spec.motions = {MotionKind::kOccludedGap};
      for (uint32_t j = 1; j < opts->instances; ++j) {
        spec.motions.push_back(j % 2 == 1 ? MotionKind::kLinear : MotionKind::kTurning);
      }
    }
    *out = new im_scene{instmask::generate_synthetic_scene(seed, spec)};
  });
}

im_status im_scene_load(const char* path, im_scene** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new im_scene{instmask::load_scene(path)};
  });
}

im_status im_scene_save(const im_scene* scene, const char* path) {
  return guarded([&] {
    require(scene != nullptr && path != nullptr, "null argument");
    instmask::save_scene(scene->scene, path);
  });
}

im_status im_scene_info_get(const im_scene* scene, im_scene_info* out) {
  return guarded([&] {
    require(scene != nullptr && out != nullptr, "null argument");
    const auto& d = scene->scene.dims;
    *out = im_scene_info{d.frames, d.height, d.width, d.f_t, d.f_h, d.f_w,
                         static_cast<uint32_t>(scene->scene.view_ids().size()),
                         static_cast<uint32_t>(scene->scene.instances.size()),
                         d.token_count()};
  });
}

im_status im_scene_instance_ids(const im_scene* scene, uint64_t* ids, size_t capacity,
                                size_t* count) {
  return guarded([&] {
    require(scene != nullptr && count != nullptr, "null argument");
    const auto sorted = scene->scene.sorted_instance_ids();
    *count = sorted.size();
    require(capacity >= sorted.size() && (ids != nullptr || sorted.empty()),
            "id buffer too small");
    std::copy(sorted.begin(), sorted.end(), ids);
  });
}

im_status im_scene_pose_frames(const im_scene* scene, uint64_t tracking_id, uint32_t* frames,
                               size_t capacity, size_t* count) {
  return guarded([&] {
    require(scene != nullptr && count != nullptr, "null argument");
    for (const auto& inst : scene->scene.instances) {
      if (inst.tracking_id != tracking_id) continue;
      *count = inst.poses.size();
      require(capacity >= inst.poses.size() && (frames != nullptr || inst.poses.empty()),
              "frame buffer too small");
      std::size_t i = 0;
      for (const auto& [frame, pose] : inst.poses) frames[i++] = frame;
      return;
    }
    instmask::fail(instmask::ErrorCode::kInvalidArgument,
                   "no instance with tracking id " + std::to_string(tracking_id));
  });
}

void im_scene_free(im_scene* scene) { delete scene; }

void im_mask_options_default(im_mask_options* opts) {
  if (opts == nullptr) return;
  opts->theta = instmask::kDefaultTheta;
  opts->trajectory = IM_TRAJECTORY_FOREGROUND_ONLY;
  opts->condition = IM_CONDITION_IDENTITY_ONLY;
  opts->concat_views = 0;
  opts->view_id = 0;
  opts->threads = 0;
}

im_status im_masks_build(const im_scene* scene, const im_mask_options* opts,
                         im_mask_bundle** out) {
  return guarded([&] {
    require(scene != nullptr && opts != nullptr && out != nullptr, "null argument");
    const auto options = to_options(*opts);
    auto bundle = options.view_mode == instmask::ViewMode::kConcatenated
                      ? instmask::build_concat_bundle(scene->scene, options)
                      : instmask::build_view_bundle(scene->scene, opts->view_id, options);
    *out = new im_mask_bundle{std::move(bundle)};
  });
}

void im_mask_bundle_free(im_mask_bundle* bundle) { delete bundle; }

im_status im_mask_bundle_dims(const im_mask_bundle* bundle, size_t* m, size_t* n) {
  return guarded([&] {
    require(bundle != nullptr && m != nullptr && n != nullptr, "null argument");
    *m = bundle->bundle.mask.m();
    *n = bundle->bundle.mask.n();
  });
}

im_status im_mask_bundle_instance_order(const im_mask_bundle* bundle, uint64_t* ids,
                                        size_t capacity) {
  return guarded([&] {
    require(bundle != nullptr, "null argument");
    const auto& order = bundle->bundle.instance_order;
    require(capacity >= order.size() && (ids != nullptr || order.empty()),
            "id buffer too small");
    std::copy(order.begin(), order.end(), ids);
  });
}

im_status im_mask_bundle_dense(const im_mask_bundle* bundle, double* out, size_t capacity) {
  return guarded([&] {
    require(bundle != nullptr, "null argument");
    const auto& mask = bundle->bundle.mask;
    const std::size_t s = mask.size();
    require(capacity >= s * s && (out != nullptr || s == 0), "dense buffer too small");
    for (std::size_t r = 0; r < s; ++r) mask.fill_row(r, {out + r * s, s});
  });
}

im_status im_mask_bundle_loss_mask(const im_mask_bundle* bundle, uint8_t* out,
                                   size_t capacity) {
  return guarded([&] {
    require(bundle != nullptr, "null argument");
    const auto& w = bundle->bundle.loss.weights;
    require(capacity >= w.size() && (out != nullptr || w.empty()), "loss buffer too small");
    std::copy(w.begin(), w.end(), out);
  });
}

im_status im_mask_bundle_indicator(const im_mask_bundle* bundle, size_t token, uint64_t* ids,
                                   size_t capacity, size_t* count) {
  return guarded([&] {
    require(bundle != nullptr && count != nullptr, "null argument");
    const auto& idx = bundle->bundle.indicator;
    require(token < idx.token_count(), "token index out of range");
    const auto& set = idx.at(token);
    *count = set.size();
    require(capacity >= set.size() && (ids != nullptr || set.empty()), "id buffer too small");
    std::copy(set.begin(), set.end(), ids);
  });
}

im_status im_mask_bundle_indicator_json(const im_mask_bundle* bundle, char** out) {
  return guarded([&] {
    require(bundle != nullptr && out != nullptr, "null argument");
    *out = copy_string(instmask::dump_json(instmask::indicator_to_json(bundle->bundle.indicator)));
  });
}

im_status im_mask_bundle_sparse_json(const im_mask_bundle* bundle, char** out) {
  return guarded([&] {
    require(bundle != nullptr && out != nullptr, "null argument");
    *out = copy_string(instmask::mask_to_sparse_json(bundle->bundle.mask).dump() + "\n");
  });
}

im_status im_masks_export(const im_scene* scene, const im_mask_options* opts,
                          const char* out_dir, char** manifest_json) {
  return guarded([&] {
    require(scene != nullptr && opts != nullptr && out_dir != nullptr, "null argument");
    const auto manifest = instmask::export_masks(scene->scene, to_options(*opts), out_dir);
    if (manifest_json != nullptr) *manifest_json = copy_string(manifest.text);
  });
}

im_status im_indicator_subset(const char* path_a, const char* path_b, int* is_subset) {
  return guarded([&] {
    require(path_a != nullptr && path_b != nullptr && is_subset != nullptr, "null argument");
    auto load = [](const char* path) {
      return instmask::indicator_from_json(
          instmask::parse_json(instmask::read_text_file(path), path), path);
    };
    const auto a = load(path_a);
    const auto b = load(path_b);
    if (a.token_count() != b.token_count()) {
      instmask::fail(instmask::ErrorCode::kShape, "indicator files cover different token grids");
    }
    *is_subset = instmask::indicator_subset(a, b) ? 1 : 0;
  });
}

void im_check_options_default(im_check_options* opts) {
  if (opts == nullptr) return;
  opts->suites = nullptr;
  opts->seed = 7;
  opts->alpha = 0.5;
  opts->tamper_path = nullptr;
}

im_status im_run_checks(const im_check_options* opts, char** report_json, int* all_passed) {
  return guarded([&] {
    require(opts != nullptr && report_json != nullptr && all_passed != nullptr, "null argument");
    instmask::CheckOptions options;
    options.seed = opts->seed;
    options.alpha = opts->alpha;
    if (opts->suites != nullptr) {
      std::stringstream ss(opts->suites);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) options.suites.push_back(item);
      }
    }
    if (opts->tamper_path != nullptr) options.tamper_path = opts->tamper_path;
    const auto report = instmask::run_checks(options);
    *report_json = copy_string(instmask::dump_json(report.to_json()));
    *all_passed = report.all_passed() ? 1 : 0;
  });
}

void im_demo_options_default(im_demo_options* opts) {
  if (opts == nullptr) return;
  const instmask::DemoOptions d;
  opts->seed = d.seed;
  opts->d_model = static_cast<uint32_t>(d.d_model);
  opts->heads = static_cast<uint32_t>(d.heads);
  opts->fourier_bands = d.fourier_bands;
  opts->omega = d.omega;
  opts->params_path = nullptr;
}

im_status im_demo_attention(const im_scene* scene, const im_mask_options* masks,
                            const im_demo_options* opts, char** report_json, int* leak_free) {
  return guarded([&] {
    require(scene != nullptr && masks != nullptr && opts != nullptr && report_json != nullptr &&
                leak_free != nullptr,
            "null argument");
    instmask::DemoOptions d;
    d.seed = opts->seed;
    d.d_model = opts->d_model;
    d.heads = opts->heads;
    d.fourier_bands = opts->fourier_bands;
    d.omega = opts->omega;
    if (opts->params_path != nullptr) {
      d.params = instmask::load_mlp_params(opts->params_path);
      d.fourier_bands = d.params->num_frequencies;
    }
    const auto report =
        instmask::run_attention_demo(scene->scene, to_options(*masks), masks->view_id, d);
    *report_json = copy_string(instmask::dump_json(report.json));
    *leak_free = report.leak_free ? 1 : 0;
  });
}

im_status im_params_generate(uint64_t seed, uint32_t fourier_bands, uint32_t d_model,
                             const char* path) {
  return guarded([&] {
    require(path != nullptr, "null argument");
    instmask::save_mlp_params(instmask::init_mlp_params(seed, fourier_bands, 32, 64, d_model),
                              path);
  });
}

}  // extern "C"
