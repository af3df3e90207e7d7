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

/* C interface to libinstmask.
 *
 * Objects are opaque handles created by *_generate / *_load / *_build and
 * released with the matching *_free. Every fallible call returns an
 * im_status; on failure im_last_error() holds a description that stays valid
 * until the next failing call on the same thread. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * im_string_free.
 *
 * Handles are immutable after creation and may be shared across threads.
 */
#ifndef INSTMASK_INSTMASK_H_
#define INSTMASK_INSTMASK_H_

#include <stddef.h>
#include <stdint.h>

#if defined(IM_BUILDING_LIBRARY)
#define IM_API __attribute__((visibility("default")))
#else
#define IM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum im_status {
  IM_OK = 0,
  IM_ERR_INVALID_ARGUMENT = 1,
  IM_ERR_VALIDATION = 2,
  IM_ERR_PARSE = 3,
  IM_ERR_IO = 4,
  IM_ERR_SHAPE = 5,
  IM_ERR_PROPERTY = 6,
  IM_ERR_INTERNAL = 7
} im_status;

typedef enum im_trajectory_policy {
  IM_TRAJECTORY_FOREGROUND_ONLY = 0,
  IM_TRAJECTORY_STRICT = 1
} im_trajectory_policy;

typedef enum im_condition_policy {
  IM_CONDITION_IDENTITY_ONLY = 0,
  IM_CONDITION_ALL_OPEN = 1
} im_condition_policy;

typedef struct im_scene im_scene;
typedef struct im_mask_bundle im_mask_bundle;

IM_API const char* im_version(void);
IM_API const char* im_last_error(void);
IM_API void im_string_free(char* str);

/* ---- scenes ------------------------------------------------------------ */

typedef struct im_generator_options {
  uint32_t frames, height, width;
  uint32_t f_t, f_h, f_w;
  uint32_t views;
  uint32_t instances;
  /* Nonzero: the first instance follows the occluded-gap motion. */
  int occlusion;
} im_generator_options;

typedef struct im_scene_info {
  uint32_t frames, height, width;
  uint32_t f_t, f_h, f_w;
  uint32_t views;
  uint32_t instances;
  size_t tokens_per_view;
} im_scene_info;

/* Defaults: 16x256x448 frames, 4x32x32 compression, 1 view, 4 instances. */
IM_API void im_generator_options_default(im_generator_options* opts);
IM_API im_status im_scene_generate(uint64_t seed, const im_generator_options* opts,
                                   im_scene** out);
IM_API im_status im_scene_load(const char* path, im_scene** out);
IM_API im_status im_scene_save(const im_scene* scene, const char* path);
IM_API im_status im_scene_info_get(const im_scene* scene, im_scene_info* out);
/* Ascending tracking ids; *count receives the instance count even when
 * capacity is too small (then IM_ERR_INVALID_ARGUMENT). */
IM_API im_status im_scene_instance_ids(const im_scene* scene, uint64_t* ids,
                                       size_t capacity, size_t* count);
/* Frames of one instance that carry a pose, ascending. */
IM_API im_status im_scene_pose_frames(const im_scene* scene, uint64_t tracking_id,
                                      uint32_t* frames, size_t capacity, size_t* count);
IM_API void im_scene_free(im_scene* scene);

/* ---- masks ------------------------------------------------------------- */

typedef struct im_mask_options {
  double theta;                    /* latent binarization threshold, [0, 1) */
  im_trajectory_policy trajectory; /* default foreground-only */
  im_condition_policy condition;   /* default identity-only */
  int concat_views;                /* nonzero: stack all views on one grid */
  uint32_t view_id;                /* grid to build when concat_views == 0 */
  uint32_t threads;                /* 0 = hardware; capped by CONSIS_MASK_THREADS */
} im_mask_options;

IM_API void im_mask_options_default(im_mask_options* opts);

IM_API im_status im_masks_build(const im_scene* scene, const im_mask_options* opts,
                                im_mask_bundle** out);
IM_API void im_mask_bundle_free(im_mask_bundle* bundle);

/* m visual tokens, n condition tokens. */
IM_API im_status im_mask_bundle_dims(const im_mask_bundle* bundle, size_t* m, size_t* n);
/* Condition token order (ascending tracking ids), n entries. */
IM_API im_status im_mask_bundle_instance_order(const im_mask_bundle* bundle, uint64_t* ids,
                                               size_t capacity);
/* Additive (m+n)^2 row-major mask: 0.0 or the most negative finite double. */
IM_API im_status im_mask_bundle_dense(const im_mask_bundle* bundle, double* out,
                                      size_t capacity);
/* m bytes, 1 where at least one instance covers the token. */
IM_API im_status im_mask_bundle_loss_mask(const im_mask_bundle* bundle, uint8_t* out,
                                          size_t capacity);
/* I(v_k) for one token, ascending ids. */
IM_API im_status im_mask_bundle_indicator(const im_mask_bundle* bundle, size_t token,
                                          uint64_t* ids, size_t capacity, size_t* count);
/* Serialized artifacts (same text as the exported files). */
IM_API im_status im_mask_bundle_indicator_json(const im_mask_bundle* bundle, char** out);
IM_API im_status im_mask_bundle_sparse_json(const im_mask_bundle* bundle, char** out);

/* Writes every artifact plus manifest.json under out_dir. When concat_views
 * is zero all views are exported (view_id is ignored). *manifest_json, if
 * non-null, receives the manifest text. */
IM_API im_status im_masks_export(const im_scene* scene, const im_mask_options* opts,
                                 const char* out_dir, char** manifest_json);

/* *is_subset = 1 iff every I(v_k) in indicator file a is contained in the
 * corresponding set of indicator file b. */
IM_API im_status im_indicator_subset(const char* path_a, const char* path_b, int* is_subset);

/* ---- checks and demos -------------------------------------------------- */

typedef struct im_check_options {
  const char* suites; /* comma-separated; NULL or "" = all */
  uint64_t seed;
  double alpha;
  const char* tamper_path; /* NULL = none */
} im_check_options;

IM_API void im_check_options_default(im_check_options* opts);
/* Runs the oracle suites. *report_json receives the report; *all_passed is
 * 1 iff every check passed. */
IM_API im_status im_run_checks(const im_check_options* opts, char** report_json,
                               int* all_passed);

typedef struct im_demo_options {
  uint64_t seed;
  uint32_t d_model;
  uint32_t heads;
  uint32_t fourier_bands;
  double omega;
  const char* params_path; /* conditioning MLP params; NULL = from seed */
} im_demo_options;

IM_API void im_demo_options_default(im_demo_options* opts);
/* Runs instance-masked attention on the scene (first view, foreground-only
 * masks) and reports leakage sensitivities. *leak_free is 1 iff all probed
 * sensitivities are below 1e-6 and masked weights are exactly zero. */
IM_API im_status im_demo_attention(const im_scene* scene, const im_mask_options* masks,
                                   const im_demo_options* opts, char** report_json,
                                   int* leak_free);

/* Writes freshly initialized conditioning MLP params. */
IM_API im_status im_params_generate(uint64_t seed, uint32_t fourier_bands, uint32_t d_model,
                                    const char* path);

#ifdef __cplusplus
}
#endif

#endif /* INSTMASK_INSTMASK_H_ */
