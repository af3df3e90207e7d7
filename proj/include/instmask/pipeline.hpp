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
#include <string>
#include <vector>

#include "instmask/geometry.hpp"
#include "instmask/latent.hpp"
#include "instmask/masks.hpp"
#include "instmask/scene.hpp"

namespace instmask {

enum class ViewMode {
  kIndependent,   // one token grid per view
  kConcatenated,  // all views stacked along the token axis
};

struct MaskOptions {
  double theta = kDefaultTheta;
  TrajectoryPolicy trajectory = TrajectoryPolicy::kForegroundOnly;
  ConditionPolicy condition = ConditionPolicy::kIdentityOnly;
  ViewMode view_mode = ViewMode::kIndependent;
  // 0 = hardware concurrency. Always capped by CONSIS_MASK_THREADS if set.
  unsigned threads = 0;
};

unsigned resolve_threads(unsigned requested);

/// Everything derived from one token grid.
struct MaskBundle {
  std::string label;                 // "view_<v>" or "concat"
  std::vector<std::uint32_t> views;  // views in token order
  // stacks[v][i] / latents[v][i]: view index v, instance i (ascending id).
  std::vector<std::vector<PixelMaskStack>> stacks;
  std::vector<std::vector<LatentMask>> latents;
  IndicatorIndex indicator;
  std::vector<InstanceId> instance_order;
  AttentionMask mask;  // sparse storage
  LossMask loss;
};

MaskBundle build_view_bundle(const Scene& scene, std::uint32_t view_id,
                             const MaskOptions& options);
MaskBundle build_concat_bundle(const Scene& scene, const MaskOptions& options);
// One bundle per view, or a single concatenated bundle, per options.view_mode.
std::vector<MaskBundle> build_bundles(const Scene& scene, const MaskOptions& options);

struct ManifestEntry {
  std::string path;  // relative to the output directory, '/' separated
  std::size_t bytes = 0;
  std::string sha256;
};

struct Manifest {
  std::vector<ManifestEntry> artifacts;
  std::string text;  // manifest.json contents
};

// Writes every artifact under out_dir plus out_dir/manifest.json.
Manifest export_masks(const Scene& scene, const MaskOptions& options,
                      const std::filesystem::path& out_dir);

}  // namespace instmask
