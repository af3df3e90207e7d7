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
#include <optional>
#include <string>

#include "instmask/conditioning.hpp"
#include "instmask/pipeline.hpp"
#include "instmask/serialize.hpp"

namespace instmask {

struct DemoOptions {
  std::uint64_t seed = 7;
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::uint32_t fourier_bands = 8;
  double omega = 0.0;
  std::optional<MlpParams> params;  // otherwise init_mlp_params(seed, ...)
  std::size_t probes = 4;           // finite-difference probes per leakage kind
};

struct DemoReport {
  Json json;
  bool leak_free = false;
};

// One masked-attention layer over a scene's tokens: random visual tokens,
// identity embeddings from the conditioning MLP, the bundle's mask, then the
// gated fuse. Reports weight and finite-difference leakage probes.
DemoReport run_attention_demo(const Scene& scene, const MaskOptions& masks,
                              std::uint32_t view_id, const DemoOptions& options);

}  // namespace instmask
