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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instmask/linalg.hpp"
#include "instmask/scene.hpp"
#include "instmask/serialize.hpp"

namespace instmask {

/// Sinusoidal feature map with frequencies 2^0 pi ... 2^(L-1) pi.
struct FourierMap {
  std::uint32_t num_frequencies = 8;

  std::size_t output_dim(std::size_t input_dim) const {
    return input_dim * 2 * num_frequencies;
  }
};

// Per component x_j: [sin(2^0 pi x_j), cos(2^0 pi x_j), ...,
// sin(2^(L-1) pi x_j), cos(2^(L-1) pi x_j)], components in order.
std::vector<double> fourier(std::span<const double> x, std::uint32_t num_frequencies);

// FNV-1a over the 8 little-endian seed bytes followed by the category bytes.
std::uint64_t category_hash(std::uint64_t seed, std::string_view category);

// Deterministic unit-norm stand-in for a text encoder: d_text standard
// normals from CounterRng(category_hash(seed, category)), then L2-normalized.
std::vector<double> pseudo_text_encode(std::string_view category, std::size_t d_text,
                                       std::uint64_t seed);

/// Two affine layers with x * sigmoid(x) in between.
///   input  = [text(d_text), fourier(size, L) (6L), fourier(id, L) (2L)]
///   hidden = silu(W1 input + b1), output = W2 hidden + b2
struct MlpParams {
  std::uint64_t seed = 0;
  std::uint32_t num_frequencies = 8;
  std::size_t d_text = 32;
  std::size_t hidden = 64;
  std::size_t d_model = 32;
  Matrix w1;  // hidden x input_dim
  std::vector<double> b1;
  Matrix w2;  // d_model x hidden
  std::vector<double> b2;

  std::size_t input_dim() const { return d_text + 8 * std::size_t{num_frequencies}; }

  bool operator==(const MlpParams&) const = default;
};

// Weights ~ N(0, 1) / sqrt(fan_in) from CounterRng(seed); biases zero.
MlpParams init_mlp_params(std::uint64_t seed, std::uint32_t num_frequencies,
                          std::size_t d_text = 32, std::size_t hidden = 64,
                          std::size_t d_model = 32);

void validate_mlp_params(const MlpParams& params);

struct IdentityEmbedding {
  InstanceId instance_id = 0;
  std::vector<double> vector;
  std::string category;
  Vec3 size{};
  double normalized_id = 0.0;
};

// The concatenated MLP input for one instance.
std::vector<double> identity_features(const Instance& inst, const MlpParams& params,
                                      const FourierMap& fmap, double id_norm);

IdentityEmbedding embed_instance(const Instance& inst, const MlpParams& params,
                                 const FourierMap& fmap, double id_norm);

// One embedding per instance, ascending tracking id; ids are divided by
// (max id + 1).
std::vector<IdentityEmbedding> build_condition_set(const Scene& scene,
                                                   const MlpParams& params);

// n x d_model matrix of the embeddings, row order preserved.
Matrix condition_tokens(std::span<const IdentityEmbedding> set);

std::string mlp_params_to_text(const MlpParams& params);
MlpParams mlp_params_from_text(const std::string& text, const std::string& source = "params");
void save_mlp_params(const MlpParams& params, const std::filesystem::path& path);
MlpParams load_mlp_params(const std::filesystem::path& path);

}  // namespace instmask
