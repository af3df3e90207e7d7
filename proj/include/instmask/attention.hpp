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
#include <span>
#include <vector>

#include "instmask/linalg.hpp"
#include "instmask/masks.hpp"

namespace instmask {

// Softmax outputs below this are snapped to exactly zero.
inline constexpr double kWeightSnap = 1e-30;

/// Projections act on row vectors: Q = X * w_q. Head h owns columns
/// [h * d_head, (h + 1) * d_head) of Q, K and V.
struct AttentionParams {
  std::size_t d_model = 32;
  std::size_t heads = 4;
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  Matrix w_o;
  double omega = 0.0;  // gate; tanh(omega) scales the fused output

  std::size_t d_head() const { return d_model / heads; }
};

// Projection weights ~ N(0, 1) / sqrt(d_model) from CounterRng(seed);
// omega starts at zero.
AttentionParams init_attention_params(std::uint64_t seed, std::size_t d_model,
                                      std::size_t heads);
void validate_attention_params(const AttentionParams& params);

// softmax(logits + mask_row) with max subtraction over unmasked entries.
// Masked entries come out exactly 0. Throws if every entry is masked.
std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const double> mask_row);

// Gradient w.r.t. the logits given dLoss/dweights.
std::vector<double> masked_softmax_backward(std::span<const double> weights,
                                            std::span<const double> grad_weights);

/// Masked multi-head self-attention over [V; G]. Returns m + n rows.
/// `weights_out`, when given, receives one (m+n) x (m+n) weight matrix per
/// head. Summation runs in increasing column index order.
Matrix sa_mask(const Matrix& visual, const Matrix& condition, const AttentionMask& mask,
               const AttentionParams& params, std::vector<Matrix>* weights_out = nullptr);

// V + tanh(omega) * sa_out[:m]. A zero gate returns V unchanged bit for bit.
Matrix gated_fuse(const Matrix& visual, const Matrix& sa_out, double omega);

}  // namespace instmask
