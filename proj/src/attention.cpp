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

#include "instmask/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "instmask/error.hpp"
#include "instmask/rng.hpp"

namespace instmask {

AttentionParams init_attention_params(std::uint64_t seed, std::size_t d_model,
                                      std::size_t heads) {
  if (heads == 0 || d_model == 0 || d_model % heads != 0) {
    fail(ErrorCode::kInvalidArgument, "attention: d_model (" + std::to_string(d_model) +
                                          ") must be a positive multiple of heads (" +
                                          std::to_string(heads) + ")");
  }
  AttentionParams p;
  p.d_model = d_model;
  p.heads = heads;
  CounterRng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_model));
  for (Matrix* w : {&p.w_q, &p.w_k, &p.w_v, &p.w_o}) {
    *w = Matrix(d_model, d_model);
    for (auto& x : w->data()) x = scale * rng.normal();
  }
  return p;
}

void validate_attention_params(const AttentionParams& p) {
  if (p.heads == 0 || p.d_model % p.heads != 0) {
    fail(ErrorCode::kShape, "attention: d_model must be divisible by the head count");
  }
  for (const Matrix* w : {&p.w_q, &p.w_k, &p.w_v, &p.w_o}) {
    if (w->rows() != p.d_model || w->cols() != p.d_model) {
      fail(ErrorCode::kShape, "attention: projection matrices must be d_model x d_model");
    }
  }
  if (!std::isfinite(p.omega)) fail(ErrorCode::kInvalidArgument, "attention: omega not finite");
}

std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const double> mask_row) {
  if (logits.size() != mask_row.size()) {
    fail(ErrorCode::kShape, "masked_softmax: logits and mask differ in length");
  }
  const std::size_t n = logits.size();
  double peak = -INFINITY;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask_row[i] <= kMaskedValue) continue;
    any = true;
    peak = std::max(peak, logits[i] + mask_row[i]);
  }
  if (!any) fail(ErrorCode::kProperty, "masked_softmax: every entry is masked");

  std::vector<double> w(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask_row[i] <= kMaskedValue) continue;
    w[i] = std::exp(logits[i] + mask_row[i] - peak);
    total += w[i];
  }
  for (auto& x : w) {
    x /= total;
    if (x < kWeightSnap) x = 0.0;
  }
  return w;
}

std::vector<double> masked_softmax_backward(std::span<const double> weights,
                                            std::span<const double> grad_weights) {
  if (weights.size() != grad_weights.size()) {
    fail(ErrorCode::kShape, "masked_softmax_backward: length mismatch");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) dot += weights[i] * grad_weights[i];
  std::vector<double> g(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) g[i] = weights[i] * (grad_weights[i] - dot);
  return g;
}

Matrix sa_mask(const Matrix& visual, const Matrix& condition, const AttentionMask& mask,
               const AttentionParams& params, std::vector<Matrix>* weights_out) {
  validate_attention_params(params);
  const std::size_t d = params.d_model;
  if (visual.cols() != d || (condition.rows() > 0 && condition.cols() != d)) {
    fail(ErrorCode::kShape, "sa_mask: token width differs from d_model");
  }
  if (mask.m() != visual.rows() || mask.n() != condition.rows()) {
    fail(ErrorCode::kShape, "sa_mask: mask is " + std::to_string(mask.m()) + "+" +
                                std::to_string(mask.n()) + " tokens, inputs are " +
                                std::to_string(visual.rows()) + "+" +
                                std::to_string(condition.rows()));
  }
  const Matrix x = vstack(visual, condition);
  const std::size_t s = x.rows();
  const Matrix q = matmul(x, params.w_q);
  const Matrix k = matmul(x, params.w_k);
  const Matrix v = matmul(x, params.w_v);
  const std::size_t dh = params.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  if (weights_out) weights_out->assign(params.heads, Matrix(s, s));
  Matrix context(s, d);
  std::vector<double> mask_row(s), logits(s);
  for (std::size_t r = 0; r < s; ++r) {
    mask.fill_row(r, mask_row);
    for (std::size_t h = 0; h < params.heads; ++h) {
      const std::size_t off = h * dh;
      for (std::size_t c = 0; c < s; ++c) {
        double acc = 0.0;
        for (std::size_t e = 0; e < dh; ++e) acc += q(r, off + e) * k(c, off + e);
        logits[c] = acc * scale;
      }
      const auto w = masked_softmax(logits, mask_row);
      for (std::size_t c = 0; c < s; ++c) {
        if (w[c] == 0.0) continue;
        for (std::size_t e = 0; e < dh; ++e) context(r, off + e) += w[c] * v(c, off + e);
      }
      if (weights_out) std::copy(w.begin(), w.end(), (*weights_out)[h].row(r).begin());
    }
  }
  return matmul(context, params.w_o);
}

Matrix gated_fuse(const Matrix& visual, const Matrix& sa_out, double omega) {
  if (sa_out.rows() < visual.rows() || sa_out.cols() != visual.cols()) {
    fail(ErrorCode::kShape, "gated_fuse: attention output has " +
                                std::to_string(sa_out.rows()) + " rows, need at least " +
                                std::to_string(visual.rows()));
  }
  const double gate = std::tanh(omega);
  if (gate == 0.0) return visual;
  Matrix out = visual;
  for (std::size_t r = 0; r < visual.rows(); ++r)
    for (std::size_t c = 0; c < visual.cols(); ++c) out(r, c) += gate * sa_out(r, c);
  return out;
}

}  // namespace instmask
