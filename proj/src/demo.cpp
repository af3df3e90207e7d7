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

#include "instmask/demo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "instmask/attention.hpp"
#include "instmask/error.hpp"
#include "instmask/rng.hpp"

namespace instmask {

namespace {

// Largest |d row_out / d input(row_in, c)| over the first `coords` input
// columns, by central differences.
double probe(const std::function<Matrix(const Matrix&)>& f, const Matrix& input,
             std::size_t row_in, std::size_t row_out, std::size_t coords) {
  const double h = 1e-4;
  double worst = 0.0;
  for (std::size_t c = 0; c < std::min(coords, input.cols()); ++c) {
    Matrix plus = input, minus = input;
    plus(row_in, c) += h;
    minus(row_in, c) -= h;
    const Matrix a = f(plus), b = f(minus);
    for (std::size_t e = 0; e < a.cols(); ++e) {
      worst = std::max(worst, std::abs(a(row_out, e) - b(row_out, e)) / (2 * h));
    }
  }
  return worst;
}

}  // namespace

DemoReport run_attention_demo(const Scene& scene, const MaskOptions& masks,
                              std::uint32_t view_id, const DemoOptions& options) {
  const MaskBundle bundle = masks.view_mode == ViewMode::kConcatenated
                                ? build_concat_bundle(scene, masks)
                                : build_view_bundle(scene, view_id, masks);
  const MlpParams mlp = options.params ? *options.params
                                       : init_mlp_params(options.seed, options.fourier_bands,
                                                         32, 64, options.d_model);
  if (mlp.d_model != options.d_model) {
    fail(ErrorCode::kShape, "demo: params d_model differs from the attention width");
  }
  const auto conditions = build_condition_set(scene, mlp);
  const Matrix g = condition_tokens(conditions);
  AttentionParams attn = init_attention_params(options.seed + 1, options.d_model, options.heads);
  attn.omega = options.omega;

  const std::size_t m = bundle.indicator.token_count();
  CounterRng rng(options.seed + 2);
  Matrix v(m, options.d_model);
  for (auto& x : v.data()) x = rng.normal();

  std::vector<Matrix> weights;
  const Matrix out = sa_mask(v, g, bundle.mask, attn, &weights);
  const Matrix fused = gated_fuse(v, out, attn.omega);

  std::size_t masked_nonzero = 0;
  double worst_row_sum = 0.0;
  for (const auto& w : weights) {
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < w.cols(); ++c) {
        sum += w(r, c);
        masked_nonzero += !bundle.mask.is_open(r, c) && w(r, c) != 0.0;
      }
      worst_row_sum = std::max(worst_row_sum, std::abs(sum - 1.0));
    }
  }

  const auto& idx = bundle.indicator;
  const auto& order = bundle.instance_order;
  double identity_worst = 0.0, trajectory_worst = 0.0;
  std::size_t identity_probes = 0, trajectory_probes = 0;
  for (std::size_t k = 0; k < m && identity_probes < options.probes; ++k) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (idx.covers(k, order[i])) continue;
      auto f = [&](const Matrix& gg) { return sa_mask(v, gg, bundle.mask, attn); };
      identity_worst = std::max(identity_worst, probe(f, g, i, k, 4));
      ++identity_probes;
      break;
    }
  }
  for (std::size_t k = 0; k < m && trajectory_probes < options.probes; ++k) {
    if (idx.empty_at(k)) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (idx.empty_at(j) || bundle.mask.is_open(k, j)) continue;
      auto f = [&](const Matrix& vv) { return sa_mask(vv, g, bundle.mask, attn); };
      trajectory_worst = std::max(trajectory_worst, probe(f, v, j, k, 4));
      ++trajectory_probes;
      break;
    }
  }

  double fuse_delta = 0.0;
  for (std::size_t i = 0; i < v.data().size(); ++i) {
    fuse_delta = std::max(fuse_delta, std::abs(fused.data()[i] - v.data()[i]));
  }

  DemoReport report;
  report.leak_free = masked_nonzero == 0 && identity_worst < 1e-6 && trajectory_worst < 1e-6;
  report.json = Json{
      {"format", "instmask-attention-demo"},
      {"grid", bundle.label},
      {"m", m},
      {"n", order.size()},
      {"heads", options.heads},
      {"d_model", options.d_model},
      {"omega", real_to_json(options.omega)},
      {"open_entries", bundle.mask.open_count()},
      {"masked_weights_nonzero", masked_nonzero},
      {"max_row_sum_error", real_to_json(worst_row_sum)},
      {"identity_probes", identity_probes},
      {"identity_max_sensitivity", real_to_json(identity_worst)},
      {"trajectory_probes", trajectory_probes},
      {"trajectory_max_sensitivity", real_to_json(trajectory_worst)},
      {"fuse_max_delta", real_to_json(fuse_delta)},
      {"leak_free", report.leak_free}};
  return report;
}

}  // namespace instmask
