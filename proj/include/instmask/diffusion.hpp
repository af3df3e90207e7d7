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
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "instmask/linalg.hpp"
#include "instmask/masks.hpp"
#include "instmask/rng.hpp"
#include "instmask/serialize.hpp"

namespace instmask {

/// beta_1..beta_T and alpha_bar_t = alpha_bar_{t-1} * (1 - beta_t).
/// Steps are 1-based in the accessors.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> betas);

  static NoiseSchedule linear(std::size_t steps, double beta_start = 1e-4,
                              double beta_end = 2e-2);
  static NoiseSchedule constant(std::size_t steps, double beta);

  std::size_t steps() const { return beta_.size(); }
  double beta(std::size_t t) const { return beta_.at(t - 1); }
  double alpha_bar(std::size_t t) const { return alpha_bar_.at(t - 1); }
  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

 private:
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

Json schedule_to_json(const NoiseSchedule& schedule);
NoiseSchedule schedule_from_json(const Json& doc, const std::string& context);

// sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * noise, elementwise.
Matrix forward_noise(const Matrix& z0, std::size_t t, const NoiseSchedule& schedule,
                     const Matrix& noise);

struct LossMap {
  std::vector<double> values;  // one per token
};

// Squared error summed over channels, per token (row).
LossMap per_token_loss(const Matrix& eps_true, const Matrix& eps_pred);

enum class Reduction { kMean, kSum };

struct LossValue {
  double value = 0.0;
  bool empty_foreground = false;
};

double global_loss(const LossMap& loss, Reduction reduction = Reduction::kMean);

// Mean over selected tokens (or sum). An empty selection yields 0 with the
// empty_foreground flag set.
LossValue masked_loss(const LossMap& loss, const LossMask& mask,
                      Reduction reduction = Reduction::kMean);

inline constexpr double kDefaultMaskProbability = 0.5;

struct DynamicLossResult {
  double value = 0.0;
  bool masked_branch = false;
  double p = 0.0;  // the uniform draw
  bool empty_foreground = false;
};

// Draws p ~ U[0, 1) from `rng`; the masked loss is used iff p < alpha.
DynamicLossResult dynamic_loss(const LossMap& loss, const LossMask& mask, double alpha,
                               CounterRng& rng, Reduction reduction = Reduction::kMean);

// CSV audit trail: "step,p,branch" with branch in {masked, global}.
void write_branch_log_header(std::ostream& out);
void write_branch_log_row(std::ostream& out, std::size_t step, const DynamicLossResult& r);

/// Toy denoiser: pred_k = W x_k + b for every token row x_k.
struct ToyDenoiser {
  Matrix w;  // d x d
  std::vector<double> b;
};

Matrix toy_predict(const ToyDenoiser& model, const Matrix& x);

struct DenoiserGradient {
  Matrix w;
  std::vector<double> b;
};

// Gradient of masked_loss(per_token_loss(target, toy_predict(model, x)), mask)
// (mean reduction) with respect to W and b.
DenoiserGradient masked_loss_gradient(const ToyDenoiser& model, const Matrix& x,
                                      const Matrix& target, const LossMask& mask);

struct GradientRestrictionReport {
  DenoiserGradient masked;
  DenoiserGradient zeroed;  // global-mean gradient, background rows zeroed, rescaled
  std::size_t selected = 0;
  double max_abs_diff = 0.0;
  bool passed = false;
};

GradientRestrictionReport gradient_restriction_check(const ToyDenoiser& model,
                                                     const Matrix& x, const Matrix& target,
                                                     const LossMask& mask,
                                                     double tolerance = 1e-10);

}  // namespace instmask
