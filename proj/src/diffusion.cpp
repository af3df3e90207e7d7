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

#include "instmask/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "instmask/error.hpp"

namespace instmask {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
  if (beta_.empty()) fail(ErrorCode::kInvalidArgument, "schedule: need at least one step");
  alpha_bar_.resize(beta_.size());
  double running = 1.0;
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    if (!(beta_[i] > 0.0 && beta_[i] < 1.0)) {
      fail(ErrorCode::kInvalidArgument,
           "schedule: beta_" + std::to_string(i + 1) + " must lie in (0, 1)");
    }
    running *= 1.0 - beta_[i];
    alpha_bar_[i] = running;
  }
}

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
  if (steps == 0) fail(ErrorCode::kInvalidArgument, "schedule: steps must be >= 1");
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[i] = beta_start + frac * (beta_end - beta_start);
  }
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule NoiseSchedule::constant(std::size_t steps, double beta) {
  return NoiseSchedule(std::vector<double>(steps, beta));
}

Json schedule_to_json(const NoiseSchedule& schedule) {
  Json betas = Json::array();
  for (double b : schedule.betas()) betas.push_back(real_to_json(b));
  return Json{{"format", "instmask-schedule"}, {"steps", schedule.steps()}, {"beta", betas}};
}

NoiseSchedule schedule_from_json(const Json& doc, const std::string& context) {
  const auto steps = uint_from_json(require_key(doc, "steps", context), context + ".steps");
  const Json& node = require_key(doc, "beta", context);
  if (!node.is_array() || node.size() != steps) {
    fail(ErrorCode::kParse, context + ".beta: expected " + std::to_string(steps) + " entries");
  }
  std::vector<double> betas;
  for (std::size_t i = 0; i < node.size(); ++i) {
    betas.push_back(real_from_json(node[i], context + ".beta[" + std::to_string(i) + "]"));
  }
  try {
    return NoiseSchedule(std::move(betas));
  } catch (const Error& e) {
    fail(ErrorCode::kParse, context + ": " + e.what());
  }
}

Matrix forward_noise(const Matrix& z0, std::size_t t, const NoiseSchedule& schedule,
                     const Matrix& noise) {
  if (t < 1 || t > schedule.steps()) {
    fail(ErrorCode::kInvalidArgument, "forward_noise: t=" + std::to_string(t) +
                                          " outside [1, " + std::to_string(schedule.steps()) +
                                          "]");
  }
  if (z0.rows() != noise.rows() || z0.cols() != noise.cols()) {
    fail(ErrorCode::kShape, "forward_noise: noise shape differs from z0");
  }
  const double a = std::sqrt(schedule.alpha_bar(t));
  const double s = std::sqrt(1.0 - schedule.alpha_bar(t));
  Matrix out(z0.rows(), z0.cols());
  for (std::size_t i = 0; i < z0.data().size(); ++i) {
    out.data()[i] = a * z0.data()[i] + s * noise.data()[i];
  }
  return out;
}

LossMap per_token_loss(const Matrix& eps_true, const Matrix& eps_pred) {
  if (eps_true.rows() != eps_pred.rows() || eps_true.cols() != eps_pred.cols()) {
    fail(ErrorCode::kShape, "per_token_loss: shapes differ");
  }
  LossMap loss;
  loss.values.resize(eps_true.rows());
  for (std::size_t k = 0; k < eps_true.rows(); ++k) {
    double acc = 0.0;
    for (std::size_t c = 0; c < eps_true.cols(); ++c) {
      const double diff = eps_true(k, c) - eps_pred(k, c);
      acc += diff * diff;
    }
    loss.values[k] = acc;
  }
  return loss;
}

double global_loss(const LossMap& loss, Reduction reduction) {
  double total = 0.0;
  for (double v : loss.values) total += v;
  if (reduction == Reduction::kSum || loss.values.empty()) return total;
  return total / static_cast<double>(loss.values.size());
}

LossValue masked_loss(const LossMap& loss, const LossMask& mask, Reduction reduction) {
  if (loss.values.size() != mask.weights.size()) {
    fail(ErrorCode::kShape, "masked_loss: loss has " + std::to_string(loss.values.size()) +
                                " tokens, mask has " + std::to_string(mask.weights.size()));
  }
  double total = 0.0;
  std::size_t selected = 0;
  for (std::size_t k = 0; k < loss.values.size(); ++k) {
    if (!mask.weights[k]) continue;
    total += loss.values[k];
    ++selected;
  }
  LossValue out;
  out.empty_foreground = selected == 0;
  if (selected == 0) return out;
  out.value = reduction == Reduction::kSum ? total : total / static_cast<double>(selected);
  return out;
}

DynamicLossResult dynamic_loss(const LossMap& loss, const LossMask& mask, double alpha,
                               CounterRng& rng, Reduction reduction) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "dynamic_loss: alpha must lie in [0, 1]");
  }
  DynamicLossResult out;
  out.p = rng.uniform();
  out.masked_branch = out.p < alpha;
  if (out.masked_branch) {
    const auto lv = masked_loss(loss, mask, reduction);
    out.value = lv.value;
    out.empty_foreground = lv.empty_foreground;
  } else {
    out.value = global_loss(loss, reduction);
  }
  return out;
}

void write_branch_log_header(std::ostream& out) { out << "step,p,branch\n"; }

void write_branch_log_row(std::ostream& out, std::size_t step, const DynamicLossResult& r) {
  out << step << ',' << format_real(r.p) << ',' << (r.masked_branch ? "masked" : "global")
      << '\n';
}

Matrix toy_predict(const ToyDenoiser& model, const Matrix& x) {
  const std::size_t d = model.w.rows();
  if (model.w.cols() != x.cols() || model.b.size() != d) {
    fail(ErrorCode::kShape, "toy denoiser: parameter shapes do not match the input");
  }
  Matrix out(x.rows(), d);
  for (std::size_t k = 0; k < x.rows(); ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = model.b[i];
      for (std::size_t j = 0; j < x.cols(); ++j) acc += model.w(i, j) * x(k, j);
      out(k, i) = acc;
    }
  }
  return out;
}

namespace {

void check_toy_shapes(const ToyDenoiser& model, const Matrix& x, const Matrix& target,
                      const LossMask& mask) {
  if (target.rows() != x.rows() || target.cols() != model.w.rows() ||
      mask.weights.size() != x.rows()) {
    fail(ErrorCode::kShape, "gradient check: batch, target and mask disagree");
  }
}

}  // namespace

DenoiserGradient masked_loss_gradient(const ToyDenoiser& model, const Matrix& x,
                                      const Matrix& target, const LossMask& mask) {
  check_toy_shapes(model, x, target, mask);
  const Matrix pred = toy_predict(model, x);
  const std::size_t d = model.w.rows();
  DenoiserGradient g{Matrix(d, x.cols()), std::vector<double>(d, 0.0)};
  std::size_t selected = 0;
  for (auto w : mask.weights) selected += w != 0;
  if (selected == 0) return g;
  // dLoss/dL_k = mask_k / |S|, dL_k/dpred_ki = -2 (target_ki - pred_ki).
  const double upstream = 1.0 / static_cast<double>(selected);
  for (std::size_t k = 0; k < x.rows(); ++k) {
    if (!mask.weights[k]) continue;
    for (std::size_t i = 0; i < d; ++i) {
      const double dpred = -2.0 * (target(k, i) - pred(k, i)) * upstream;
      g.b[i] += dpred;
      for (std::size_t j = 0; j < x.cols(); ++j) g.w(i, j) += dpred * x(k, j);
    }
  }
  return g;
}

GradientRestrictionReport gradient_restriction_check(const ToyDenoiser& model,
                                                     const Matrix& x, const Matrix& target,
                                                     const LossMask& mask, double tolerance) {
  check_toy_shapes(model, x, target, mask);
  GradientRestrictionReport report;
  report.masked = masked_loss_gradient(model, x, target, mask);
  for (auto w : mask.weights) report.selected += w != 0;

  // Global-mean gradient assembled per token, background contributions
  // zeroed, then rescaled from 1/m to 1/|S|.
  const Matrix pred = toy_predict(model, x);
  const std::size_t d = model.w.rows();
  const std::size_t m = x.rows();
  report.zeroed = {Matrix(d, x.cols()), std::vector<double>(d, 0.0)};
  for (std::size_t k = 0; k < m; ++k) {
    const double keep = mask.weights[k] ? 1.0 : 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double contrib = keep * -2.0 * (target(k, i) - pred(k, i)) / static_cast<double>(m);
      report.zeroed.b[i] += contrib;
      for (std::size_t j = 0; j < x.cols(); ++j) report.zeroed.w(i, j) += contrib * x(k, j);
    }
  }
  const double rescale =
      report.selected == 0 ? 0.0 : static_cast<double>(m) / static_cast<double>(report.selected);
  for (auto& v : report.zeroed.w.data()) v *= rescale;
  for (auto& v : report.zeroed.b) v *= rescale;

  for (std::size_t i = 0; i < report.masked.w.data().size(); ++i) {
    report.max_abs_diff = std::max(
        report.max_abs_diff, std::abs(report.masked.w.data()[i] - report.zeroed.w.data()[i]));
  }
  for (std::size_t i = 0; i < d; ++i) {
    report.max_abs_diff =
        std::max(report.max_abs_diff, std::abs(report.masked.b[i] - report.zeroed.b[i]));
  }
  report.passed = report.max_abs_diff <= tolerance;
  return report;
}

}  // namespace instmask
