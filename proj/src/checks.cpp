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

#include "instmask/checks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

#include "instmask/attention.hpp"
#include "instmask/diffusion.hpp"
#include "instmask/error.hpp"
#include "instmask/geometry.hpp"
#include "instmask/latent.hpp"
#include "instmask/masks.hpp"
#include "instmask/pipeline.hpp"
#include "instmask/rng.hpp"
#include "instmask/scene.hpp"

namespace instmask {

bool CheckReport::all_passed() const {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.passed; });
}

Json CheckReport::to_json() const {
  Json checks = Json::array();
  for (const auto& r : results) {
    checks.push_back(
        {{"suite", r.suite}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  return Json{{"format", "instmask-check-report"},
              {"all_passed", all_passed()},
              {"checks", std::move(checks)}};
}

namespace {

class Recorder {
 public:
  Recorder(CheckReport& report, std::string suite)
      : report_(report), suite_(std::move(suite)) {}

  void add(const std::string& name, bool passed, std::string detail = {}) {
    report_.results.push_back({suite_, name, passed, std::move(detail)});
  }

  // Runs `body`, converting any exception into a failed check.
  void run(const std::string& name, const std::function<std::string(bool&)>& body) {
    bool ok = false;
    std::string detail;
    try {
      detail = body(ok);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    add(name, ok, detail);
  }

 private:
  CheckReport& report_;
  std::string suite_;
};

double orient(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
}

// Brute force: every pixel center against every edge.
std::vector<std::uint8_t> oracle_raster(const std::vector<Vec2>& v, std::uint32_t h,
                                        std::uint32_t w) {
  std::vector<std::uint8_t> out(std::size_t{h} * w, 0);
  const std::size_t n = v.size();
  double twice_area = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    twice_area += v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1];
  }
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) {
      const Vec2 p{c + 0.5, r + 0.5};
      bool in = false;
      if (n >= 3) {
        in = true;
        for (std::size_t i = 0; i < n && in; ++i) in = orient(v[i], v[(i + 1) % n], p) >= 0.0;
      } else if (n >= 1) {
        const Vec2& a = v[0];
        const Vec2& b = v[n - 1];
        in = orient(a, b, p) == 0.0 && p[0] >= std::min(a[0], b[0]) &&
             p[0] <= std::max(a[0], b[0]) && p[1] >= std::min(a[1], b[1]) &&
             p[1] <= std::max(a[1], b[1]);
      }
      out[std::size_t{r} * w + c] = in;
    }
  }
  if (n > 0 && (n <= 2 || 0.5 * twice_area < 1.0)) {
    for (const auto& p : v) {
      const double c = std::floor(p[0]), r = std::floor(p[1]);
      if (c >= 0 && r >= 0 && c < w && r < h) out[static_cast<std::size_t>(r) * w + c] = 1;
    }
  }
  return out;
}

void suite_rasterization(CheckReport& report, std::uint64_t seed) {
  Recorder rec(report, "rasterization");
  CounterRng rng(seed ^ 0x5241535445520000ULL);
  std::size_t mismatches = 0, polys = 0, convex_fail = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto h = static_cast<std::uint32_t>(1 + rng.next_u64() % 64);
    const auto w = static_cast<std::uint32_t>(1 + rng.next_u64() % 64);
    const int count = 1 + static_cast<int>(rng.next_u64() % 10);
    const bool snap = rng.uniform() < 0.3;
    std::vector<Vec2> pts;
    for (int i = 0; i < count; ++i) {
      Vec2 p{-8.0 + (w + 16.0) * rng.uniform(), -8.0 + (h + 16.0) * rng.uniform()};
      if (snap) p = {std::round(2 * p[0]) / 2, std::round(2 * p[1]) / 2};
      pts.push_back(p);
    }
    ProjectedPolygon poly;
    poly.vertices = convex_hull(pts);
    ++polys;
    const auto& hv = poly.vertices;
    for (std::size_t i = 0; hv.size() >= 3 && i < hv.size(); ++i) {
      if (orient(hv[i], hv[(i + 1) % hv.size()], hv[(i + 2) % hv.size()]) < 0) ++convex_fail;
    }
    if (rasterize(poly, h, w) != oracle_raster(poly.vertices, h, w)) ++mismatches;
  }
  rec.add("center_in_polygon_oracle", mismatches == 0,
          std::to_string(mismatches) + " of " + std::to_string(polys) + " polygons differ");
  rec.add("hull_convexity", convex_fail == 0,
          std::to_string(convex_fail) + " reflex vertices");
}

std::vector<InstanceId> random_ids(CounterRng& rng, std::size_t n) {
  std::set<InstanceId> ids;
  while (ids.size() < n) ids.insert(1 + rng.next_u64() % 50);
  return {ids.begin(), ids.end()};
}

IndicatorIndex random_indicator(CounterRng& rng, LatentDims dims,
                                const std::vector<InstanceId>& ids) {
  IndicatorIndex idx(dims);
  std::vector<std::vector<bool>> on(ids.size(), std::vector<bool>(dims.token_count()));
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t k = 0; k < dims.token_count(); ++k) on[i][k] = rng.uniform() < 0.3;
  for (std::size_t k = 0; k < dims.token_count(); ++k)
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (on[i][k]) idx.add(k, ids[i]);
  return idx;
}

bool shares(const std::vector<InstanceId>& a, const std::vector<InstanceId>& b) {
  for (auto x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) return true;
  return false;
}

// Entry (r, c) re-derived from I(v_k) alone.
bool definitional_open(const IndicatorIndex& idx, const std::vector<InstanceId>& order,
                       TrajectoryPolicy tp, ConditionPolicy cp, std::size_t r, std::size_t c) {
  const std::size_t m = idx.token_count();
  auto has = [&](std::size_t k, InstanceId id) {
    const auto& s = idx.at(k);
    return std::find(s.begin(), s.end(), id) != s.end();
  };
  if (r == c) return true;
  if (r < m && c < m) {
    if (tp == TrajectoryPolicy::kForegroundOnly && (idx.at(r).empty() || idx.at(c).empty())) {
      return true;
    }
    return shares(idx.at(r), idx.at(c));
  }
  if (r < m) return has(r, order[c - m]);
  if (c < m) return has(c, order[r - m]);
  return cp == ConditionPolicy::kAllOpen;
}

std::size_t definitional_mismatches(const AttentionMask& mask, const IndicatorIndex& idx,
                                    TrajectoryPolicy tp, ConditionPolicy cp) {
  std::size_t bad = 0;
  for (std::size_t r = 0; r < mask.size(); ++r)
    for (std::size_t c = 0; c < mask.size(); ++c)
      bad += mask.is_open(r, c) != definitional_open(idx, mask.instance_order(), tp, cp, r, c);
  return bad;
}

void suite_masks(CheckReport& report, std::uint64_t seed) {
  Recorder rec(report, "masks");
  CounterRng rng(seed ^ 0x4D41534B53000000ULL);
  std::size_t def_bad = 0, dual_bad = 0, loss_bad = 0, inv_bad = 0, cases = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const LatentDims dims{static_cast<std::uint32_t>(1 + rng.next_u64() % 4),
                          static_cast<std::uint32_t>(1 + rng.next_u64() % 4),
                          static_cast<std::uint32_t>(1 + rng.next_u64() % 4)};
    const auto ids = random_ids(rng, rng.next_u64() % 5);
    const auto idx = random_indicator(rng, dims, ids);
    for (auto tp : {TrajectoryPolicy::kForegroundOnly, TrajectoryPolicy::kStrict}) {
      for (auto cp : {ConditionPolicy::kIdentityOnly, ConditionPolicy::kAllOpen}) {
        ++cases;
        const auto sparse = build_sparse_mask(idx, ids, tp, cp);
        const auto dense = assemble_mask(build_identity_mask(idx, ids),
                                         build_trajectory_mask(idx, tp),
                                         build_condition_block(ids.size(), cp));
        def_bad += definitional_mismatches(dense, idx, tp, cp) != 0;
        dual_bad += !masks_equal(dense, sparse);
        inv_bad += !mask_invariant_violations(sparse).empty();
      }
    }
    const auto loss = build_loss_mask(idx);
    for (std::size_t k = 0; k < idx.token_count(); ++k) {
      loss_bad += loss.weights[k] != (idx.at(k).empty() ? 0 : 1);
    }
  }
  rec.add("definitional_equivalence", def_bad == 0,
          std::to_string(def_bad) + " of " + std::to_string(cases) + " masks differ");
  rec.add("dense_sparse_equality", dual_bad == 0, std::to_string(dual_bad) + " mismatches");
  rec.add("structural_invariants", inv_bad == 0, std::to_string(inv_bad) + " violations");
  rec.add("loss_mask_definition", loss_bad == 0, std::to_string(loss_bad) + " tokens differ");
}

void suite_occlusion(CheckReport& report, std::uint64_t seed) {
  Recorder rec(report, "occlusion");
  std::size_t scenes = 0, pairs = 0, closed = 0, gaps = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    GeneratorSpec spec;
    spec.dims = {12, 64, 96, 3, 16, 16};
    spec.instance_count = 3;
    spec.motions = {MotionKind::kOccludedGap};
    const Scene scene = generate_synthetic_scene(seed + s, spec);
    ++scenes;
    for (auto tp : {TrajectoryPolicy::kForegroundOnly, TrajectoryPolicy::kStrict}) {
      MaskOptions opts;
      opts.trajectory = tp;
      opts.threads = 1;
      const auto bundle = build_view_bundle(scene, 0, opts);
      const auto& idx = bundle.indicator;
      const std::size_t plane = std::size_t{idx.dims().height} * idx.dims().width;
      for (const auto& inst : scene.instances) {
        std::uint32_t first_gap = 0;
        while (inst.poses.contains(first_gap)) ++first_gap;
        gaps += first_gap < scene.dims.frames;
        auto it = idx.inverse().find(inst.tracking_id);
        if (it == idx.inverse().end()) continue;
        const std::uint32_t gap_cell = first_gap / scene.dims.f_t;
        for (auto k : it->second) {
          for (auto j : it->second) {
            if (k / plane < gap_cell && j / plane > gap_cell) {
              ++pairs;
              closed += !bundle.mask.is_open(k, j) || !bundle.mask.is_open(j, k);
            }
          }
        }
      }
    }
  }
  rec.add("gap_present", gaps > 0, std::to_string(gaps) + " occluded instances");
  rec.add("cross_gap_pairs_open", closed == 0 && pairs > 0,
          std::to_string(pairs) + " pairs across gaps in " + std::to_string(scenes) +
              " scenes, " + std::to_string(closed) + " masked");
}

Matrix random_matrix(CounterRng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = rng.normal();
  return m;
}

double row_sensitivity(const std::function<Matrix(const Matrix&)>& f, const Matrix& input,
                       std::size_t perturbed_row, std::size_t observed_row, double h) {
  double worst = 0.0;
  for (std::size_t c = 0; c < input.cols(); ++c) {
    Matrix plus = input, minus = input;
    plus(perturbed_row, c) += h;
    minus(perturbed_row, c) -= h;
    const Matrix fp = f(plus), fm = f(minus);
    for (std::size_t e = 0; e < fp.cols(); ++e) {
      worst = std::max(worst, std::abs(fp(observed_row, e) - fm(observed_row, e)) / (2 * h));
    }
  }
  return worst;
}

void suite_leakage(CheckReport& report, std::uint64_t seed) {
  Recorder rec(report, "leakage");
  CounterRng rng(seed ^ 0x4C45414B00000000ULL);
  double worst_identity = 0.0, worst_trajectory = 0.0;
  std::size_t weight_bad = 0, probes = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const LatentDims dims{2, 2, static_cast<std::uint32_t>(2 + rng.next_u64() % 3)};
    const auto ids = random_ids(rng, 1 + rng.next_u64() % 3);
    const auto idx = random_indicator(rng, dims, ids);
    const auto tp = trial % 2 ? TrajectoryPolicy::kStrict : TrajectoryPolicy::kForegroundOnly;
    const auto mask = build_sparse_mask(idx, ids, tp, ConditionPolicy::kIdentityOnly);
    auto params = init_attention_params(rng.next_u64(), 8, trial % 3 == 0 ? 1 : 2);
    const Matrix v = random_matrix(rng, idx.token_count(), 8);
    const Matrix g = random_matrix(rng, ids.size(), 8);
    std::vector<Matrix> weights;
    sa_mask(v, g, mask, params, &weights);
    for (const auto& wm : weights)
      for (std::size_t r = 0; r < mask.size(); ++r)
        for (std::size_t c = 0; c < mask.size(); ++c)
          weight_bad += !mask.is_open(r, c) && wm(r, c) != 0.0;

    for (std::size_t k = 0; k < idx.token_count(); ++k) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (idx.covers(k, ids[i])) continue;
        ++probes;
        auto f = [&](const Matrix& gg) { return sa_mask(v, gg, mask, params); };
        worst_identity = std::max(worst_identity, row_sensitivity(f, g, i, k, 1e-4));
        break;
      }
      for (std::size_t j = 0; j < idx.token_count(); ++j) {
        if (idx.at(k).empty() || idx.at(j).empty() || shares(idx.at(k), idx.at(j))) continue;
        ++probes;
        auto f = [&](const Matrix& vv) { return sa_mask(vv, g, mask, params); };
        worst_trajectory = std::max(worst_trajectory, row_sensitivity(f, v, j, k, 1e-4));
        break;
      }
    }
  }
  rec.add("identity_fd_sensitivity", worst_identity < 1e-6,
          "max " + format_real(worst_identity) + " over " + std::to_string(probes) + " probes");
  rec.add("trajectory_fd_sensitivity", worst_trajectory < 1e-6,
          "max " + format_real(worst_trajectory));
  rec.add("masked_weights_exactly_zero", weight_bad == 0,
          std::to_string(weight_bad) + " nonzero masked weights");
}

void suite_softmax(CheckReport& report, std::uint64_t seed) {
  Recorder rec(report, "softmax");
  CounterRng rng(seed ^ 0x534F46544D415800ULL);
  rec.run("reference_values", [](bool& ok) {
    const double l[] = {1, 2, 3};
    const double mk[] = {0, kMaskedValue, 0};
    const auto w = masked_softmax(l, mk);
    const double e2 = std::exp(2.0);
    ok = std::abs(w[0] - 1 / (1 + e2)) < 1e-12 && w[1] == 0.0 &&
         std::abs(w[2] - e2 / (1 + e2)) < 1e-12;
    return "w = [" + format_real(w[0]) + ", " + format_real(w[1]) + ", " + format_real(w[2]) +
           "]";
  });
  double worst_sum = 0.0, worst_grad = 0.0;
  std::size_t masked_nonzero = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.next_u64() % 12;
    std::vector<double> logits(n), mask(n, 0.0), up(n);
    for (auto& x : logits) x = 4.0 * rng.normal();
    for (auto& x : up) x = rng.normal();
    for (std::size_t i = 0; i < n; ++i)
      if (rng.uniform() < 0.4) mask[i] = kMaskedValue;
    mask[rng.next_u64() % n] = 0.0;
    const auto w = masked_softmax(logits, mask);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += w[i];
      masked_nonzero += mask[i] != 0.0 && w[i] != 0.0;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    // Scalar objective u . softmax(logits); central differences per logit.
    const auto grad = masked_softmax_backward(w, up);
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i] != 0.0) continue;
      const double h = 1e-5;
      auto lp = logits, lm = logits;
      lp[i] += h;
      lm[i] -= h;
      const auto wp = masked_softmax(lp, mask), wm = masked_softmax(lm, mask);
      double fp = 0, fm = 0;
      for (std::size_t j = 0; j < n; ++j) {
        fp += up[j] * wp[j];
        fm += up[j] * wm[j];
      }
      const double fd = (fp - fm) / (2 * h);
      // Relative error with a 1e-3 floor: components below it compare absolutely
      // against 1e-8, above the finite-difference rounding noise.
      const double rel = std::abs(fd - grad[i]) / std::max(1e-3, std::abs(fd));
      worst_grad = std::max(worst_grad, rel);
    }
  }
  rec.add("rows_sum_to_one", worst_sum <= 1e-12, "max |sum - 1| = " + format_real(worst_sum));
  rec.add("masked_entries_zero", masked_nonzero == 0, std::to_string(masked_nonzero) + " nonzero");
  rec.add("gradient_vs_central_differences", worst_grad <= 1e-5,
          "max relative error " + format_real(worst_grad));
}

void suite_schedule(CheckReport& report, std::uint64_t seed) {
  Recorder rec(report, "schedule");
  rec.run("recurrence_exact", [](bool& ok) {
    const auto s = NoiseSchedule::linear(1000);
    ok = true;
    double prev = 1.0;
    for (std::size_t t = 1; t <= s.steps(); ++t) {
      ok = ok && s.alpha_bar(t) == prev * (1.0 - s.beta(t)) && s.alpha_bar(t) < prev &&
           s.alpha_bar(t) > 0.0;
      prev = s.alpha_bar(t);
    }
    return "linear 1e-4..2e-2, 1000 steps";
  });
  rec.run("constant_beta_alpha_bar_2", [](bool& ok) {
    const auto s = NoiseSchedule::constant(2, 0.1);
    ok = s.alpha_bar(1) == 0.9 && std::abs(s.alpha_bar(2) - 0.81) <= 1e-15;
    return "alpha_bar_2 = " + format_real(s.alpha_bar(2));
  });
  rec.run("monte_carlo_variance", [seed](bool& ok) {
    const auto s = NoiseSchedule::linear(1000);
    const std::size_t n = 100000, t = 500;
    CounterRng rng(seed ^ 0x5343484544000000ULL);
    Matrix z0(n, 1), eps(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      z0(i, 0) = rng.normal();
      eps(i, 0) = rng.normal();
    }
    const Matrix zt = forward_noise(z0, t, s, eps);
    double mean = 0.0;
    for (double x : zt.data()) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : zt.data()) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);
    const double expected = s.alpha_bar(t) + (1.0 - s.alpha_bar(t));
    const double sigma = std::sqrt(2.0 / static_cast<double>(n - 1)) * expected;
    ok = std::abs(var - expected) <= 3.0 * sigma;
    return "Var = " + format_real(var) + ", 3 sigma = " + format_real(3 * sigma);
  });
}

void suite_dynamic(CheckReport& report, std::uint64_t seed, double alpha_flag) {
  Recorder rec(report, "dynamic");
  LossMap loss{{2, 4, 6, 8, 10, 12}};
  LossMask mask{{1, 0, 0, 1, 0, 0}};
  const double masked = masked_loss(loss, mask).value;
  const double global = global_loss(loss);
  std::vector<double> alphas{0.0, 0.25, 0.5, 1.0};
  if (std::find(alphas.begin(), alphas.end(), alpha_flag) == alphas.end()) {
    alphas.push_back(alpha_flag);
  }
  for (double alpha : alphas) {
    rec.run("frequency_alpha_" + format_real(alpha), [&](bool& ok) {
      CounterRng rng(seed ^ 0x44594E0000000000ULL);
      const std::size_t n = 100000;
      std::size_t hits = 0;
      bool exact = true;
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = dynamic_loss(loss, mask, alpha, rng);
        hits += r.masked_branch;
        total += r.value;
        exact = exact && r.value == (r.masked_branch ? masked : global);
      }
      const double freq = static_cast<double>(hits) / n;
      const double sigma = std::sqrt(alpha * (1 - alpha) / n);
      const double mean = total / n;
      const double expect = alpha * masked + (1 - alpha) * global;
      ok = exact && std::abs(freq - alpha) <= 3 * sigma &&
           std::abs(mean - expect) <= 3 * sigma * std::abs(masked - global);
      return "freq " + format_real(freq) + ", mean loss " + format_real(mean) + " vs " +
             format_real(expect);
    });
  }
}

void suite_gradient(CheckReport& report, std::uint64_t seed) {
  Recorder rec(report, "gradient");
  CounterRng rng(seed ^ 0x4752414400000000ULL);
  double worst = 0.0;
  bool zero_ok = true;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + rng.next_u64() % 30, d = 1 + rng.next_u64() % 6;
    ToyDenoiser toy{random_matrix(rng, d, d), std::vector<double>(d)};
    for (auto& b : toy.b) b = rng.normal();
    const Matrix x = random_matrix(rng, m, d), target = random_matrix(rng, m, d);
    LossMask mask;
    for (std::size_t k = 0; k < m; ++k) {
      mask.weights.push_back(trial % 3 == 0 ? 1 : trial % 3 == 1 ? 0 : rng.uniform() < 0.5);
    }
    const auto r = gradient_restriction_check(toy, x, target, mask);
    worst = std::max(worst, r.max_abs_diff);
    if (r.selected == 0) {
      for (double v : r.masked.w.data()) zero_ok = zero_ok && v == 0.0;
    }
  }
  rec.add("masked_equals_zeroed_background", worst <= 1e-10, "max diff " + format_real(worst));
  rec.add("empty_mask_zero_gradient", zero_ok);
}

void suite_tamper(CheckReport& report, const std::string& path) {
  Recorder rec(report, "tamper");
  std::filesystem::path file(path);
  std::optional<AttentionMask> mask;
  Json meta;
  try {
    if (file.extension() == ".bin") {
      const std::string raw = read_text_file(file);
      const std::span<const std::uint8_t> bytes(
          reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size());
      std::size_t n = bytes.size() >= 16 ? (bytes[12] | bytes[13] << 8 | bytes[14] << 16 |
                                            static_cast<std::size_t>(bytes[15]) << 24)
                                         : 0;
      std::vector<InstanceId> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      mask = decode_dense_mask(bytes, std::move(order));
    } else {
      meta = parse_json(read_text_file(file), path);
      mask = mask_from_sparse_json(meta, path);
    }
    rec.add("parse", true);
  } catch (const std::exception& e) {
    rec.add("parse", false, e.what());
    return;
  }
  const auto bad = mask_invariant_violations(*mask);
  for (const char* name :
       {"diagonal_open", "identity_symmetry", "trajectory_symmetry", "no_empty_row"}) {
    const bool failed = std::find(bad.begin(), bad.end(), name) != bad.end();
    rec.add(name, !failed, failed ? "violated in " + path : "");
  }
  const auto indicator_path = file.parent_path() / "indicator.json";
  if (meta.is_object() && std::filesystem::exists(indicator_path)) {
    rec.run("definitional_equivalence", [&](bool& ok) {
      const auto idx = indicator_from_json(
          parse_json(read_text_file(indicator_path), indicator_path.string()),
          indicator_path.string());
      const auto tp = meta.value("trajectory_policy", "foreground-only") == "strict"
                          ? TrajectoryPolicy::kStrict
                          : TrajectoryPolicy::kForegroundOnly;
      const auto cp = meta.value("condition_policy", "identity-only") == "all-open"
                          ? ConditionPolicy::kAllOpen
                          : ConditionPolicy::kIdentityOnly;
      if (idx.token_count() != mask->m()) {
        ok = false;
        return std::string("indicator token count differs from mask m");
      }
      const auto wrong = definitional_mismatches(*mask, idx, tp, cp);
      ok = wrong == 0;
      return std::to_string(wrong) + " entries differ from the indicator re-derivation";
    });
  }
}

}  // namespace

CheckReport run_checks(const CheckOptions& options) {
  const auto& known = check_suite_names();
  for (const auto& s : options.suites) {
    if (std::find(known.begin(), known.end(), s) == known.end() && s != "tamper") {
      fail(ErrorCode::kInvalidArgument, "unknown check suite \"" + s + "\"");
    }
  }
  if (!(options.alpha >= 0.0 && options.alpha <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  auto wanted = [&](const std::string& s) {
    return options.suites.empty() ||
           std::find(options.suites.begin(), options.suites.end(), s) != options.suites.end();
  };
  CheckReport report;
  if (wanted("rasterization")) suite_rasterization(report, options.seed);
  if (wanted("masks")) suite_masks(report, options.seed);
  if (wanted("occlusion")) suite_occlusion(report, options.seed);
  if (wanted("leakage")) suite_leakage(report, options.seed);
  if (wanted("softmax")) suite_softmax(report, options.seed);
  if (wanted("schedule")) suite_schedule(report, options.seed);
  if (wanted("dynamic")) suite_dynamic(report, options.seed, options.alpha);
  if (wanted("gradient")) suite_gradient(report, options.seed);
  if (options.tamper_path) suite_tamper(report, *options.tamper_path);
  return report;
}

}  // namespace instmask
