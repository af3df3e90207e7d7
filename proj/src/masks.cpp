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

#include "instmask/masks.hpp"

#include <algorithm>
#include <map>

#include "instmask/error.hpp"

namespace instmask {

const char* policy_name(TrajectoryPolicy p) {
  return p == TrajectoryPolicy::kStrict ? "strict" : "foreground-only";
}

const char* policy_name(ConditionPolicy p) {
  return p == ConditionPolicy::kAllOpen ? "all-open" : "identity-only";
}

namespace {

bool intersects(const std::vector<InstanceId>& a, const std::vector<InstanceId>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

void check_order(const IndicatorIndex& idx, std::span<const InstanceId> order) {
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i] <= order[i - 1]) {
      fail(ErrorCode::kInvalidArgument, "instance order must be strictly increasing");
    }
  }
  for (const auto& [id, ks] : idx.inverse()) {
    if (!std::binary_search(order.begin(), order.end(), id)) {
      fail(ErrorCode::kInvalidArgument,
           "unknown instance id " + std::to_string(id) + " (not a condition token)");
    }
  }
}

// Groups tokens by their indicator set. class_of[k] indexes `sets`.
struct TokenClasses {
  std::vector<std::uint32_t> class_of;
  std::vector<std::vector<InstanceId>> sets;
};

TokenClasses classify(const IndicatorIndex& idx) {
  TokenClasses tc;
  tc.class_of.resize(idx.token_count());
  std::map<std::vector<InstanceId>, std::uint32_t> ids;
  for (std::size_t k = 0; k < idx.token_count(); ++k) {
    auto [it, inserted] = ids.emplace(idx.at(k), static_cast<std::uint32_t>(tc.sets.size()));
    if (inserted) tc.sets.push_back(idx.at(k));
    tc.class_of[k] = it->second;
  }
  return tc;
}

bool pair_open(const std::vector<InstanceId>& a, const std::vector<InstanceId>& b,
               TrajectoryPolicy policy) {
  if (policy == TrajectoryPolicy::kForegroundOnly && (a.empty() || b.empty())) return true;
  return intersects(a, b);
}

}  // namespace

IdentityBlock build_identity_mask(const IndicatorIndex& idx,
                                  std::span<const InstanceId> instance_order) {
  check_order(idx, instance_order);
  IdentityBlock block;
  block.m = idx.token_count();
  block.n = instance_order.size();
  block.instance_order.assign(instance_order.begin(), instance_order.end());
  block.open.assign(block.m * block.n, 0);
  for (std::size_t i = 0; i < block.n; ++i) {
    auto it = idx.inverse().find(instance_order[i]);
    if (it == idx.inverse().end()) continue;
    for (auto k : it->second) block.open[std::size_t{k} * block.n + i] = 1;
  }
  return block;
}

TrajectoryBlock build_trajectory_mask(const IndicatorIndex& idx, TrajectoryPolicy policy) {
  TrajectoryBlock block;
  block.m = idx.token_count();
  block.open.assign(block.m * block.m, 0);
  const TokenClasses tc = classify(idx);
  const std::size_t c = tc.sets.size();
  std::vector<std::uint8_t> table(c * c);
  for (std::size_t a = 0; a < c; ++a)
    for (std::size_t b = 0; b < c; ++b)
      table[a * c + b] = pair_open(tc.sets[a], tc.sets[b], policy) ? 1 : 0;
  for (std::size_t k = 0; k < block.m; ++k) {
    const std::uint8_t* trow = table.data() + std::size_t{tc.class_of[k]} * c;
    std::uint8_t* row = block.open.data() + k * block.m;
    for (std::size_t j = 0; j < block.m; ++j) row[j] = trow[tc.class_of[j]];
    row[k] = 1;
  }
  return block;
}

ConditionBlock build_condition_block(std::size_t n, ConditionPolicy policy) {
  ConditionBlock block;
  block.n = n;
  block.open.assign(n * n, policy == ConditionPolicy::kAllOpen ? 1 : 0);
  for (std::size_t i = 0; i < n; ++i) block.open[i * n + i] = 1;
  return block;
}

// ---- AttentionMask -------------------------------------------------------

AttentionMask AttentionMask::from_dense(std::size_t m, std::size_t n,
                                        std::vector<InstanceId> instance_order,
                                        std::vector<std::uint8_t> open) {
  if (instance_order.size() != n || open.size() != (m + n) * (m + n)) {
    fail(ErrorCode::kShape, "dense mask: size does not match (m + n)^2");
  }
  AttentionMask mask;
  mask.m_ = m;
  mask.n_ = n;
  mask.storage_ = Storage::kDense;
  mask.instance_order_ = std::move(instance_order);
  mask.dense_ = std::move(open);
  return mask;
}

AttentionMask AttentionMask::from_sparse(std::size_t m, std::size_t n,
                                         std::vector<InstanceId> instance_order,
                                         std::vector<std::uint32_t> row_class,
                                         std::vector<std::vector<std::uint32_t>> class_cols) {
  if (instance_order.size() != n || row_class.size() != m + n) {
    fail(ErrorCode::kShape, "sparse mask: row classes do not match m + n");
  }
  for (auto c : row_class) {
    if (c >= class_cols.size()) fail(ErrorCode::kShape, "sparse mask: bad row class");
  }
  for (const auto& cols : class_cols) {
    if (!std::is_sorted(cols.begin(), cols.end()) ||
        (!cols.empty() && cols.back() >= m + n)) {
      fail(ErrorCode::kShape, "sparse mask: column list unsorted or out of range");
    }
  }
  AttentionMask mask;
  mask.m_ = m;
  mask.n_ = n;
  mask.storage_ = Storage::kSparse;
  mask.instance_order_ = std::move(instance_order);
  mask.row_class_ = std::move(row_class);
  mask.class_cols_ = std::move(class_cols);
  return mask;
}

bool AttentionMask::is_open(std::size_t row, std::size_t col) const {
  if (storage_ == Storage::kDense) return dense_[row * size() + col] != 0;
  if (row == col) return true;
  const auto& cols = class_cols_[row_class_[row]];
  return std::binary_search(cols.begin(), cols.end(), static_cast<std::uint32_t>(col));
}

void AttentionMask::fill_row(std::size_t row, std::span<double> out) const {
  if (out.size() != size()) fail(ErrorCode::kShape, "fill_row: wrong row length");
  if (storage_ == Storage::kDense) {
    const std::uint8_t* src = dense_.data() + row * size();
    for (std::size_t c = 0; c < size(); ++c) out[c] = src[c] ? 0.0 : kMaskedValue;
    return;
  }
  std::fill(out.begin(), out.end(), kMaskedValue);
  for (auto c : class_cols_[row_class_[row]]) out[c] = 0.0;
  out[row] = 0.0;
}

std::vector<std::uint32_t> AttentionMask::open_columns(std::size_t row) const {
  std::vector<std::uint32_t> cols;
  if (storage_ == Storage::kDense) {
    for (std::size_t c = 0; c < size(); ++c)
      if (dense_[row * size() + c]) cols.push_back(static_cast<std::uint32_t>(c));
    return cols;
  }
  cols = class_cols_[row_class_[row]];
  const auto diag = static_cast<std::uint32_t>(row);
  auto it = std::lower_bound(cols.begin(), cols.end(), diag);
  if (it == cols.end() || *it != diag) cols.insert(it, diag);
  return cols;
}

std::size_t AttentionMask::open_count() const {
  if (storage_ == Storage::kDense) {
    return static_cast<std::size_t>(std::count(dense_.begin(), dense_.end(), 1));
  }
  std::size_t total = 0;
  for (std::size_t r = 0; r < size(); ++r) {
    const auto& cols = class_cols_[row_class_[r]];
    total += cols.size() +
             !std::binary_search(cols.begin(), cols.end(), static_cast<std::uint32_t>(r));
  }
  return total;
}

AttentionMask AttentionMask::to_dense() const {
  if (storage_ == Storage::kDense) return *this;
  std::vector<std::uint8_t> open(size() * size(), 0);
  for (std::size_t r = 0; r < size(); ++r) {
    for (auto c : class_cols_[row_class_[r]]) open[r * size() + c] = 1;
    open[r * size() + r] = 1;
  }
  return from_dense(m_, n_, instance_order_, std::move(open));
}

bool masks_equal(const AttentionMask& a, const AttentionMask& b) {
  if (a.m() != b.m() || a.n() != b.n() || a.instance_order() != b.instance_order()) {
    return false;
  }
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a.open_columns(r) != b.open_columns(r)) return false;
  }
  return true;
}

AttentionMask assemble_mask(const IdentityBlock& identity, const TrajectoryBlock& trajectory,
                            const ConditionBlock& condition) {
  const std::size_t m = trajectory.m;
  const std::size_t n = condition.n;
  if (identity.m != m || identity.n != n || identity.instance_order.size() != n ||
      identity.open.size() != m * n || trajectory.open.size() != m * m ||
      condition.open.size() != n * n) {
    fail(ErrorCode::kShape, "assemble_mask: block shapes are inconsistent (m=" +
                                std::to_string(m) + ", n=" + std::to_string(n) + ")");
  }
  const std::size_t s = m + n;
  std::vector<std::uint8_t> open(s * s, 0);
  for (std::size_t k = 0; k < m; ++k) {
    std::copy_n(trajectory.open.begin() + static_cast<std::ptrdiff_t>(k * m), m,
                open.begin() + static_cast<std::ptrdiff_t>(k * s));
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t v = identity.open[k * n + i];
      open[k * s + m + i] = v;
      open[(m + i) * s + k] = v;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) open[(m + i) * s + m + j] = condition.open[i * n + j];

  for (std::size_t r = 0; r < s; ++r) {
    const auto first = open.begin() + static_cast<std::ptrdiff_t>(r * s);
    if (std::find(first, first + static_cast<std::ptrdiff_t>(s), 1) ==
        first + static_cast<std::ptrdiff_t>(s)) {
      fail(ErrorCode::kProperty,
           "assemble_mask: row " + std::to_string(r) + " is fully masked");
    }
  }
  for (std::size_t r = 0; r < s; ++r) {
    if (!open[r * s + r]) {
      fail(ErrorCode::kProperty,
           "assemble_mask: diagonal entry " + std::to_string(r) + " is masked");
    }
  }
  return AttentionMask::from_dense(m, n, identity.instance_order, std::move(open));
}

AttentionMask build_sparse_mask(const IndicatorIndex& idx,
                                std::span<const InstanceId> instance_order,
                                TrajectoryPolicy trajectory, ConditionPolicy condition) {
  check_order(idx, instance_order);
  const std::size_t m = idx.token_count();
  const std::size_t n = instance_order.size();
  const TokenClasses tc = classify(idx);

  std::vector<std::uint32_t> background;
  for (std::size_t k = 0; k < m; ++k)
    if (idx.empty_at(k)) background.push_back(static_cast<std::uint32_t>(k));

  std::vector<std::vector<std::uint32_t>> class_cols;
  class_cols.reserve(tc.sets.size() + n);
  for (const auto& set : tc.sets) {
    std::vector<std::uint32_t> cols;
    if (set.empty()) {
      if (trajectory == TrajectoryPolicy::kForegroundOnly) {
        cols.resize(m);
        for (std::size_t j = 0; j < m; ++j) cols[j] = static_cast<std::uint32_t>(j);
      }
    } else {
      for (auto id : set) {
        const auto& ks = idx.inverse().at(id);
        std::vector<std::uint32_t> merged;
        merged.reserve(cols.size() + ks.size());
        std::set_union(cols.begin(), cols.end(), ks.begin(), ks.end(),
                       std::back_inserter(merged));
        cols = std::move(merged);
      }
      if (trajectory == TrajectoryPolicy::kForegroundOnly) {
        std::vector<std::uint32_t> merged;
        std::set_union(cols.begin(), cols.end(), background.begin(), background.end(),
                       std::back_inserter(merged));
        cols = std::move(merged);
      }
      for (auto id : set) {
        const auto pos = std::lower_bound(instance_order.begin(), instance_order.end(), id) -
                         instance_order.begin();
        cols.push_back(static_cast<std::uint32_t>(m + static_cast<std::size_t>(pos)));
      }
    }
    class_cols.push_back(std::move(cols));
  }

  std::vector<std::uint32_t> row_class(tc.class_of);
  row_class.resize(m + n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> cols;
    if (auto it = idx.inverse().find(instance_order[i]); it != idx.inverse().end()) {
      cols = it->second;
    }
    if (condition == ConditionPolicy::kAllOpen) {
      for (std::size_t j = 0; j < n; ++j) cols.push_back(static_cast<std::uint32_t>(m + j));
    }
    row_class[m + i] = static_cast<std::uint32_t>(class_cols.size());
    class_cols.push_back(std::move(cols));
  }
  return AttentionMask::from_sparse(m, n, {instance_order.begin(), instance_order.end()},
                                    std::move(row_class), std::move(class_cols));
}

std::vector<std::string> mask_invariant_violations(const AttentionMask& mask) {
  std::vector<std::string> out;
  const std::size_t m = mask.m();
  const std::size_t s = mask.size();
  bool diag = true, ident = true, traj = true, rows = true;
  for (std::size_t r = 0; r < s; ++r) {
    diag = diag && mask.is_open(r, r);
    bool any = false;
    for (std::size_t c = 0; c < s && !any; ++c) any = mask.is_open(r, c);
    rows = rows && any;
  }
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t c = m; c < s; ++c) ident = ident && mask.is_open(k, c) == mask.is_open(c, k);
    for (std::size_t j = k + 1; j < m; ++j) traj = traj && mask.is_open(k, j) == mask.is_open(j, k);
  }
  if (!diag) out.emplace_back("diagonal_open");
  if (!ident) out.emplace_back("identity_symmetry");
  if (!traj) out.emplace_back("trajectory_symmetry");
  if (!rows) out.emplace_back("no_empty_row");
  return out;
}

LossMask build_loss_mask(const IndicatorIndex& idx) {
  LossMask mask;
  mask.weights.resize(idx.token_count());
  for (std::size_t k = 0; k < idx.token_count(); ++k) mask.weights[k] = idx.empty_at(k) ? 0 : 1;
  return mask;
}

// ---- exports -------------------------------------------------------------

Json mask_to_sparse_json(const AttentionMask& mask) {
  Json pairs = Json::array();
  for (std::size_t r = 0; r < mask.size(); ++r)
    for (auto c : mask.open_columns(r)) pairs.push_back(Json::array({r, c}));
  return Json{{"format", "instmask-attention-mask"},
              {"m", mask.m()},
              {"n", mask.n()},
              {"instance_order", mask.instance_order()},
              {"pairs", std::move(pairs)}};
}

AttentionMask mask_from_sparse_json(const Json& doc, const std::string& context) {
  const auto m = uint_from_json(require_key(doc, "m", context), context + ".m");
  const auto n = uint_from_json(require_key(doc, "n", context), context + ".n");
  const Json& order_node = require_key(doc, "instance_order", context);
  std::vector<InstanceId> order;
  for (const auto& id : order_node) order.push_back(uint_from_json(id, context + ".instance_order"));
  if (order.size() != n) fail(ErrorCode::kParse, context + ": instance_order length != n");
  const std::size_t s = m + n;
  std::vector<std::uint8_t> open(s * s, 0);
  const Json& pairs = require_key(doc, "pairs", context);
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const std::string ctx = context + ".pairs[" + std::to_string(e) + "]";
    if (!pairs[e].is_array() || pairs[e].size() != 2) {
      fail(ErrorCode::kParse, ctx + ": expected [row, col]");
    }
    const auto r = uint_from_json(pairs[e][0], ctx);
    const auto c = uint_from_json(pairs[e][1], ctx);
    if (r >= s || c >= s) fail(ErrorCode::kParse, ctx + ": index out of range");
    open[r * s + c] = 1;
  }
  return AttentionMask::from_dense(m, n, std::move(order), std::move(open));
}

std::vector<std::uint8_t> encode_dense_mask(const AttentionMask& mask) {
  std::vector<std::uint8_t> out{'I', 'M', 'A', 'M', 1, 0, 0, 0};
  for (auto v : {static_cast<std::uint32_t>(mask.m()), static_cast<std::uint32_t>(mask.n())})
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  const std::size_t s = mask.size();
  std::vector<std::uint8_t> payload((s * s + 7) / 8, 0);
  for (std::size_t r = 0; r < s; ++r) {
    for (auto c : mask.open_columns(r)) {
      const std::size_t i = r * s + c;
      payload[i >> 3] |= static_cast<std::uint8_t>(1U << (i & 7));
    }
  }
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

AttentionMask decode_dense_mask(std::span<const std::uint8_t> bytes,
                                std::vector<InstanceId> instance_order) {
  if (bytes.size() < 16 || bytes[0] != 'I' || bytes[1] != 'M' || bytes[2] != 'A' ||
      bytes[3] != 'M' || bytes[4] != 1 || bytes[5] != 0) {
    fail(ErrorCode::kParse, "dense mask: bad header");
  }
  auto u32 = [&](std::size_t at) {
    return std::uint32_t{bytes[at]} | std::uint32_t{bytes[at + 1]} << 8 |
           std::uint32_t{bytes[at + 2]} << 16 | std::uint32_t{bytes[at + 3]} << 24;
  };
  const std::size_t m = u32(8), n = u32(12), s = m + n;
  if (bytes.size() != 16 + (s * s + 7) / 8) {
    fail(ErrorCode::kParse, "dense mask: payload size does not match header");
  }
  std::vector<std::uint8_t> open(s * s);
  for (std::size_t i = 0; i < s * s; ++i) open[i] = (bytes[16 + (i >> 3)] >> (i & 7)) & 1U;
  return AttentionMask::from_dense(m, n, std::move(instance_order), std::move(open));
}

Json loss_mask_to_json(const LossMask& mask) {
  return Json{{"format", "instmask-loss-mask"},
              {"m", mask.weights.size()},
              {"weights", mask.weights}};
}

}  // namespace instmask
