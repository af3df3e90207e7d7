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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "instmask/latent.hpp"
#include "instmask/serialize.hpp"

namespace instmask {

// Stand-in for -inf in additive masks: the most negative finite double.
inline constexpr double kMaskedValue = std::numeric_limits<double>::lowest();

enum class TrajectoryPolicy {
  kForegroundOnly,  // mask only pairs of foreground tokens with disjoint sets
  kStrict,          // mask every pair with disjoint sets, background included
};

enum class ConditionPolicy {
  kIdentityOnly,  // condition tokens see only themselves among conditions
  kAllOpen,
};

const char* policy_name(TrajectoryPolicy p);
const char* policy_name(ConditionPolicy p);

// Visual <-> condition block. open[k * n + i] == 1 iff entry (k, m+i) and
// entry (m+i, k) are unmasked.
struct IdentityBlock {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<InstanceId> instance_order;
  std::vector<std::uint8_t> open;

  bool at(std::size_t k, std::size_t i) const { return open[k * n + i] != 0; }
};

// Visual <-> visual block, m x m row-major.
struct TrajectoryBlock {
  std::size_t m = 0;
  std::vector<std::uint8_t> open;

  bool at(std::size_t k, std::size_t j) const { return open[k * m + j] != 0; }
};

// Condition <-> condition block, n x n row-major.
struct ConditionBlock {
  std::size_t n = 0;
  std::vector<std::uint8_t> open;

  bool at(std::size_t i, std::size_t j) const { return open[i * n + j] != 0; }
};

// `instance_order` must be strictly increasing and contain every id that
// appears in the index.
IdentityBlock build_identity_mask(const IndicatorIndex& idx,
                                  std::span<const InstanceId> instance_order);
TrajectoryBlock build_trajectory_mask(const IndicatorIndex& idx, TrajectoryPolicy policy);
ConditionBlock build_condition_block(std::size_t n, ConditionPolicy policy);

/// Additive (m+n) x (m+n) mask. Indices [0, m) are visual tokens in indicator
/// order, [m, m+n) condition tokens in ascending tracking id order.
///
/// Dense storage is a byte per entry. Sparse storage groups rows into classes
/// that share a column list (visual rows with equal I(v_k) always share one);
/// the diagonal is implicit and always open.
class AttentionMask {
 public:
  enum class Storage { kDense, kSparse };

  static AttentionMask from_dense(std::size_t m, std::size_t n,
                                  std::vector<InstanceId> instance_order,
                                  std::vector<std::uint8_t> open);
  static AttentionMask from_sparse(std::size_t m, std::size_t n,
                                   std::vector<InstanceId> instance_order,
                                   std::vector<std::uint32_t> row_class,
                                   std::vector<std::vector<std::uint32_t>> class_cols);

  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return m_ + n_; }
  Storage storage() const { return storage_; }
  const std::vector<InstanceId>& instance_order() const { return instance_order_; }

  bool is_open(std::size_t row, std::size_t col) const;
  double additive(std::size_t row, std::size_t col) const {
    return is_open(row, col) ? 0.0 : kMaskedValue;
  }
  // Writes the additive row (0 or kMaskedValue) into `out` (size() entries).
  void fill_row(std::size_t row, std::span<double> out) const;
  // Sorted open columns of a row.
  std::vector<std::uint32_t> open_columns(std::size_t row) const;
  std::size_t open_count() const;

  AttentionMask to_dense() const;
  std::size_t class_count() const { return class_cols_.size(); }

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  Storage storage_ = Storage::kDense;
  std::vector<InstanceId> instance_order_;
  std::vector<std::uint8_t> dense_;
  std::vector<std::uint32_t> row_class_;
  std::vector<std::vector<std::uint32_t>> class_cols_;
};

bool masks_equal(const AttentionMask& a, const AttentionMask& b);

// Dense assembly from the three blocks. Throws Error(kProperty) naming the
// first row with no open entry, or the first masked diagonal entry.
AttentionMask assemble_mask(const IdentityBlock& identity, const TrajectoryBlock& trajectory,
                            const ConditionBlock& condition);

// Direct sparse construction from the index, without materializing blocks.
AttentionMask build_sparse_mask(const IndicatorIndex& idx,
                                std::span<const InstanceId> instance_order,
                                TrajectoryPolicy trajectory, ConditionPolicy condition);

// Names of violated structural invariants ("diagonal_open",
// "identity_symmetry", "trajectory_symmetry", "no_empty_row"); empty if none.
std::vector<std::string> mask_invariant_violations(const AttentionMask& mask);

struct LossMask {
  std::vector<std::uint8_t> weights;  // 1 iff I(v_k) is non-empty

  bool operator==(const LossMask&) const = default;
};

LossMask build_loss_mask(const IndicatorIndex& idx);

// {format, m, n, instance_order, pairs: [[row, col], ...]} listing every open
// entry in row-major order.
Json mask_to_sparse_json(const AttentionMask& mask);
AttentionMask mask_from_sparse_json(const Json& doc, const std::string& context);

// 16-byte header: magic "IMAM" | u16 version (1) | u16 0 | u32 m | u32 n,
// then the (m+n)^2 open bits row-major, LSB first in each byte.
std::vector<std::uint8_t> encode_dense_mask(const AttentionMask& mask);
AttentionMask decode_dense_mask(std::span<const std::uint8_t> bytes,
                                std::vector<InstanceId> instance_order);

Json loss_mask_to_json(const LossMask& mask);

}  // namespace instmask
