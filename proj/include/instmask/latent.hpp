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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "instmask/geometry.hpp"
#include "instmask/scene.hpp"
#include "instmask/serialize.hpp"

namespace instmask {

struct LatentDims {
  std::uint32_t frames = 0;  // T_c
  std::uint32_t height = 0;  // H_c
  std::uint32_t width = 0;   // W_c

  std::size_t token_count() const { return std::size_t{frames} * height * width; }
  // k = t * (H_c * W_c) + row * W_c + col
  std::size_t token(std::uint32_t t, std::uint32_t row, std::uint32_t col) const {
    return (std::size_t{t} * height + row) * width + col;
  }

  bool operator==(const LatentDims&) const = default;
};

inline LatentDims latent_dims(const SceneDims& d) {
  return {d.latent_frames(), d.latent_height(), d.latent_width()};
}

struct LatentMask {
  InstanceId instance_id = 0;
  LatentDims dims;
  std::uint32_t block_volume = 1;       // f_t * f_h * f_w
  std::vector<std::uint32_t> counts;    // set pixels per cell
  std::vector<double> occupancy;        // counts / block_volume, in [0, 1]
  std::vector<std::uint8_t> binarized;  // occupancy > theta

  bool operator==(const LatentMask&) const = default;
};

// Block-mean resampling onto the latent grid; with integer factors this is
// what trilinear interpolation onto cell centers reduces to. Cells are
// binarized with a strict `occupancy > theta`.
LatentMask downsample_trilinear(const PixelMaskStack& stack, std::uint32_t f_t,
                                std::uint32_t f_h, std::uint32_t f_w, double theta);

inline constexpr double kDefaultTheta = 0.5;

/// Token-to-instance index I(v_k) plus its inverse.
class IndicatorIndex {
 public:
  IndicatorIndex() = default;
  explicit IndicatorIndex(LatentDims dims);

  const LatentDims& dims() const { return dims_; }
  std::size_t token_count() const { return forward_.size(); }

  // Sorted ids covering token k.
  const std::vector<InstanceId>& at(std::size_t k) const { return forward_[k]; }
  const std::vector<std::vector<InstanceId>>& forward() const { return forward_; }
  // Sorted token indices per id. Ids with no coverage are absent.
  const std::map<InstanceId, std::vector<std::uint32_t>>& inverse() const {
    return inverse_;
  }

  bool covers(std::size_t k, InstanceId id) const;
  bool empty_at(std::size_t k) const { return forward_[k].empty(); }

  // Adds id to I(v_k). Calls must arrive in nondecreasing id order per token
  // and nondecreasing k per id (build_indicator guarantees this).
  void add(std::size_t k, InstanceId id);

  bool operator==(const IndicatorIndex&) const = default;

 private:
  LatentDims dims_;
  std::vector<std::vector<InstanceId>> forward_;
  std::map<InstanceId, std::vector<std::uint32_t>> inverse_;
};

IndicatorIndex build_indicator(std::span<const LatentMask> masks, const LatentDims& dims);

// Per-view indices laid end to end along the token axis (view order as given).
IndicatorIndex concat_indicators(std::span<const IndicatorIndex> parts);

// {m, dims, forward: [[k, [ids]]...], inverse: [[id, [ks]]...]}; tokens and
// ids with empty sets are omitted.
Json indicator_to_json(const IndicatorIndex& idx);
IndicatorIndex indicator_from_json(const Json& doc, const std::string& context);

// True iff every I_a(v_k) is a subset of I_b(v_k).
bool indicator_subset(const IndicatorIndex& a, const IndicatorIndex& b);

Json latent_masks_to_json(std::span<const LatentMask> masks, double theta);

}  // namespace instmask
