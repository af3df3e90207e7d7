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

#include "instmask/latent.hpp"

#include <algorithm>

#include "instmask/error.hpp"

namespace instmask {

LatentMask downsample_trilinear(const PixelMaskStack& stack, std::uint32_t f_t,
                                std::uint32_t f_h, std::uint32_t f_w, double theta) {
  if (f_t == 0 || f_h == 0 || f_w == 0) {
    fail(ErrorCode::kInvalidArgument, "downsample: compression factors must be >= 1");
  }
  if (!(theta >= 0.0 && theta < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "downsample: theta must lie in [0, 1)");
  }
  if (stack.frames() % f_t || stack.height() % f_h || stack.width() % f_w) {
    fail(ErrorCode::kShape, "downsample: mask dims " + std::to_string(stack.frames()) +
                                "x" + std::to_string(stack.height()) + "x" +
                                std::to_string(stack.width()) +
                                " are not divisible by factors " + std::to_string(f_t) +
                                "x" + std::to_string(f_h) + "x" + std::to_string(f_w));
  }
  LatentMask out;
  out.instance_id = stack.instance_id();
  out.dims = {stack.frames() / f_t, stack.height() / f_h, stack.width() / f_w};
  out.block_volume = f_t * f_h * f_w;
  const std::size_t m = out.dims.token_count();
  out.counts.assign(m, 0);

  for (std::uint32_t t = 0; t < stack.frames(); ++t) {
    for (std::uint32_t r = 0; r < stack.height(); ++r) {
      const std::size_t base = out.dims.token(t / f_t, r / f_h, 0);
      for (std::uint32_t c = 0; c < stack.width(); ++c) {
        out.counts[base + c / f_w] += stack.get(t, r, c);
      }
    }
  }
  out.occupancy.resize(m);
  out.binarized.resize(m);
  const double volume = out.block_volume;
  for (std::size_t k = 0; k < m; ++k) {
    out.occupancy[k] = out.counts[k] / volume;
    out.binarized[k] = out.occupancy[k] > theta ? 1 : 0;
  }
  return out;
}

IndicatorIndex::IndicatorIndex(LatentDims dims)
    : dims_(dims), forward_(dims.token_count()) {}

bool IndicatorIndex::covers(std::size_t k, InstanceId id) const {
  const auto& ids = forward_[k];
  return std::binary_search(ids.begin(), ids.end(), id);
}

void IndicatorIndex::add(std::size_t k, InstanceId id) {
  auto& ids = forward_.at(k);
  if (!ids.empty() && ids.back() >= id) {
    fail(ErrorCode::kInvalidArgument, "indicator: ids must be added in increasing order");
  }
  ids.push_back(id);
  auto& ks = inverse_[id];
  if (!ks.empty() && ks.back() >= k) {
    fail(ErrorCode::kInvalidArgument, "indicator: tokens must be added in increasing order");
  }
  ks.push_back(static_cast<std::uint32_t>(k));
}

IndicatorIndex build_indicator(std::span<const LatentMask> masks, const LatentDims& dims) {
  std::vector<const LatentMask*> order;
  for (const auto& mask : masks) {
    if (!(mask.dims == dims) || mask.binarized.size() != dims.token_count()) {
      fail(ErrorCode::kShape, "indicator: latent mask of instance " +
                                  std::to_string(mask.instance_id) +
                                  " does not match the token grid");
    }
    order.push_back(&mask);
  }
  std::sort(order.begin(), order.end(),
            [](const LatentMask* a, const LatentMask* b) { return a->instance_id < b->instance_id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->instance_id == order[i - 1]->instance_id) {
      fail(ErrorCode::kInvalidArgument,
           "indicator: duplicate instance id " + std::to_string(order[i]->instance_id));
    }
  }
  IndicatorIndex idx(dims);
  for (const LatentMask* mask : order) {
    for (std::size_t k = 0; k < dims.token_count(); ++k) {
      if (mask->binarized[k]) idx.add(k, mask->instance_id);
    }
  }
  return idx;
}

IndicatorIndex concat_indicators(std::span<const IndicatorIndex> parts) {
  if (parts.empty()) return IndicatorIndex();
  const LatentDims& d = parts.front().dims();
  for (const auto& p : parts) {
    if (!(p.dims() == d)) fail(ErrorCode::kShape, "concat: view grids differ");
  }
  // Concatenated views stack along the frame axis of the token grid.
  LatentDims total{static_cast<std::uint32_t>(d.frames * parts.size()), d.height, d.width};
  std::map<InstanceId, std::vector<std::size_t>> tokens;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (const auto& [id, ks] : p.inverse()) {
      auto& dst = tokens[id];
      for (auto k : ks) dst.push_back(offset + k);
    }
    offset += p.token_count();
  }
  IndicatorIndex idx(total);
  for (const auto& [id, ks] : tokens)
    for (auto k : ks) idx.add(k, id);
  return idx;
}

Json indicator_to_json(const IndicatorIndex& idx) {
  Json fwd = Json::array();
  for (std::size_t k = 0; k < idx.token_count(); ++k) {
    if (!idx.empty_at(k)) fwd.push_back(Json::array({k, idx.at(k)}));
  }
  Json inv = Json::array();
  for (const auto& [id, ks] : idx.inverse()) inv.push_back(Json::array({id, ks}));
  const auto& d = idx.dims();
  return Json{{"format", "instmask-indicator"},
              {"m", idx.token_count()},
              {"dims", {d.frames, d.height, d.width}},
              {"forward", std::move(fwd)},
              {"inverse", std::move(inv)}};
}

IndicatorIndex indicator_from_json(const Json& doc, const std::string& context) {
  const Json& dims = require_key(doc, "dims", context);
  if (!dims.is_array() || dims.size() != 3) {
    fail(ErrorCode::kParse, context + ": dims must be [T_c, H_c, W_c]");
  }
  LatentDims d{static_cast<std::uint32_t>(uint_from_json(dims[0], context + ".dims[0]")),
               static_cast<std::uint32_t>(uint_from_json(dims[1], context + ".dims[1]")),
               static_cast<std::uint32_t>(uint_from_json(dims[2], context + ".dims[2]"))};
  const auto m = uint_from_json(require_key(doc, "m", context), context + ".m");
  if (m != d.token_count()) fail(ErrorCode::kParse, context + ": m does not match dims");

  std::map<InstanceId, std::vector<std::size_t>> by_id;
  const Json& fwd = require_key(doc, "forward", context);
  for (std::size_t e = 0; e < fwd.size(); ++e) {
    const std::string ctx = context + ".forward[" + std::to_string(e) + "]";
    if (!fwd[e].is_array() || fwd[e].size() != 2 || !fwd[e][1].is_array()) {
      fail(ErrorCode::kParse, ctx + ": expected [k, [ids]]");
    }
    const auto k = uint_from_json(fwd[e][0], ctx);
    if (k >= m) fail(ErrorCode::kParse, ctx + ": token index out of range");
    for (const auto& id : fwd[e][1]) by_id[uint_from_json(id, ctx)].push_back(k);
  }
  IndicatorIndex idx(d);
  for (auto& [id, ks] : by_id) {
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (auto k : ks) idx.add(k, id);
  }
  // The inverse list is redundant; when present it must agree.
  if (auto it = doc.find("inverse"); it != doc.end()) {
    std::map<InstanceId, std::vector<std::uint32_t>> inv;
    for (const auto& entry : *it) {
      if (!entry.is_array() || entry.size() != 2) {
        fail(ErrorCode::kParse, context + ".inverse: expected [id, [ks]]");
      }
      auto& ks = inv[uint_from_json(entry[0], context + ".inverse")];
      for (const auto& k : entry[1]) {
        ks.push_back(static_cast<std::uint32_t>(uint_from_json(k, context + ".inverse")));
      }
    }
    if (inv != idx.inverse()) {
      fail(ErrorCode::kParse, context + ": forward and inverse lists disagree");
    }
  }
  return idx;
}

bool indicator_subset(const IndicatorIndex& a, const IndicatorIndex& b) {
  if (a.token_count() != b.token_count()) return false;
  for (std::size_t k = 0; k < a.token_count(); ++k) {
    const auto& sa = a.at(k);
    const auto& sb = b.at(k);
    if (!std::includes(sb.begin(), sb.end(), sa.begin(), sa.end())) return false;
  }
  return true;
}

Json latent_masks_to_json(std::span<const LatentMask> masks, double theta) {
  Json list = Json::array();
  for (const auto& mask : masks) {
    Json occ = Json::array();
    for (auto v : mask.occupancy) occ.push_back(real_to_json(v));
    list.push_back({{"instance_id", mask.instance_id},
                    {"dims", {mask.dims.frames, mask.dims.height, mask.dims.width}},
                    {"occupancy", std::move(occ)},
                    {"binarized", mask.binarized}});
  }
  return Json{{"format", "instmask-latent"},
              {"theta", real_to_json(theta)},
              {"masks", std::move(list)}};
}

}  // namespace instmask
