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

#include "instmask/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "instmask/error.hpp"
#include "instmask/rng.hpp"

namespace instmask {

std::vector<double> fourier(std::span<const double> x, std::uint32_t num_frequencies) {
  if (num_frequencies < 1) {
    fail(ErrorCode::kInvalidArgument, "fourier: need at least one frequency");
  }
  std::vector<double> out;
  out.reserve(x.size() * 2 * num_frequencies);
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "fourier: non-finite input");
    double freq = std::numbers::pi;
    for (std::uint32_t l = 0; l < num_frequencies; ++l, freq *= 2.0) {
      out.push_back(std::sin(freq * v));
      out.push_back(std::cos(freq * v));
    }
  }
  return out;
}

std::uint64_t category_hash(std::uint64_t seed, std::string_view category) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 0x100000001B3ULL;
  };
  for (int i = 0; i < 8; ++i) feed(static_cast<std::uint8_t>(seed >> (8 * i)));
  for (char c : category) feed(static_cast<std::uint8_t>(c));
  return h;
}

std::vector<double> pseudo_text_encode(std::string_view category, std::size_t d_text,
                                       std::uint64_t seed) {
  if (category.empty()) fail(ErrorCode::kInvalidArgument, "text encoder: empty category");
  if (d_text == 0) fail(ErrorCode::kInvalidArgument, "text encoder: d_text must be >= 1");
  CounterRng rng(category_hash(seed, category));
  std::vector<double> v(d_text);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

MlpParams init_mlp_params(std::uint64_t seed, std::uint32_t num_frequencies,
                          std::size_t d_text, std::size_t hidden, std::size_t d_model) {
  if (num_frequencies < 1 || d_text < 1 || hidden < 1 || d_model < 1) {
    fail(ErrorCode::kInvalidArgument, "mlp: all dimensions must be >= 1");
  }
  MlpParams p;
  p.seed = seed;
  p.num_frequencies = num_frequencies;
  p.d_text = d_text;
  p.hidden = hidden;
  p.d_model = d_model;
  CounterRng rng(seed);
  const std::size_t in = p.input_dim();
  p.w1 = Matrix(hidden, in);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& w : p.w1.data()) w = s1 * rng.normal();
  p.b1.assign(hidden, 0.0);
  p.w2 = Matrix(d_model, hidden);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& w : p.w2.data()) w = s2 * rng.normal();
  p.b2.assign(d_model, 0.0);
  return p;
}

void validate_mlp_params(const MlpParams& p) {
  if (p.w1.rows() != p.hidden || p.w1.cols() != p.input_dim() || p.b1.size() != p.hidden ||
      p.w2.rows() != p.d_model || p.w2.cols() != p.hidden || p.b2.size() != p.d_model) {
    fail(ErrorCode::kShape, "mlp: layer shapes do not chain (input " +
                                std::to_string(p.input_dim()) + " -> hidden " +
                                std::to_string(p.hidden) + " -> d_model " +
                                std::to_string(p.d_model) + ")");
  }
}

std::vector<double> identity_features(const Instance& inst, const MlpParams& params,
                                      const FourierMap& fmap, double id_norm) {
  if (fmap.num_frequencies != params.num_frequencies) {
    fail(ErrorCode::kShape, "embed: Fourier band count differs from the MLP params");
  }
  if (!(id_norm > 0.0)) fail(ErrorCode::kInvalidArgument, "embed: id_norm must be > 0");
  auto feats = pseudo_text_encode(inst.category, params.d_text, params.seed);
  const auto size_feats = fourier(inst.size, fmap.num_frequencies);
  const double id = static_cast<double>(inst.tracking_id) / id_norm;
  const auto id_feats = fourier(std::span<const double>(&id, 1), fmap.num_frequencies);
  feats.insert(feats.end(), size_feats.begin(), size_feats.end());
  feats.insert(feats.end(), id_feats.begin(), id_feats.end());
  return feats;
}

IdentityEmbedding embed_instance(const Instance& inst, const MlpParams& params,
                                 const FourierMap& fmap, double id_norm) {
  validate_mlp_params(params);
  const auto x = identity_features(inst, params, fmap, id_norm);
  if (x.size() != params.input_dim()) fail(ErrorCode::kShape, "embed: feature length mismatch");

  std::vector<double> h(params.hidden);
  for (std::size_t r = 0; r < params.hidden; ++r) {
    double acc = params.b1[r];
    const auto w = params.w1.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) acc += w[c] * x[c];
    h[r] = acc / (1.0 + std::exp(-acc));
  }
  IdentityEmbedding out;
  out.instance_id = inst.tracking_id;
  out.category = inst.category;
  out.size = inst.size;
  out.normalized_id = static_cast<double>(inst.tracking_id) / id_norm;
  out.vector.resize(params.d_model);
  for (std::size_t r = 0; r < params.d_model; ++r) {
    double acc = params.b2[r];
    const auto w = params.w2.row(r);
    for (std::size_t c = 0; c < params.hidden; ++c) acc += w[c] * h[c];
    out.vector[r] = acc;
  }
  return out;
}

std::vector<IdentityEmbedding> build_condition_set(const Scene& scene,
                                                   const MlpParams& params) {
  std::vector<const Instance*> order;
  for (const auto& inst : scene.instances) order.push_back(&inst);
  std::sort(order.begin(), order.end(), [](const Instance* a, const Instance* b) {
    return a->tracking_id < b->tracking_id;
  });
  std::vector<IdentityEmbedding> out;
  if (order.empty()) return out;
  const double id_norm = static_cast<double>(order.back()->tracking_id) + 1.0;
  const FourierMap fmap{params.num_frequencies};
  for (const Instance* inst : order) out.push_back(embed_instance(*inst, params, fmap, id_norm));
  return out;
}

Matrix condition_tokens(std::span<const IdentityEmbedding> set) {
  if (set.empty()) return {};
  Matrix g(set.size(), set.front().vector.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set[i].vector.size() != g.cols()) fail(ErrorCode::kShape, "condition set: ragged");
    std::copy(set[i].vector.begin(), set[i].vector.end(), g.row(i).begin());
  }
  return g;
}

// ---- params file ---------------------------------------------------------

namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (double v : m.row(r)) row.push_back(real_to_json(v));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(std::span<const double> v) {
  Json out = Json::array();
  for (double x : v) out.push_back(real_to_json(x));
  return out;
}

Matrix matrix_from_json(const Json& node, std::size_t rows, std::size_t cols,
                        const std::string& ctx) {
  if (!node.is_array() || node.size() != rows) {
    fail(ErrorCode::kParse, ctx + ": expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!node[r].is_array() || node[r].size() != cols) {
      fail(ErrorCode::kParse, ctx + "[" + std::to_string(r) + "]: expected " +
                                  std::to_string(cols) + " columns");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(r, c) = real_from_json(node[r][c], ctx + "[" + std::to_string(r) + "][" +
                                               std::to_string(c) + "]");
    }
  }
  return m;
}

std::vector<double> vector_from_json(const Json& node, std::size_t len, const std::string& ctx) {
  if (!node.is_array() || node.size() != len) {
    fail(ErrorCode::kParse, ctx + ": expected " + std::to_string(len) + " entries");
  }
  std::vector<double> v(len);
  for (std::size_t i = 0; i < len; ++i) {
    v[i] = real_from_json(node[i], ctx + "[" + std::to_string(i) + "]");
  }
  return v;
}

}  // namespace

std::string mlp_params_to_text(const MlpParams& p) {
  validate_mlp_params(p);
  Json doc{{"format", "instmask-mlp-params"},
           {"version", 1},
           {"seed", p.seed},
           {"L", p.num_frequencies},
           {"d_text", p.d_text},
           {"hidden", p.hidden},
           {"d_model", p.d_model},
           {"activation", "x*sigmoid(x)"},
           {"w1", matrix_to_json(p.w1)},
           {"b1", vector_to_json(p.b1)},
           {"w2", matrix_to_json(p.w2)},
           {"b2", vector_to_json(p.b2)}};
  return dump_json(doc);
}

MlpParams mlp_params_from_text(const std::string& text, const std::string& source) {
  const Json doc = parse_json(text, source);
  MlpParams p;
  p.seed = uint_from_json(require_key(doc, "seed", source), source + ".seed");
  p.num_frequencies =
      static_cast<std::uint32_t>(uint_from_json(require_key(doc, "L", source), source + ".L"));
  p.d_text = uint_from_json(require_key(doc, "d_text", source), source + ".d_text");
  p.hidden = uint_from_json(require_key(doc, "hidden", source), source + ".hidden");
  p.d_model = uint_from_json(require_key(doc, "d_model", source), source + ".d_model");
  if (p.num_frequencies < 1 || p.d_text < 1 || p.hidden < 1 || p.d_model < 1) {
    fail(ErrorCode::kParse, source + ": dimensions must be >= 1");
  }
  p.w1 = matrix_from_json(require_key(doc, "w1", source), p.hidden, p.input_dim(),
                          source + ".w1");
  p.b1 = vector_from_json(require_key(doc, "b1", source), p.hidden, source + ".b1");
  p.w2 = matrix_from_json(require_key(doc, "w2", source), p.d_model, p.hidden, source + ".w2");
  p.b2 = vector_from_json(require_key(doc, "b2", source), p.d_model, source + ".b2");
  return p;
}

void save_mlp_params(const MlpParams& params, const std::filesystem::path& path) {
  write_text(path, mlp_params_to_text(params));
}

MlpParams load_mlp_params(const std::filesystem::path& path) {
  return mlp_params_from_text(read_text_file(path), path.string());
}

}  // namespace instmask
