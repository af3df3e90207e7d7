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

#include <cmath>
#include <numbers>

#include "instmask/conditioning.hpp"
#include "instmask/pipeline.hpp"
#include "test_util.hpp"

using namespace instmask;
using testutil::expect_error;

namespace {

Instance make_instance(InstanceId id, const std::string& category, Vec3 size) {
  Instance inst;
  inst.tracking_id = id;
  inst.category = category;
  inst.size = size;
  inst.poses[0] = Pose{{10, 0, 1}, 0.0};
  return inst;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_SUITE("conditioning") {

TEST_CASE("fourier features at zero and half period") {
  const double zero = 0.0, one = 1.0;
  CHECK(fourier(std::span(&zero, 1), 2) == std::vector<double>{0, 1, 0, 1});
  const auto f = fourier(std::span(&one, 1), 1);
  REQUIRE(f.size() == 2);
  CHECK(std::abs(f[0]) < 1e-15);
  CHECK(f[1] == -1.0);
}

TEST_CASE("fourier features equal direct trig evaluation") {
  const std::vector<double> x{0.25, 0.5};
  const auto f = fourier(x, 2);
  REQUIRE(f.size() == 8);
  std::size_t i = 0;
  for (double v : x) {
    for (int l = 0; l < 2; ++l) {
      const double a = std::ldexp(std::numbers::pi, l) * v;
      CHECK(f[i++] == doctest::Approx(std::sin(a)).epsilon(1e-15));
      CHECK(f[i++] == doctest::Approx(std::cos(a)).epsilon(1e-15));
    }
  }
}

TEST_CASE("fourier output is bounded and sized 2L per component") {
  CounterRng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(1 + rng.next_u64() % 5);
    for (auto& v : x) v = 100 * rng.normal();
    const std::uint32_t l = 1 + rng.next_u64() % 12;
    const auto f = fourier(x, l);
    CHECK(f.size() == x.size() * 2 * l);
    CHECK(FourierMap{l}.output_dim(x.size()) == f.size());
    for (double v : f) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
  const double nan = std::nan("");
  expect_error([&] { fourier(std::span(&nan, 1), 2); }, ErrorCode::kInvalidArgument);
  expect_error([] { fourier({}, 0); }, ErrorCode::kInvalidArgument);
}

TEST_CASE("pseudo text encoder is stable, unit norm and category specific") {
  const auto a = pseudo_text_encode("car", 32, 7);
  CHECK(a == pseudo_text_encode("car", 32, 7));
  CHECK(std::abs(std::sqrt(dot(a, a)) - 1.0) < 1e-12);
  const auto bus = pseudo_text_encode("bus", 32, 7);
  CHECK(std::abs(std::sqrt(dot(bus, bus)) - 1.0) < 1e-12);
  const auto truck = pseudo_text_encode("truck", 32, 7);
  CHECK(dot(a, truck) < 0.999);
  CHECK(pseudo_text_encode("car", 32, 8) != a);
  CHECK(category_hash(7, "car") != category_hash(7, "cat"));
  expect_error([] { pseudo_text_encode("", 32, 7); }, ErrorCode::kInvalidArgument, "empty");
}

TEST_CASE("feature concatenation length is d_text + 6L + 2L") {
  for (std::uint32_t l : {1u, 4u, 8u}) {
    const auto params = init_mlp_params(1, l, 16, 8, 12);
    const auto inst = make_instance(3, "pedestrian", {0.7, 0.7, 1.8});
    CHECK(identity_features(inst, params, FourierMap{l}, 10.0).size() == 16 + 6 * l + 2 * l);
    CHECK(params.input_dim() == 16 + 8 * l);
    CHECK(embed_instance(inst, params, FourierMap{l}, 10.0).vector.size() == 12);
  }
}

TEST_CASE("zero weights annihilate the embedding") {
  auto params = init_mlp_params(1, 4);
  for (auto* m : {&params.w1, &params.w2})
    for (auto& v : m->data()) v = 0.0;
  std::fill(params.b1.begin(), params.b1.end(), 0.0);
  std::fill(params.b2.begin(), params.b2.end(), 0.0);
  const auto g = embed_instance(make_instance(4, "car", {4, 2, 1.5}), params, FourierMap{4}, 5.0);
  for (double v : g.vector) CHECK(v == 0.0);
}

TEST_CASE("embedding equals a hand-written two-layer pass") {
  const auto params = init_mlp_params(9, 3, 8, 6, 5);
  const auto inst = make_instance(12, "bicycle", {1.7, 0.6, 1.2});
  const double id_norm = 20.0;
  // Features rebuilt from scratch.
  std::vector<double> x = pseudo_text_encode("bicycle", 8, 9);
  for (double s : inst.size)
    for (int l = 0; l < 3; ++l) {
      x.push_back(std::sin(std::ldexp(std::numbers::pi, l) * s));
      x.push_back(std::cos(std::ldexp(std::numbers::pi, l) * s));
    }
  for (int l = 0; l < 3; ++l) {
    x.push_back(std::sin(std::ldexp(std::numbers::pi, l) * (12.0 / id_norm)));
    x.push_back(std::cos(std::ldexp(std::numbers::pi, l) * (12.0 / id_norm)));
  }
  std::vector<double> hidden(6);
  for (std::size_t j = 0; j < 6; ++j) {
    double a = params.b1[j];
    for (std::size_t i = 0; i < x.size(); ++i) a += params.w1(j, i) * x[i];
    hidden[j] = a / (1.0 + std::exp(-a));
  }
  const auto g = embed_instance(inst, params, FourierMap{3}, id_norm);
  for (std::size_t o = 0; o < 5; ++o) {
    double a = params.b2[o];
    for (std::size_t j = 0; j < 6; ++j) a += params.w2(o, j) * hidden[j];
    CHECK(g.vector[o] == doctest::Approx(a).epsilon(1e-12));
  }
  CHECK(g.normalized_id == 12.0 / id_norm);
  CHECK(g.category == "bicycle");
}

TEST_CASE("tracking id alone separates embeddings") {
  const auto params = init_mlp_params(7, 8);
  const auto a = embed_instance(make_instance(3, "car", {4, 2, 1.5}), params, FourierMap{8}, 10);
  const auto b = embed_instance(make_instance(4, "car", {4, 2, 1.5}), params, FourierMap{8}, 10);
  CHECK(a.vector != b.vector);
  const auto a2 = embed_instance(make_instance(3, "car", {4, 2, 1.5}), params, FourierMap{8}, 10);
  CHECK(a.vector == a2.vector);
}

TEST_CASE("init scale and shape checks") {
  const auto p = init_mlp_params(5, 8);
  CHECK(p.w1.rows() == 64);
  CHECK(p.w1.cols() == 32 + 64);
  CHECK(p.w2.rows() == 32);
  CHECK(p.w2.cols() == 64);
  for (double b : p.b1) CHECK(b == 0.0);
  double ss = 0.0;
  for (double v : p.w1.data()) ss += v * v;
  // Entries are N(0, 1/fan_in): the mean square is near 1/96.
  CHECK(ss / p.w1.data().size() == doctest::Approx(1.0 / 96).epsilon(0.15));
  CHECK_NOTHROW(validate_mlp_params(p));
  auto bad = p;
  bad.b2.pop_back();
  expect_error([&] { validate_mlp_params(bad); }, ErrorCode::kShape);
  expect_error([&] { embed_instance(make_instance(1, "car", {1, 1, 1}), p, FourierMap{4}, 2); },
               ErrorCode::kShape);
}

TEST_CASE("condition set is sorted by tracking id") {
  Scene scene = generate_synthetic_scene(1, [] {
    GeneratorSpec s;
    s.dims = {4, 32, 32, 1, 8, 8};
    s.instance_count = 3;
    return s;
  }());
  scene.instances[0].tracking_id = 7;
  scene.instances[1].tracking_id = 2;
  scene.instances[2].tracking_id = 5;
  const auto params = init_mlp_params(7, 8);
  const auto set = build_condition_set(scene, params);
  REQUIRE(set.size() == 3);
  CHECK(set[0].instance_id == 2);
  CHECK(set[1].instance_id == 5);
  CHECK(set[2].instance_id == 7);
  CHECK(set[0].normalized_id == 2.0 / 8.0);
  const Matrix g = condition_tokens(set);
  CHECK(g.rows() == 3);
  CHECK(g.cols() == 32);

  scene.instances.clear();
  CHECK(build_condition_set(scene, params).empty());
}

TEST_CASE("condition order matches the mask layout") {
  GeneratorSpec spec;
  spec.instance_count = 6;
  const auto scene = generate_synthetic_scene(7, spec);
  const auto set = build_condition_set(scene, init_mlp_params(7, 8));
  const auto bundle = build_view_bundle(scene, 0, MaskOptions{});
  REQUIRE(set.size() == bundle.instance_order.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    CHECK(set[i].instance_id == bundle.instance_order[i]);
  CHECK(bundle.mask.instance_order() == bundle.instance_order);
}

TEST_CASE("params file round trip reproduces embeddings") {
  const auto params = init_mlp_params(7, 8);
  const auto dir = testutil::scratch_dir("params");
  save_mlp_params(params, dir / "p.json");
  const auto back = load_mlp_params(dir / "p.json");
  CHECK(back == params);
  CHECK(mlp_params_to_text(back) == mlp_params_to_text(params));
  const auto scene = generate_synthetic_scene(7, GeneratorSpec{});
  const auto a = build_condition_set(scene, params);
  const auto b = build_condition_set(scene, back);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].vector == b[i].vector);

  auto doc = parse_json(mlp_params_to_text(params), "p");
  doc["b2"].erase(0);
  expect_error([&] { mlp_params_from_text(doc.dump()); }, ErrorCode::kParse);
}

}  // TEST_SUITE
