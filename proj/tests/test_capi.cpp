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

// Exercises libinstmask through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cfloat>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "instmask/instmask.h"
#include "json.hpp"

namespace {

struct Owned {
  char* s = nullptr;
  ~Owned() { im_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("instmask_capi_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

im_scene* make_scene(uint64_t seed, uint32_t instances = 4, int occlusion = 1) {
  im_generator_options g;
  im_generator_options_default(&g);
  g.instances = instances;
  g.occlusion = occlusion;
  im_scene* scene = nullptr;
  REQUIRE(im_scene_generate(seed, &g, &scene) == IM_OK);
  return scene;
}

}  // namespace

TEST_CASE("version and error channel") {
  CHECK(std::string(im_version()) == "0.1.0");
  im_scene* scene = nullptr;
  CHECK(im_scene_load("/nonexistent/scene.json", &scene) == IM_ERR_IO);
  CHECK(scene == nullptr);
  CHECK(std::string(im_last_error()).find("/nonexistent/scene.json") != std::string::npos);
  CHECK(im_scene_generate(1, nullptr, nullptr) == IM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(im_last_error()).find("null") != std::string::npos);
  im_string_free(nullptr);
  im_scene_free(nullptr);
  im_mask_bundle_free(nullptr);
}

TEST_CASE("generator defaults and scene info") {
  im_scene* scene = make_scene(7);
  im_scene_info info;
  REQUIRE(im_scene_info_get(scene, &info) == IM_OK);
  CHECK(info.frames == 16);
  CHECK(info.height == 256);
  CHECK(info.width == 448);
  CHECK(info.f_t == 4);
  CHECK(info.tokens_per_view == 4 * 8 * 14);
  CHECK(info.instances == 4);

  uint64_t ids[8];
  size_t count = 0;
  CHECK(im_scene_instance_ids(scene, ids, 1, &count) == IM_ERR_INVALID_ARGUMENT);
  CHECK(count == 4);
  REQUIRE(im_scene_instance_ids(scene, ids, 8, &count) == IM_OK);
  for (size_t i = 1; i < count; ++i) CHECK(ids[i - 1] < ids[i]);

  // Only the first instance has a gap.
  uint32_t frames[32];
  REQUIRE(im_scene_pose_frames(scene, ids[0], frames, 32, &count) == IM_OK);
  CHECK(count < 16);
  REQUIRE(im_scene_pose_frames(scene, ids[1], frames, 32, &count) == IM_OK);
  CHECK(count == 16);
  CHECK(im_scene_pose_frames(scene, 999999, frames, 32, &count) == IM_ERR_INVALID_ARGUMENT);

  const auto dir = scratch("scene");
  const std::string path = (dir / "scene.json").string();
  REQUIRE(im_scene_save(scene, path.c_str()) == IM_OK);
  im_scene* back = nullptr;
  REQUIRE(im_scene_load(path.c_str(), &back) == IM_OK);
  im_scene_info info2;
  REQUIRE(im_scene_info_get(back, &info2) == IM_OK);
  CHECK(info2.instances == info.instances);
  im_scene_free(back);
  im_scene_free(scene);
}

TEST_CASE("invalid generator options") {
  im_generator_options g;
  im_generator_options_default(&g);
  g.height = 250;  // not divisible by 32
  im_scene* scene = nullptr;
  CHECK(im_scene_generate(1, &g, &scene) == IM_ERR_VALIDATION);
  CHECK(scene == nullptr);
  CHECK(std::string(im_last_error()).find("divisible") != std::string::npos);
}

TEST_CASE("bundle accessors agree with the sparse json") {
  im_scene* scene = make_scene(7);
  im_mask_options o;
  im_mask_options_default(&o);
  CHECK(o.theta == 0.5);
  im_mask_bundle* bundle = nullptr;
  REQUIRE(im_masks_build(scene, &o, &bundle) == IM_OK);
  size_t m = 0, n = 0;
  REQUIRE(im_mask_bundle_dims(bundle, &m, &n) == IM_OK);
  CHECK(m == 448);
  CHECK(n == 4);
  const size_t s = m + n;
  std::vector<double> dense(s * s);
  CHECK(im_mask_bundle_dense(bundle, dense.data(), 10) == IM_ERR_INVALID_ARGUMENT);
  REQUIRE(im_mask_bundle_dense(bundle, dense.data(), dense.size()) == IM_OK);

  Owned js;
  REQUIRE(im_mask_bundle_sparse_json(bundle, &js.s) == IM_OK);
  const auto doc = nlohmann::json::parse(js.str());
  std::vector<char> open(s * s, 0);
  for (const auto& p : doc["pairs"]) open[p[0].get<size_t>() * s + p[1].get<size_t>()] = 1;
  size_t bad = 0;
  for (size_t i = 0; i < s * s; ++i) {
    const double want = open[i] ? 0.0 : -DBL_MAX;
    bad += dense[i] != want;
  }
  CHECK(bad == 0);
  for (size_t r = 0; r < s; ++r) CHECK(dense[r * s + r] == 0.0);

  std::vector<uint64_t> order(n);
  REQUIRE(im_mask_bundle_instance_order(bundle, order.data(), n) == IM_OK);
  CHECK(doc["instance_order"].get<std::vector<uint64_t>>() == order);

  std::vector<uint8_t> loss(m);
  REQUIRE(im_mask_bundle_loss_mask(bundle, loss.data(), m) == IM_OK);
  uint64_t ids[8];
  size_t count = 0;
  size_t covered = 0;
  for (size_t k = 0; k < m; ++k) {
    REQUIRE(im_mask_bundle_indicator(bundle, k, ids, 8, &count) == IM_OK);
    CHECK((count > 0) == (loss[k] == 1));
    covered += count > 0;
    // Identity block: token k sees condition token j iff j is in I(v_k).
    for (size_t j = 0; j < n; ++j) {
      bool in = false;
      for (size_t c = 0; c < count; ++c) in = in || ids[c] == order[j];
      CHECK((dense[k * s + m + j] == 0.0) == in);
    }
  }
  CHECK(covered > 0);
  CHECK(im_mask_bundle_indicator(bundle, m, ids, 8, &count) == IM_ERR_INVALID_ARGUMENT);

  Owned ind;
  REQUIRE(im_mask_bundle_indicator_json(bundle, &ind.s) == IM_OK);
  CHECK(nlohmann::json::parse(ind.str())["m"] == m);
  im_mask_bundle_free(bundle);
  im_scene_free(scene);
}

TEST_CASE("mask option validation") {
  im_scene* scene = make_scene(3);
  im_mask_options o;
  im_mask_options_default(&o);
  im_mask_bundle* bundle = nullptr;
  o.theta = 1.0;
  CHECK(im_masks_build(scene, &o, &bundle) == IM_ERR_INVALID_ARGUMENT);
  o.theta = 0.5;
  o.trajectory = static_cast<im_trajectory_policy>(9);
  CHECK(im_masks_build(scene, &o, &bundle) == IM_ERR_INVALID_ARGUMENT);
  o.trajectory = IM_TRAJECTORY_STRICT;
  o.view_id = 5;
  CHECK(im_masks_build(scene, &o, &bundle) == IM_ERR_INVALID_ARGUMENT);
  CHECK(bundle == nullptr);
  im_scene_free(scene);
}

TEST_CASE("export and subset") {
  im_scene* scene = make_scene(7);
  im_mask_options o;
  im_mask_options_default(&o);
  const auto lo = scratch("lo"), hi = scratch("hi");
  Owned manifest;
  o.theta = 0.1;
  REQUIRE(im_masks_export(scene, &o, lo.string().c_str(), &manifest.s) == IM_OK);
  CHECK(nlohmann::json::parse(manifest.str())["format"] == "instmask-manifest");
  o.theta = 0.9;
  REQUIRE(im_masks_export(scene, &o, hi.string().c_str(), nullptr) == IM_OK);
  const std::string a = (hi / "view_0/indicator.json").string();
  const std::string b = (lo / "view_0/indicator.json").string();
  int subset = -1;
  REQUIRE(im_indicator_subset(a.c_str(), b.c_str(), &subset) == IM_OK);
  CHECK(subset == 1);
  REQUIRE(im_indicator_subset(b.c_str(), a.c_str(), &subset) == IM_OK);
  CHECK(subset == 0);
  im_scene_free(scene);
}

TEST_CASE("checks, demo and params") {
  im_check_options c;
  im_check_options_default(&c);
  c.suites = "schedule,dynamic";
  Owned report;
  int ok = 0;
  REQUIRE(im_run_checks(&c, &report.s, &ok) == IM_OK);
  CHECK(ok == 1);
  for (const auto& r : nlohmann::json::parse(report.str())["checks"]) {
    const auto suite = r["suite"].get<std::string>();
    CHECK((suite == "schedule" || suite == "dynamic"));
  }
  c.suites = "bogus";
  Owned r2;
  CHECK(im_run_checks(&c, &r2.s, &ok) == IM_ERR_INVALID_ARGUMENT);

  const auto dir = scratch("params");
  const std::string params = (dir / "params.json").string();
  REQUIRE(im_params_generate(5, 4, 16, params.c_str()) == IM_OK);
  im_scene* scene = make_scene(7);
  im_demo_options d;
  im_demo_options_default(&d);
  d.d_model = 16;
  d.params_path = params.c_str();
  Owned demo;
  int leak_free = 0;
  im_mask_options mo;
  im_mask_options_default(&mo);
  REQUIRE(im_demo_attention(scene, &mo, &d, &demo.s, &leak_free) == IM_OK);
  CHECK(leak_free == 1);
  CHECK(nlohmann::json::parse(demo.str())["leak_free"] == true);
  im_scene_free(scene);
}
