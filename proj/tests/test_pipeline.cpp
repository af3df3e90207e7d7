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

#include <cstdlib>
#include <fstream>

#include "instmask/checks.hpp"
#include "instmask/demo.hpp"
#include "instmask/pipeline.hpp"
#include "test_util.hpp"

using namespace instmask;
using testutil::expect_error;

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Scene test_scene(std::uint64_t seed, std::uint32_t views = 1, std::uint32_t instances = 4) {
  GeneratorSpec spec;
  spec.views = views;
  spec.instance_count = instances;
  spec.motions = {MotionKind::kOccludedGap, MotionKind::kLinear, MotionKind::kTurning};
  return generate_synthetic_scene(seed, spec);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("seed-7 bundle matches the oracle indicator and masks") {
  const Scene scene = test_scene(7);
  const auto bundle = build_view_bundle(scene, 0, MaskOptions{});
  const auto sets = oracle::indicator_sets(scene, 0, kDefaultTheta);
  REQUIRE(bundle.indicator.token_count() == sets.size());
  CHECK(sets.size() == 448);
  std::size_t covered = 0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    CHECK(std::vector<InstanceId>(sets[k].begin(), sets[k].end()) == bundle.indicator.at(k));
    covered += !sets[k].empty();
  }
  CHECK(covered > 0);
  const std::size_t s = bundle.mask.size();
  std::size_t bad = 0;
  for (std::size_t r = 0; r < s; ++r)
    for (std::size_t c = 0; c < s; ++c)
      bad += bundle.mask.is_open(r, c) !=
             oracle::mask_open(sets, bundle.instance_order, r, c, oracle::Policy::kForegroundOnly,
                               false);
  CHECK(bad == 0);
  CHECK(masks_equal(bundle.mask, bundle.mask.to_dense()));
}

TEST_CASE("thread count never changes the bundle") {
  const Scene scene = test_scene(3, 2, 6);
  MaskOptions one;
  one.threads = 1;
  MaskOptions many;
  many.threads = 7;
  for (auto v : scene.view_ids()) {
    const auto a = build_view_bundle(scene, v, one);
    const auto b = build_view_bundle(scene, v, many);
    CHECK(a.indicator == b.indicator);
    CHECK(a.latents == b.latents);
    CHECK(a.stacks == b.stacks);
    CHECK(masks_equal(a.mask, b.mask));
  }
}

TEST_CASE("thread env cap") {
  ::setenv("CONSIS_MASK_THREADS", "2", 1);
  CHECK(resolve_threads(8) == 2);
  CHECK(resolve_threads(1) == 1);
  CHECK(resolve_threads(0) <= 2);
  ::setenv("CONSIS_MASK_THREADS", "junk", 1);
  CHECK(resolve_threads(3) == 3);
  ::unsetenv("CONSIS_MASK_THREADS");
  CHECK(resolve_threads(5) == 5);
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("concatenated views stack per-view indicators") {
  const Scene scene = test_scene(4, 3, 6);
  MaskOptions opts;
  opts.view_mode = ViewMode::kConcatenated;
  const auto cat = build_concat_bundle(scene, opts);
  CHECK(cat.label == "concat");
  CHECK(cat.mask.m() == 3 * 448);
  std::size_t offset = 0;
  for (auto v : scene.view_ids()) {
    const auto single = build_view_bundle(scene, v, MaskOptions{});
    for (std::size_t k = 0; k < single.indicator.token_count(); ++k)
      CHECK(cat.indicator.at(offset + k) == single.indicator.at(k));
    offset += single.indicator.token_count();
  }
}

TEST_CASE("zero-instance scene exports empty artifacts") {
  const Scene scene = test_scene(5, 1, 0);
  const auto bundle = build_view_bundle(scene, 0, MaskOptions{});
  CHECK(bundle.mask.n() == 0);
  CHECK(bundle.indicator.inverse().empty());
  for (auto w : bundle.loss.weights) CHECK(w == 0);
  const auto dir = testutil::scratch_dir("empty_export");
  const auto manifest = export_masks(scene, MaskOptions{}, dir);
  const auto ind = parse_json(read_text_file(dir / "view_0/indicator.json"), "i");
  CHECK(ind["forward"].empty());
  CHECK(ind["inverse"].empty());
  const auto sparse = parse_json(read_text_file(dir / "view_0/attention_mask.json"), "a");
  CHECK(sparse["n"] == 0);
  CHECK(sparse["instance_order"].empty());
}

TEST_CASE("export round trips and hashes") {
  const Scene scene = test_scene(7);
  const auto dir = testutil::scratch_dir("export");
  MaskOptions opts;
  const auto manifest = export_masks(scene, opts, dir);
  const auto bundle = build_view_bundle(scene, 0, opts);

  CHECK(indicator_from_json(parse_json(read_text_file(dir / "view_0/indicator.json"), "i"), "i") ==
        bundle.indicator);
  const auto sparse = mask_from_sparse_json(
      parse_json(read_text_file(dir / "view_0/attention_mask.json"), "a"), "a");
  CHECK(masks_equal(sparse, bundle.mask));
  CHECK(masks_equal(decode_dense_mask(read_bytes(dir / "view_0/attention_mask.bin"),
                                      bundle.instance_order),
                    bundle.mask));
  for (const auto& stack : bundle.stacks[0]) {
    const auto path =
        dir / ("view_0/pixel/instance_" + std::to_string(stack.instance_id()) + ".bin");
    CHECK(decode_mask_stack(read_bytes(path), stack.instance_id()) == stack);
  }
  const auto loss = parse_json(read_text_file(dir / "view_0/loss_mask.json"), "l");
  CHECK(loss["m"] == 448);

  const auto doc = parse_json(manifest.text, "manifest");
  CHECK(doc["scene_sha256"] == sha256_hex(scene_to_text(scene)));
  std::vector<std::string> paths;
  for (const auto& e : manifest.artifacts) {
    paths.push_back(e.path);
    const auto bytes = read_bytes(dir / e.path);
    CHECK(bytes.size() == e.bytes);
    CHECK(sha256_hex(bytes) == e.sha256);
  }
  CHECK(std::is_sorted(paths.begin(), paths.end()));
  CHECK(read_text_file(dir / "manifest.json") == manifest.text);
  // 4 instances x (1 bin + 16 pgm) + 5 grid-level files; the manifest omits itself.
  CHECK(manifest.artifacts.size() == 4 * 17 + 5);
}

TEST_CASE("export is byte-stable across runs and thread counts") {
  const Scene scene = test_scene(11, 2, 5);
  MaskOptions a;
  a.threads = 1;
  MaskOptions b;
  b.threads = 6;
  const auto da = testutil::scratch_dir("stable_a"), db = testutil::scratch_dir("stable_b");
  const auto ma = export_masks(scene, a, da);
  const auto mb = export_masks(scene, b, db);
  CHECK(ma.text == mb.text);
  for (const auto& e : ma.artifacts) CHECK(read_bytes(da / e.path) == read_bytes(db / e.path));
}

TEST_CASE("invalid scenes and options surface as errors") {
  Scene scene = test_scene(1);
  MaskOptions bad_theta;
  bad_theta.theta = 1.0;
  expect_error([&] { build_view_bundle(scene, 0, bad_theta); }, ErrorCode::kInvalidArgument);
  expect_error([&] { build_view_bundle(scene, 9, MaskOptions{}); }, ErrorCode::kInvalidArgument);
  scene.dims.width = 450;
  expect_error([&] { build_view_bundle(scene, 0, MaskOptions{}); }, ErrorCode::kValidation);
}

TEST_CASE("check suites") {
  CheckOptions opts;
  opts.suites = {"leakage"};
  auto report = run_checks(opts);
  CHECK(report.all_passed());
  for (const auto& r : report.results) CHECK(r.suite == "leakage");
  CHECK_FALSE(report.results.empty());
  const auto doc = report.to_json();
  CHECK(doc["format"] == "instmask-check-report");

  opts.suites = {"nonsense"};
  expect_error([&] { run_checks(opts); }, ErrorCode::kInvalidArgument, "nonsense");
}

TEST_CASE("tamper suite names the broken invariant") {
  const Scene scene = test_scene(7);
  const auto dir = testutil::scratch_dir("tamper");
  export_masks(scene, MaskOptions{}, dir);
  const auto path = dir / "view_0/attention_mask.json";
  auto doc = parse_json(read_text_file(path), "a");
  // Drop the self link of row 0.
  Json pairs = Json::array();
  for (const auto& p : doc["pairs"])
    if (!(p[0] == 0 && p[1] == 0)) pairs.push_back(p);
  doc["pairs"] = pairs;
  write_text(path, doc.dump());

  CheckOptions opts;
  opts.suites = {"rasterization"};
  opts.tamper_path = path.string();
  const auto report = run_checks(opts);
  CHECK_FALSE(report.all_passed());
  bool named = false;
  for (const auto& r : report.results)
    if (r.suite == "tamper" && r.name == "diagonal_open") named = !r.passed;
  CHECK(named);

  // A clean file passes every tamper check, including the re-derivation.
  const auto clean = testutil::scratch_dir("tamper_clean");
  export_masks(scene, MaskOptions{}, clean);
  opts.tamper_path = (clean / "view_0/attention_mask.bin").string();
  opts.suites = {"softmax"};
  CHECK(run_checks(opts).all_passed());
}

TEST_CASE("attention demo on a scene is leak free") {
  const Scene scene = test_scene(7);
  DemoOptions opts;
  const auto report = run_attention_demo(scene, MaskOptions{}, 0, opts);
  CHECK(report.leak_free);
  CHECK(report.json.contains("identity_probes"));
  opts.omega = 0.0;
  const auto again = run_attention_demo(scene, MaskOptions{}, 0, opts);
  CHECK(dump_json(again.json) == dump_json(report.json));
}

}  // TEST_SUITE
