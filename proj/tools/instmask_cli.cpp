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

// Command-line front end over the C interface of libinstmask.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "instmask/instmask.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitProperty = 1;
constexpr int kExitUsage = 2;

struct SceneDeleter {
  void operator()(im_scene* s) const { im_scene_free(s); }
};
struct StringDeleter {
  void operator()(char* s) const { im_string_free(s); }
};
using ScenePtr = std::unique_ptr<im_scene, SceneDeleter>;
using OwnedString = std::unique_ptr<char, StringDeleter>;

int report_failure(const char* what, im_status status) {
  std::cerr << "error: " << what << ": " << im_last_error() << "\n";
  return status == IM_ERR_PROPERTY ? kExitProperty : kExitUsage;
}

struct GenSceneArgs {
  uint64_t seed = 7;
  std::string out;
  im_generator_options gen{};
  bool occlusion = false;
};

struct BuildMasksArgs {
  std::string scene;
  std::string out;
  double theta = 0.5;
  std::string policy = "foreground-only";
  std::string condition = "identity";
  bool concat_views = false;
  uint32_t view = 0;
  uint32_t threads = 0;
  std::string check;
};

struct CheckArgs {
  std::vector<std::string> suites;
  uint64_t seed = 7;
  double alpha = 0.5;
  std::string tamper;
};

struct DemoArgs {
  std::string scene;
  uint64_t seed = 7;
  uint32_t d_model = 32;
  uint32_t heads = 4;
  uint32_t fourier_l = 8;
  double omega = 0.0;
  std::string params;
  double theta = 0.5;
  uint32_t view = 0;
};

struct ParamsArgs {
  uint64_t seed = 7;
  uint32_t fourier_l = 8;
  uint32_t d_model = 32;
  std::string out;
};

int run_gen_scene(const GenSceneArgs& args) {
  im_generator_options gen = args.gen;
  gen.occlusion = args.occlusion ? 1 : 0;
  im_scene* raw = nullptr;
  if (im_status st = im_scene_generate(args.seed, &gen, &raw); st != IM_OK) {
    return report_failure("gen-scene", st);
  }
  ScenePtr scene(raw);
  if (im_status st = im_scene_save(scene.get(), args.out.c_str()); st != IM_OK) {
    return report_failure("gen-scene", st);
  }
  im_scene_info info{};
  im_scene_info_get(scene.get(), &info);
  std::printf("T=%u H=%u W=%u views=%u instances=%u tokens_per_view=%zu\n", info.frames,
              info.height, info.width, info.views, info.instances, info.tokens_per_view);
  return kExitOk;
}

ScenePtr load_scene(const std::string& path, im_status* status) {
  im_scene* raw = nullptr;
  *status = im_scene_load(path.c_str(), &raw);
  return ScenePtr(raw);
}

im_mask_options mask_options(const BuildMasksArgs& args) {
  im_mask_options opts;
  im_mask_options_default(&opts);
  opts.theta = args.theta;
  opts.trajectory =
      args.policy == "strict" ? IM_TRAJECTORY_STRICT : IM_TRAJECTORY_FOREGROUND_ONLY;
  opts.condition = args.condition == "open" ? IM_CONDITION_ALL_OPEN : IM_CONDITION_IDENTITY_ONLY;
  opts.concat_views = args.concat_views ? 1 : 0;
  opts.view_id = args.view;
  opts.threads = args.threads;
  return opts;
}

int run_build_masks(const BuildMasksArgs& args) {
  im_status st = IM_OK;
  ScenePtr scene = load_scene(args.scene, &st);
  if (st != IM_OK) return report_failure("build-masks", st);
  const im_mask_options opts = mask_options(args);
  char* manifest_raw = nullptr;
  st = im_masks_export(scene.get(), &opts, args.out.c_str(), &manifest_raw);
  if (st != IM_OK) return report_failure("build-masks", st);
  OwnedString manifest(manifest_raw);
  std::printf("wrote %s/manifest.json\n", args.out.c_str());

  if (args.check.empty()) return kExitOk;
  const std::string label = args.concat_views ? "concat" : "view_" + std::to_string(args.view);
  const std::string mine = args.out + "/" + label + "/indicator.json";
  int subset = 0;
  st = im_indicator_subset(mine.c_str(), args.check.c_str(), &subset);
  if (st != IM_OK) return report_failure("build-masks --check", st);
  std::printf("check: %s indicator %s subset of %s\n", mine.c_str(),
              subset ? "is a" : "is NOT a", args.check.c_str());
  return subset ? kExitOk : kExitProperty;
}

int run_check(const CheckArgs& args) {
  std::string suites;
  for (const auto& s : args.suites) {
    if (!suites.empty()) suites += ",";
    suites += s;
  }
  im_check_options opts;
  im_check_options_default(&opts);
  opts.suites = suites.c_str();
  opts.seed = args.seed;
  opts.alpha = args.alpha;
  opts.tamper_path = args.tamper.empty() ? nullptr : args.tamper.c_str();
  char* report_raw = nullptr;
  int all_passed = 0;
  if (im_status st = im_run_checks(&opts, &report_raw, &all_passed); st != IM_OK) {
    return report_failure("check", st);
  }
  OwnedString report(report_raw);
  std::fputs(report.get(), stdout);
  return all_passed ? kExitOk : kExitProperty;
}

int run_demo(const DemoArgs& args) {
  im_status st = IM_OK;
  ScenePtr scene;
  if (!args.scene.empty()) {
    scene = load_scene(args.scene, &st);
  } else {
    im_generator_options gen;
    im_generator_options_default(&gen);
    im_scene* raw = nullptr;
    st = im_scene_generate(args.seed, &gen, &raw);
    scene.reset(raw);
  }
  if (st != IM_OK) return report_failure("demo-attention", st);

  im_mask_options masks;
  im_mask_options_default(&masks);
  masks.theta = args.theta;
  masks.view_id = args.view;
  im_demo_options opts;
  im_demo_options_default(&opts);
  opts.seed = args.seed;
  opts.d_model = args.d_model;
  opts.heads = args.heads;
  opts.fourier_bands = args.fourier_l;
  opts.omega = args.omega;
  opts.params_path = args.params.empty() ? nullptr : args.params.c_str();
  char* report_raw = nullptr;
  int leak_free = 0;
  st = im_demo_attention(scene.get(), &masks, &opts, &report_raw, &leak_free);
  if (st != IM_OK) return report_failure("demo-attention", st);
  OwnedString report(report_raw);
  std::fputs(report.get(), stdout);
  return leak_free ? kExitOk : kExitProperty;
}

int run_gen_params(const ParamsArgs& args) {
  if (im_status st = im_params_generate(args.seed, args.fourier_l, args.d_model, args.out.c_str());
      st != IM_OK) {
    return report_failure("gen-params", st);
  }
  std::printf("wrote %s\n", args.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instance mask construction, masked attention and masked diffusion loss"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(im_version()));

  GenSceneArgs gen;
  im_generator_options_default(&gen.gen);
  auto* gen_cmd = app.add_subcommand("gen-scene", "Write a deterministic synthetic scene");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output scene file")->required();
  gen_cmd->add_option("--frames", gen.gen.frames, "Frames T")
      ->check(CLI::Range(1u, 1u << 20))->capture_default_str();
  gen_cmd->add_option("--height", gen.gen.height, "Frame height H")
      ->check(CLI::Range(1u, 1u << 20))->capture_default_str();
  gen_cmd->add_option("--width", gen.gen.width, "Frame width W")
      ->check(CLI::Range(1u, 1u << 20))->capture_default_str();
  auto* ft = gen_cmd->add_option("--ft", gen.gen.f_t, "Temporal compression")
      ->check(CLI::Range(1u, 1u << 20))->capture_default_str();
  auto* fh = gen_cmd->add_option("--fh", gen.gen.f_h, "Vertical compression")
      ->check(CLI::Range(1u, 1u << 20))->capture_default_str();
  auto* fw = gen_cmd->add_option("--fw", gen.gen.f_w, "Horizontal compression")
      ->check(CLI::Range(1u, 1u << 20))->capture_default_str();
  gen_cmd->add_option("--views", gen.gen.views, "Camera views")
      ->check(CLI::Range(1u, 64u))->capture_default_str();
  gen_cmd->add_option("--instances", gen.gen.instances, "Instance count")
      ->check(CLI::Range(0u, 256u))->capture_default_str();
  gen_cmd->add_flag("--occlusion", gen.occlusion, "First instance disappears mid-clip");

  BuildMasksArgs build;
  auto* build_cmd = app.add_subcommand("build-masks", "Build and export every mask artifact");
  build_cmd->add_option("--scene", build.scene, "Scene file")
      ->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--out", build.out, "Output directory")->required();
  build_cmd->add_option("--theta", build.theta, "Latent binarization threshold")
      ->check(CLI::Range(0.0, 0.999999999))->capture_default_str();
  build_cmd->add_option("--policy", build.policy, "Trajectory policy")
      ->check(CLI::IsMember({"foreground-only", "strict"}))->capture_default_str();
  build_cmd->add_option("--condition-block", build.condition, "Condition-condition block")
      ->check(CLI::IsMember({"identity", "open"}))->capture_default_str();
  build_cmd->add_flag("--concat-views", build.concat_views, "Stack all views on one grid");
  build_cmd->add_option("--view", build.view, "View whose indicator --check compares")
      ->capture_default_str();
  build_cmd->add_option("--threads", build.threads, "Worker threads (0 = hardware)")
      ->capture_default_str();
  build_cmd->add_option("--check", build.check,
                        "Indicator file that must contain this run's indicator")
      ->check(CLI::ExistingFile);

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Run the property oracles, print a JSON report");
  check_cmd->add_option("--suite", check.suites, "Suite names (repeatable, comma-separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"rasterization", "masks", "occlusion", "leakage", "softmax",
                             "schedule", "dynamic", "gradient", "tamper"}));
  check_cmd->add_option("--seed", check.seed, "Oracle seed")->capture_default_str();
  check_cmd->add_option("--alpha", check.alpha, "Mask probability for the dynamic suite")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  check_cmd->add_option("--tamper", check.tamper, "Mask file to verify")
      ->check(CLI::ExistingFile);

  DemoArgs demo;
  auto* demo_cmd =
      app.add_subcommand("demo-attention", "Run masked attention on a scene, report leakage");
  demo_cmd->add_option("--scene", demo.scene, "Scene file")
      ->check(CLI::ExistingFile);
  demo_cmd->add_option("--seed", demo.seed, "Scene and parameter seed")->capture_default_str();
  demo_cmd->add_option("--d-model", demo.d_model, "Model width")
      ->check(CLI::Range(1u, 1024u))->capture_default_str();
  demo_cmd->add_option("--heads", demo.heads, "Attention heads")
      ->check(CLI::Range(1u, 64u))->capture_default_str();
  demo_cmd->add_option("--fourier-l", demo.fourier_l, "Fourier frequency bands")
      ->check(CLI::Range(1u, 30u))->capture_default_str();
  demo_cmd->add_option("--omega", demo.omega, "Gate parameter")->capture_default_str();
  demo_cmd->add_option("--params", demo.params, "Conditioning MLP params file")
      ->check(CLI::ExistingFile);
  demo_cmd->add_option("--theta", demo.theta, "Latent binarization threshold")
      ->check(CLI::Range(0.0, 0.999999999))->capture_default_str();
  demo_cmd->add_option("--view", demo.view, "View to run")->capture_default_str();

  ParamsArgs params;
  auto* params_cmd = app.add_subcommand("gen-params", "Write conditioning MLP parameters");
  params_cmd->add_option("--seed", params.seed, "Parameter seed")->capture_default_str();
  params_cmd->add_option("--fourier-l", params.fourier_l, "Fourier frequency bands")
      ->check(CLI::Range(1u, 30u))->capture_default_str();
  params_cmd->add_option("--d-model", params.d_model, "Output width")
      ->check(CLI::Range(1u, 1024u))->capture_default_str();
  params_cmd->add_option("--out", params.out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* usage = &app;
    for (const auto* sub : app.get_subcommands()) usage = sub;
    std::cerr << usage->help();
    return kExitUsage;
  }

  if (*gen_cmd) {
    // Unspecified compression factors shrink to the largest divisor of the
    // default that still tiles the requested frame geometry.
    if (ft->count() == 0) gen.gen.f_t = std::gcd(gen.gen.f_t, gen.gen.frames);
    if (fh->count() == 0) gen.gen.f_h = std::gcd(gen.gen.f_h, gen.gen.height);
    if (fw->count() == 0) gen.gen.f_w = std::gcd(gen.gen.f_w, gen.gen.width);
    return run_gen_scene(gen);
  }
  if (*build_cmd) return run_build_masks(build);
  if (*check_cmd) return run_check(check);
  if (*demo_cmd) return run_demo(demo);
  if (*params_cmd) return run_gen_params(params);
  return kExitUsage;
}
