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

#include "instmask/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "instmask/error.hpp"
#include "instmask/serialize.hpp"

namespace instmask {

unsigned resolve_threads(unsigned requested) {
  unsigned n = requested == 0 ? std::max(1U, std::thread::hardware_concurrency()) : requested;
  if (const char* env = std::getenv("CONSIS_MASK_THREADS"); env != nullptr && *env) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1U, n);
}

namespace {

std::vector<const Instance*> sorted_instances(const Scene& scene) {
  std::vector<const Instance*> out;
  for (const auto& inst : scene.instances) out.push_back(&inst);
  std::sort(out.begin(), out.end(), [](const Instance* a, const Instance* b) {
    return a->tracking_id < b->tracking_id;
  });
  return out;
}

// Fills stacks/latents for the given views. Each (view, instance) job writes
// only its own slot, so the result does not depend on scheduling.
void rasterize_views(const Scene& scene, const std::vector<std::uint32_t>& views,
                     const MaskOptions& options, MaskBundle& bundle) {
  const auto instances = sorted_instances(scene);
  const auto& d = scene.dims;
  bundle.stacks.assign(views.size(), std::vector<PixelMaskStack>(instances.size()));
  bundle.latents.assign(views.size(), std::vector<LatentMask>(instances.size()));
  const std::size_t jobs = views.size() * instances.size();
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(options.threads), jobs));

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t j = next++; j < jobs && !failed; j = next++) {
      const std::size_t v = j / instances.size();
      const std::size_t i = j % instances.size();
      try {
        bundle.stacks[v][i] = build_mask_stack(*instances[i], scene, views[v]);
        bundle.latents[v][i] =
            downsample_trilinear(bundle.stacks[v][i], d.f_t, d.f_h, d.f_w, options.theta);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

void finish_bundle(const Scene& scene, const MaskOptions& options, MaskBundle& bundle,
                   IndicatorIndex indicator) {
  bundle.indicator = std::move(indicator);
  bundle.instance_order = scene.sorted_instance_ids();
  bundle.mask = build_sparse_mask(bundle.indicator, bundle.instance_order, options.trajectory,
                                  options.condition);
  if (auto bad = mask_invariant_violations(bundle.mask); !bad.empty()) {
    fail(ErrorCode::kProperty, "attention mask violates " + bad.front());
  }
  bundle.loss = build_loss_mask(bundle.indicator);
}

void check_view(const Scene& scene, std::uint32_t view_id) {
  const auto views = scene.view_ids();
  if (!std::binary_search(views.begin(), views.end(), view_id)) {
    fail(ErrorCode::kInvalidArgument, "scene has no view " + std::to_string(view_id));
  }
}

}  // namespace

MaskBundle build_view_bundle(const Scene& scene, std::uint32_t view_id,
                             const MaskOptions& options) {
  validate_scene(scene);
  check_view(scene, view_id);
  MaskBundle bundle;
  bundle.label = "view_" + std::to_string(view_id);
  bundle.views = {view_id};
  rasterize_views(scene, bundle.views, options, bundle);
  auto idx = build_indicator(bundle.latents.front(), latent_dims(scene.dims));
  finish_bundle(scene, options, bundle, std::move(idx));
  return bundle;
}

MaskBundle build_concat_bundle(const Scene& scene, const MaskOptions& options) {
  validate_scene(scene);
  MaskBundle bundle;
  bundle.label = "concat";
  bundle.views = scene.view_ids();
  rasterize_views(scene, bundle.views, options, bundle);
  std::vector<IndicatorIndex> parts;
  for (const auto& latents : bundle.latents) {
    parts.push_back(build_indicator(latents, latent_dims(scene.dims)));
  }
  finish_bundle(scene, options, bundle, concat_indicators(parts));
  return bundle;
}

std::vector<MaskBundle> build_bundles(const Scene& scene, const MaskOptions& options) {
  std::vector<MaskBundle> out;
  if (options.view_mode == ViewMode::kConcatenated) {
    out.push_back(build_concat_bundle(scene, options));
  } else {
    for (auto v : scene.view_ids()) out.push_back(build_view_bundle(scene, v, options));
  }
  return out;
}

namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {}

  void bytes(const std::string& rel, std::span<const std::uint8_t> data) {
    const auto path = root_ / rel;
    std::filesystem::create_directories(path.parent_path());
    write_bytes(path, data);
    entries_.push_back({rel, data.size(), sha256_hex(data)});
  }

  void text(const std::string& rel, std::string_view data) {
    bytes(rel, {reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
  }

  std::vector<ManifestEntry> take() {
    std::sort(entries_.begin(), entries_.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
    return std::move(entries_);
  }

 private:
  std::filesystem::path root_;
  std::vector<ManifestEntry> entries_;
};

std::string padded(std::uint32_t v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*u", width, v);
  return buf;
}

}  // namespace

Manifest export_masks(const Scene& scene, const MaskOptions& options,
                      const std::filesystem::path& out_dir) {
  const auto bundles = build_bundles(scene, options);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  ArtifactWriter writer(out_dir);
  for (const auto& b : bundles) {
    const std::string base = b.label + "/";
    for (std::size_t v = 0; v < b.views.size(); ++v) {
      const std::string pixel = base + "pixel/" +
                                (b.views.size() > 1 ? "view_" + std::to_string(b.views[v]) + "/"
                                                    : std::string());
      for (const auto& stack : b.stacks[v]) {
        const std::string stem = pixel + "instance_" + std::to_string(stack.instance_id());
        writer.bytes(stem + ".bin", encode_mask_stack(stack));
        for (std::uint32_t t = 0; t < stack.frames(); ++t) {
          writer.bytes(stem + "_t" + padded(t, 3) + ".pgm", encode_pgm(stack, t));
        }
      }
    }
    std::vector<LatentMask> latents;
    for (const auto& per_view : b.latents) latents.insert(latents.end(), per_view.begin(), per_view.end());
    writer.text(base + "latent.json", dump_json(latent_masks_to_json(latents, options.theta)));
    writer.text(base + "indicator.json", dump_json(indicator_to_json(b.indicator)));
    Json sparse = mask_to_sparse_json(b.mask);
    sparse["trajectory_policy"] = policy_name(options.trajectory);
    sparse["condition_policy"] = policy_name(options.condition);
    writer.text(base + "attention_mask.json", sparse.dump() + "\n");
    writer.bytes(base + "attention_mask.bin", encode_dense_mask(b.mask));
    writer.text(base + "loss_mask.json", dump_json(loss_mask_to_json(b.loss)));
  }

  Manifest manifest;
  manifest.artifacts = writer.take();
  Json list = Json::array();
  for (const auto& e : manifest.artifacts) {
    list.push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  }
  Json doc{{"format", "instmask-manifest"},
           {"scene_sha256", sha256_hex(scene_to_text(scene))},
           {"options",
            {{"theta", real_to_json(options.theta)},
             {"trajectory_policy", policy_name(options.trajectory)},
             {"condition_policy", policy_name(options.condition)},
             {"view_mode", options.view_mode == ViewMode::kConcatenated ? "concatenated"
                                                                         : "independent"}}},
           {"artifacts", std::move(list)}};
  manifest.text = dump_json(doc);
  write_text(out_dir / "manifest.json", manifest.text);
  return manifest;
}

}  // namespace instmask
