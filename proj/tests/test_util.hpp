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

#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "instmask/error.hpp"
#include "instmask/rng.hpp"
#include "oracles.hpp"

namespace testutil {

// Runs fn and checks that it throws instmask::Error with the given code and a
// message containing `needle`.
template <typename Fn>
void expect_error(Fn&& fn, instmask::ErrorCode code, const std::string& needle = "") {
  try {
    fn();
    FAIL("expected an instmask::Error");
  } catch (const instmask::Error& e) {
    CHECK(static_cast<int>(e.code()) == static_cast<int>(code));
    if (!needle.empty()) {
      INFO("message: " << e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  }
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("instmask_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Random convex polygon in counter-clockwise order. Coordinates are dyadic
// (multiples of 1/grain) so every predicate the oracle evaluates is exact;
// grain = 2 produces many centers exactly on edges.
inline std::vector<oracle::P2> random_convex_polygon(instmask::CounterRng& rng, double w,
                                                     double h, double grain) {
  const double cx = -4.0 + (w + 8.0) * rng.uniform();
  const double cy = -4.0 + (h + 8.0) * rng.uniform();
  const double rx = 0.3 + 0.5 * w * rng.uniform();
  const double ry = 0.3 + 0.5 * h * rng.uniform();
  const int n = 3 + static_cast<int>(rng.next_u64() % 10);
  std::vector<oracle::P2> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 6.283185307179586 * rng.uniform();
    const double x = std::round((cx + rx * std::cos(a)) * grain) / grain;
    const double y = std::round((cy + ry * std::sin(a)) * grain) / grain;
    pts.push_back({x, y});
  }
  return oracle::gift_wrap(pts);
}

}  // namespace testutil
