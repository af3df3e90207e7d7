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

#include <cmath>
#include <cstdint>
#include <numbers>

namespace instmask {

/// Counter-based 64-bit generator.
///
/// Output i (i = 0, 1, ...) of a stream with key `k` is
/// `mix64(k + (i + 1) * 0x9E3779B97F4A7C15)`, where mix64 is the SplitMix64
/// finalizer. The full state is the pair (key, counter), so a stream can be
/// saved, restored or jumped without replaying draws.
///
/// Stream splitting: `split(j)` returns a stream whose key is
/// `mix64(key ^ mix64(j + 0x9E3779B97F4A7C15))` and whose counter is 0. Batch
/// item j always uses `split(j)` of the batch stream.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit CounterRng(std::uint64_t key = 0, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  CounterRng split(std::uint64_t stream) const {
    return CounterRng(mix64(key_ ^ mix64(stream + kGolden)), 0);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace instmask
