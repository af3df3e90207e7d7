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
#include <optional>
#include <string>
#include <vector>

#include "instmask/serialize.hpp"

namespace instmask {

// Suites run by the `check` command. Each compares the library against an
// independent brute-force or definitional re-derivation.
inline const std::vector<std::string>& check_suite_names() {
  static const std::vector<std::string> names{"rasterization", "masks",    "occlusion",
                                              "leakage",       "softmax",  "schedule",
                                              "dynamic",       "gradient"};
  return names;
}

struct CheckOptions {
  std::vector<std::string> suites;  // empty = all
  std::uint64_t seed = 7;
  double alpha = 0.5;
  // Mask file (attention_mask.json or .bin) to audit; adds the "tamper" suite.
  std::optional<std::string> tamper_path;
};

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckResult> results;

  bool all_passed() const;
  Json to_json() const;
};

// Throws Error(kInvalidArgument) for an unknown suite name.
CheckReport run_checks(const CheckOptions& options);

}  // namespace instmask
