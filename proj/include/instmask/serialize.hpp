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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace instmask {

using Json = nlohmann::json;

// Shortest decimal text that parses back to the identical double.
std::string format_real(double value);

// Parses text produced by format_real (or any decimal literal). `context`
// names the field in error messages.
double parse_real(std::string_view text, const std::string& context);

// Reals live in JSON as strings; integers as numbers.
Json real_to_json(double value);
double real_from_json(const Json& node, const std::string& context);
std::uint64_t uint_from_json(const Json& node, const std::string& context);
const Json& require_key(const Json& obj, const char* key,
                        const std::string& context);

// Canonical JSON text: sorted keys, two-space indent, trailing newline.
std::string dump_json(const Json& doc);
Json parse_json(const std::string& text, const std::string& context);

std::string read_text_file(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

}  // namespace instmask
