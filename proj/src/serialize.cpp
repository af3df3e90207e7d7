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

#include "instmask/serialize.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "instmask/error.hpp"

namespace instmask {

std::string format_real(double value) {
  if (!std::isfinite(value)) {
    fail(ErrorCode::kInvalidArgument, "cannot serialize non-finite real");
  }
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) fail(ErrorCode::kInvalidArgument, "to_chars failed");
  return std::string(buf.data(), end);
}

double parse_real(std::string_view text, const std::string& context) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    fail(ErrorCode::kParse,
         context + ": expected a decimal real, got \"" + std::string(text) + "\"");
  }
  if (!std::isfinite(value)) {
    fail(ErrorCode::kParse, context + ": real is not finite");
  }
  return value;
}

Json real_to_json(double value) { return format_real(value); }

double real_from_json(const Json& node, const std::string& context) {
  if (node.is_string()) return parse_real(node.get_ref<const std::string&>(), context);
  // Plain JSON numbers are accepted for hand-written files.
  if (node.is_number()) return node.get<double>();
  fail(ErrorCode::kParse, context + ": expected a real (decimal string)");
}

std::uint64_t uint_from_json(const Json& node, const std::string& context) {
  if (node.is_number_unsigned()) return node.get<std::uint64_t>();
  if (node.is_number_integer() && node.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(node.get<std::int64_t>());
  }
  fail(ErrorCode::kParse, context + ": expected a non-negative integer");
}

const Json& require_key(const Json& obj, const char* key,
                        const std::string& context) {
  if (!obj.is_object()) fail(ErrorCode::kParse, context + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    fail(ErrorCode::kParse, context + ": missing key \"" + key + "\"");
  }
  return *it;
}

std::string dump_json(const Json& doc) { return doc.dump(2) + "\n"; }

Json parse_json(const std::string& text, const std::string& context) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line number for the message.
    std::size_t line = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i < limit; ++i) line += text[i] == '\n';
    fail(ErrorCode::kParse, context + ": line " + std::to_string(line) + ": " +
                                e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const std::filesystem::path& path,
                 std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    fail(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                    text.size()));
}

}  // namespace instmask
