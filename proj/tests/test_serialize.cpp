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

#include <doctest.h>

#include <cstring>
#include <limits>

#include "instmask/linalg.hpp"
#include "instmask/scene.hpp"
#include "instmask/serialize.hpp"
#include "test_util.hpp"

using namespace instmask;
using testutil::expect_error;

TEST_SUITE("serialize") {

TEST_CASE("reals round trip through their text form") {
  CounterRng rng(99);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.next_u64() % 200) - 100);
    const std::string s = format_real(v);
    CHECK(parse_real(s, "v") == v);
    CHECK(real_from_json(real_to_json(v), "v") == v);
  }
  for (double v : {0.0, 1.0, 0.1, 1e-300, 5e-324, std::numeric_limits<double>::max(),
                   std::numeric_limits<double>::lowest()}) {
    CHECK(parse_real(format_real(v), "v") == v);
  }
  CHECK(format_real(0.5) == "0.5");
  CHECK(format_real(3.0) == "3");
}

TEST_CASE("malformed reals are parse errors") {
  for (const char* bad : {"", "abc", "1.5x", "nan", "inf", "--1"}) {
    expect_error([&] { parse_real(bad, "field"); }, ErrorCode::kParse, "field");
  }
  expect_error([] { uint_from_json(Json(-1), "count"); }, ErrorCode::kParse, "count");
  expect_error([] { uint_from_json(Json("7"), "count"); }, ErrorCode::kParse);
  expect_error([] { require_key(Json::object(), "beta", "sched"); }, ErrorCode::kParse, "beta");
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex(std::string_view("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string_view("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::vector<std::uint8_t> bytes{'a', 'b', 'c'};
  CHECK(sha256_hex(bytes) == sha256_hex(std::string_view("abc")));
}

TEST_CASE("json parse errors carry context") {
  expect_error([] { parse_json("{\"a\": [1, 2,\n}", "file.json"); }, ErrorCode::kParse,
               "file.json");
}

TEST_CASE("file helpers") {
  const auto dir = testutil::scratch_dir("serialize");
  std::filesystem::create_directories(dir / "sub");
  write_text(dir / "sub/a.txt", "hello\n");
  CHECK(read_text_file(dir / "sub/a.txt") == "hello\n");
  const std::vector<std::uint8_t> b{0, 255, 10};
  write_bytes(dir / "b.bin", b);
  const auto raw = read_text_file(dir / "b.bin");
  CHECK(raw.size() == 3);
  CHECK(static_cast<unsigned char>(raw[1]) == 255);
  expect_error([&] { read_text_file(dir / "missing"); }, ErrorCode::kIo);
}

TEST_CASE("dump_json is stable") {
  const Json doc = {{"b", 1}, {"a", {1, 2}}};
  CHECK(dump_json(doc) == dump_json(parse_json(dump_json(doc), "x")));
}

}  // TEST_SUITE
