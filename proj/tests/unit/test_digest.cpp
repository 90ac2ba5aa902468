// Copyright 2026 The ttsdiag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <filesystem>
#include <random>

#include "test_support.hpp"
#include "ttsdiag/digest.hpp"
#include "ttsdiag/error.hpp"

using namespace ttsdiag;
using namespace ttsdiag::testing;

TEST_SUITE("digest") {
  TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_raw("abc").size() == 32);
    CHECK(is_hex_digest(sha256_hex("x")));
    CHECK_FALSE(is_hex_digest("ABC"));
    CHECK_FALSE(is_hex_digest(std::string(64, 'g')));
  }

  TEST_CASE("base64 round trip for every length up to 64") {
    std::mt19937 rng(7);
    for (int len = 0; len <= 64; ++len) {
      std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
      const std::string enc = base64_encode(bytes);
      CHECK(enc.size() == static_cast<std::size_t>((len + 2) / 3 * 4));
      CHECK(base64_decode(enc) == bytes);
    }
    CHECK(base64_encode(std::vector<std::uint8_t>{'f', 'o', 'o', 'b'}) == "Zm9vYg==");
  }

  TEST_CASE("base64 rejects malformed input") {
    CHECK_THROWS_AS(base64_decode("abc"), Error);
    CHECK_THROWS_AS(base64_decode("ab!d"), Error);
  }

  TEST_CASE("atomic write replaces content and leaves no temp files") {
    TempDir tmp;
    const std::string p = tmp / "out.txt";
    write_file_atomic(p, "first");
    write_file_atomic(p, "second");
    CHECK(read_file_text(p) == "second");
    int entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(tmp.path())) ++entries;
    CHECK(entries == 1);
  }

  TEST_CASE("reading a missing file is an Io error") {
    try {
      read_file_bytes("/nonexistent/file");
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Io);
    }
  }
}
