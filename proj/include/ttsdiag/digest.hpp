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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ttsdiag {

/// Lowercase hex SHA-256 of the given bytes (64 characters).
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// Raw 32-byte SHA-256.
std::vector<std::uint8_t> sha256_raw(std::string_view bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Strict decode; throws Error(InvalidArgument) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

bool is_hex_digest(std::string_view s);

/// Reads a whole file as bytes; throws Error(Io) when unreadable.
std::vector<std::uint8_t> read_file_bytes(const std::string& path);
std::string read_file_text(const std::string& path);

/// Writes to `<path>.tmp.<pid>` and renames over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace ttsdiag
