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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ttsdiag::testing {

/// Directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Minimal 8-bit grayscale PNG whose pixels are derived from `fill_seed`.
std::vector<std::uint8_t> make_png(int width, int height, std::uint64_t fill_seed);
void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

struct SyntheticDataset {
  std::string dir;
  std::vector<std::string> ids;
  std::vector<int> labels;
};

/// Writes task.json, manifest.jsonl and one distinct PNG per sample.
/// Labels are interleaved 1,0,1,0,... while both classes have samples left.
SyntheticDataset make_dataset(const std::string& dir, int n_class0, int n_class1,
                              int resolution = 224, const std::string& name = "synthetic");

/// Run config JSON for a balanced mock experiment against `base_url`.
nlohmann::json mock_run_config(const std::string& dataset_dir, const std::string& output_dir,
                               const std::string& base_url, const std::vector<std::string>& methods,
                               int num_samples, std::vector<int> n_values);

}  // namespace ttsdiag::testing
