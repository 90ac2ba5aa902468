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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ttsdiag {

struct Sample {
  std::string id;
  std::string image_path;  // resolved against the manifest directory
  int label = 0;           // 0 or 1
  std::optional<std::string> split;

  bool operator==(const Sample&) const = default;
};

/// Names used to instantiate prompts for one binary task.
struct TaskSpec {
  std::string dataset_name;
  std::string class0_name;
  std::string class1_name;
  std::string modality_phrase;

  bool operator==(const TaskSpec&) const = default;
};

/// Throws Error(Dataset) when class names are empty or equal.
void validate_task(const TaskSpec& task);

struct Dataset {
  TaskSpec task;
  std::vector<Sample> samples;
  std::string source_digest;  // SHA-256 over task config and manifest bytes

  bool operator==(const Dataset&) const = default;
};

struct ImagePayload {
  std::string media_type;  // "image/png" or "image/jpeg"
  std::string base64_data;
  std::string content_digest;  // SHA-256 hex of the raw image bytes

  std::string data_url() const;
};

struct ImageInfo {
  std::string format;  // "png", "jpeg" or "unknown"
  std::optional<int> width;
  std::optional<int> height;
  std::optional<int> channels;
};

struct ValidationReport {
  std::size_t sample_count = 0;
  std::array<std::size_t, 2> class_counts{};  // index = label
  std::vector<std::string> missing_files;
  std::vector<std::string> resolution_notes;
  std::vector<std::string> issues;

  // Errors only: missing files or an empty class. Resolution notes are
  // warnings and do not make a report invalid.
  bool ok() const { return issues.empty(); }
};

/// `path` is either a directory holding task.json and manifest.jsonl, or a
/// manifest .jsonl file whose directory holds task.json. Image paths in the
/// manifest are relative to the manifest's directory.
Dataset load_manifest(const std::string& path);

/// Parses an already-read manifest body. `base_dir` resolves image paths;
/// `check_files` turns missing images into load errors.
std::vector<Sample> parse_manifest(const std::string& body,
                                   const std::string& base_dir,
                                   bool check_files = true);
TaskSpec parse_task_config(const std::string& body);

ImagePayload encode_image(const Sample& sample);
ImagePayload encode_image_file(const std::string& path);

/// Sniffs PNG/JPEG headers for dimensions; never throws on odd content.
ImageInfo probe_image(const std::vector<std::uint8_t>& bytes);

ValidationReport validate_dataset(const Dataset& d);

/// Samples whose split equals `split`; all samples when `split` is empty.
Dataset filter_split(const Dataset& d, const std::string& split);

inline constexpr int kExpectedResolution = 224;

}  // namespace ttsdiag
