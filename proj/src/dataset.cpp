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

#include "ttsdiag/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ttsdiag/digest.hpp"
#include "ttsdiag/error.hpp"

namespace ttsdiag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void dataset_error(const std::string& msg) {
  throw Error(ErrorCode::Dataset, msg);
}

std::string lower_extension(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

bool readable(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return static_cast<bool>(in) && fs::is_regular_file(path);
}

std::string required_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    dataset_error(where + ": missing or non-string field '" + key + "'");
  }
  return it->get<std::string>();
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

}  // namespace

void validate_task(const TaskSpec& task) {
  if (task.class0_name.empty() || task.class1_name.empty()) {
    dataset_error("task config: class names must be non-empty");
  }
  if (task.class0_name == task.class1_name) {
    dataset_error("task config: class names must be distinct (both '" +
                  task.class0_name + "')");
  }
}

TaskSpec parse_task_config(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    dataset_error(std::string("task config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) dataset_error("task config: expected a JSON object");
  TaskSpec task{
      .dataset_name = required_string(j, "dataset_name", "task config"),
      .class0_name = required_string(j, "class0_name", "task config"),
      .class1_name = required_string(j, "class1_name", "task config"),
      .modality_phrase = required_string(j, "modality_phrase", "task config"),
  };
  validate_task(task);
  return task;
}

std::vector<Sample> parse_manifest(const std::string& body, const std::string& base_dir,
                                   bool check_files) {
  std::vector<Sample> samples;
  std::set<std::string> seen;
  std::istringstream in(body);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "manifest line " + std::to_string(line_no);

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      dataset_error(where + ": malformed record: " + e.what());
    }
    if (!rec.is_object()) dataset_error(where + ": malformed record: expected an object");

    Sample s;
    s.id = required_string(rec, "id", where);
    if (s.id.empty()) dataset_error(where + ": empty id");
    const std::string image = required_string(rec, "image", where);

    auto label = rec.find("label");
    if (label == rec.end() || !label->is_number_integer()) {
      dataset_error(where + ": missing or non-integer field 'label'");
    }
    const auto value = label->get<long long>();
    if (value != 0 && value != 1) {
      dataset_error(where + ": label " + std::to_string(value) + " outside {0,1} for id '" +
                    s.id + "'");
    }
    s.label = static_cast<int>(value);

    if (auto split = rec.find("split"); split != rec.end() && !split->is_null()) {
      if (!split->is_string()) dataset_error(where + ": field 'split' must be a string");
      s.split = split->get<std::string>();
    }

    if (!seen.insert(s.id).second) dataset_error(where + ": duplicate id '" + s.id + "'");

    fs::path p(image);
    s.image_path = p.is_absolute() ? p.lexically_normal().string()
                                   : (fs::path(base_dir) / p).lexically_normal().string();
    if (check_files && !readable(s.image_path)) {
      dataset_error(where + ": image not readable for id '" + s.id + "': " + s.image_path);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

Dataset load_manifest(const std::string& path) {
  fs::path manifest;
  fs::path task_file;
  if (fs::is_directory(path)) {
    manifest = fs::path(path) / "manifest.jsonl";
    task_file = fs::path(path) / "task.json";
  } else {
    manifest = path;
    task_file = manifest.parent_path() / "task.json";
  }
  if (!fs::exists(manifest)) dataset_error("missing manifest file: " + manifest.string());
  if (!fs::exists(task_file)) dataset_error("missing task config file: " + task_file.string());

  const std::string task_body = read_file_text(task_file.string());
  const std::string manifest_body = read_file_text(manifest.string());

  Dataset d;
  d.task = parse_task_config(task_body);
  d.samples = parse_manifest(manifest_body, manifest.parent_path().string());
  d.source_digest = sha256_hex(sha256_hex(task_body) + sha256_hex(manifest_body));
  return d;
}

std::string ImagePayload::data_url() const {
  return "data:" + media_type + ";base64," + base64_data;
}

ImagePayload encode_image_file(const std::string& path) {
  const std::string ext = lower_extension(path);
  std::string media_type;
  if (ext == ".png") {
    media_type = "image/png";
  } else if (ext == ".jpg" || ext == ".jpeg") {
    media_type = "image/jpeg";
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "unsupported image format '" + ext + "' (expected png/jpg/jpeg): " + path);
  }
  const auto bytes = read_file_bytes(path);
  return ImagePayload{
      .media_type = std::move(media_type),
      .base64_data = base64_encode(bytes),
      .content_digest = sha256_hex(std::span<const std::uint8_t>(bytes)),
  };
}

ImagePayload encode_image(const Sample& sample) { return encode_image_file(sample.image_path); }

ImageInfo probe_image(const std::vector<std::uint8_t>& b) {
  ImageInfo info;
  info.format = "unknown";
  static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (b.size() >= 26 && std::equal(std::begin(kPng), std::end(kPng), b.begin())) {
    info.format = "png";
    info.width = static_cast<int>(be32(b, 16));
    info.height = static_cast<int>(be32(b, 20));
    switch (b[25]) {
      case 0: info.channels = 1; break;
      case 2: info.channels = 3; break;
      case 3: info.channels = 1; break;  // palette
      case 4: info.channels = 2; break;
      case 6: info.channels = 4; break;
      default: break;
    }
    return info;
  }
  if (b.size() >= 4 && b[0] == 0xFF && b[1] == 0xD8) {
    info.format = "jpeg";
    std::size_t i = 2;
    while (i + 9 < b.size()) {
      if (b[i] != 0xFF) {
        ++i;
        continue;
      }
      const std::uint8_t marker = b[i + 1];
      if (marker == 0xFF) {
        ++i;
        continue;
      }
      if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
        i += 2;
        continue;
      }
      const std::size_t seg_len = (std::size_t{b[i + 2]} << 8) | b[i + 3];
      const bool is_sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 &&
                          marker != 0xC8 && marker != 0xCC;
      if (is_sof) {
        info.height = (b[i + 5] << 8) | b[i + 6];
        info.width = (b[i + 7] << 8) | b[i + 8];
        info.channels = b[i + 9];
        break;
      }
      if (marker == 0xD9 || seg_len < 2) break;
      i += 2 + seg_len;
    }
  }
  return info;
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport report;
  report.sample_count = d.samples.size();
  for (const Sample& s : d.samples) {
    if (s.label == 0 || s.label == 1) {
      ++report.class_counts[static_cast<std::size_t>(s.label)];
    } else {
      report.issues.push_back("sample '" + s.id + "' has label outside {0,1}");
    }
    if (!readable(s.image_path)) {
      report.missing_files.push_back(s.image_path);
      report.issues.push_back("unreadable image for '" + s.id + "': " + s.image_path);
      continue;
    }
    const auto info = probe_image(read_file_bytes(s.image_path));
    if (!info.width || !info.height) {
      report.resolution_notes.push_back("'" + s.id + "': could not determine resolution (" +
                                        info.format + ")");
    } else if (*info.width != kExpectedResolution || *info.height != kExpectedResolution) {
      report.resolution_notes.push_back(
          "'" + s.id + "': " + std::to_string(*info.width) + "x" + std::to_string(*info.height) +
          " differs from the expected " + std::to_string(kExpectedResolution) + "x" +
          std::to_string(kExpectedResolution));
    }
  }
  for (int label : {0, 1}) {
    if (report.class_counts[static_cast<std::size_t>(label)] == 0) {
      report.issues.push_back("no samples with label " + std::to_string(label) +
                              "; AUC/AP are undefined");
    }
  }
  return report;
}

Dataset filter_split(const Dataset& d, const std::string& split) {
  if (split.empty()) return d;
  Dataset out{.task = d.task, .samples = {}, .source_digest = d.source_digest};
  for (const Sample& s : d.samples) {
    if (s.split && *s.split == split) out.samples.push_back(s);
  }
  return out;
}

}  // namespace ttsdiag
