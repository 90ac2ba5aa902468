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

#include "fixtures.hpp"

#include <unistd.h>
#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;
using nlohmann::json;

namespace ttsdiag::testing {

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "ttsdiag-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type,
               const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::vector<std::uint8_t> body(type, type + 4);
  body.insert(body.end(), data.begin(), data.end());
  out.insert(out.end(), body.begin(), body.end());
  put_u32(out, static_cast<std::uint32_t>(crc32(0, body.data(), static_cast<uInt>(body.size()))));
}

}  // namespace

std::vector<std::uint8_t> make_png(int width, int height, std::uint64_t fill_seed) {
  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // 8-bit grayscale
  put_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>((width + 1) * height));
  std::uint64_t x = fill_seed * 0x9E3779B97F4A7C15ULL + 1;
  for (int r = 0; r < height; ++r) {
    raw.push_back(0);  // filter: none
    for (int c = 0; c < width; ++c) {
      x ^= x << 13;
      x ^= x >> 7;
      x ^= x << 17;
      raw.push_back(static_cast<std::uint8_t>(x));
    }
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> idat(len);
  if (compress(idat.data(), &len, raw.data(), static_cast<uLong>(raw.size())) != Z_OK) {
    throw std::runtime_error("zlib compress failed");
  }
  idat.resize(len);
  put_chunk(out, "IDAT", idat);
  put_chunk(out, "IEND", {});
  return out;
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("cannot write " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

SyntheticDataset make_dataset(const std::string& dir, int n_class0, int n_class1, int resolution,
                              const std::string& name) {
  SyntheticDataset ds;
  ds.dir = dir;
  write_text(dir + "/task.json", json{{"dataset_name", name},
                                      {"class0_name", "normal"},
                                      {"class1_name", "pneumonia"},
                                      {"modality_phrase", "chest X-ray image"}}
                                     .dump(2));
  std::string manifest;
  int left0 = n_class0, left1 = n_class1, k = 0;
  while (left0 + left1 > 0) {
    const int label = (left1 > 0 && (k % 2 == 0 || left0 == 0)) ? 1 : 0;
    (label == 1 ? left1 : left0)--;
    char id[32];
    std::snprintf(id, sizeof id, "s%04d", k);
    const std::string rel = std::string("images/") + id + ".png";
    const auto png = make_png(resolution, resolution, static_cast<std::uint64_t>(k) + 1);
    write_bytes(dir + "/" + rel, png);
    manifest += json{{"id", id}, {"image", rel}, {"label", label}}.dump() + "\n";
    ds.ids.push_back(id);
    ds.labels.push_back(label);
    ++k;
  }
  write_text(dir + "/manifest.jsonl", manifest);
  return ds;
}

json mock_run_config(const std::string& dataset_dir, const std::string& output_dir,
                     const std::string& base_url, const std::vector<std::string>& methods,
                     int num_samples, std::vector<int> n_values) {
  json ep = {{"base_url", base_url},
             {"model_name", "mock-vlm"},
             {"max_retries", 1},
             {"backoff_initial_s", 0.001},
             {"timeout_s", 30},
             {"max_in_flight", 8}};
  json llm = ep;
  llm["model_name"] = "mock-llm";
  json ms = json::array();
  for (const std::string& m : methods) {
    json mj = {{"method", m}, {"num_samples", num_samples}, {"stage1_endpoint", "vlm"}};
    if (m == "describe_then_diagnose") mj["stage2_endpoint"] = "llm";
    ms.push_back(mj);
  }
  return {{"dataset", dataset_dir},
          {"output_dir", output_dir},
          {"endpoints", {{"vlm", ep}, {"llm", llm}}},
          {"methods", ms},
          {"n_values", n_values}};
}

}  // namespace ttsdiag::testing
