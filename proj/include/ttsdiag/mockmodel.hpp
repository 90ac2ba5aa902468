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

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace ttsdiag {

inline constexpr std::string_view kMarkPos = "MARK_POS";
inline constexpr std::string_view kMarkNeg = "MARK_NEG";

struct MockConfig {
  std::map<std::string, int> label_map;  // image content digest -> label
  double stage1_informativeness = 1.0;   // q
  double stage2_accuracy_pos = 1.0;      // r1
  double stage2_accuracy_neg = 1.0;      // r0
  double latency_ms = 0.0;
  double fail_rate = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> canned_response;  // echo mode

  void validate() const;

  /// Config file keys mirror the fields; `label_map_from_manifest` builds
  /// label_map from a dataset manifest (resolved against `base_dir`).
  static MockConfig from_json(const nlohmann::json& j, const std::string& base_dir = "");
  static MockConfig from_file(const std::string& path);
};

/// Label map keyed by each sample's image digest.
std::map<std::string, int> label_map_from_manifest(const std::string& path);

/// Deterministic uniform stream derived from SHA-256(seed, context).
class Draw {
 public:
  Draw(std::uint64_t seed, std::string_view context);
  double uniform();  // [0, 1)

 private:
  std::uint64_t state_;
};

/// Simulated p(v|x): with probability q the description carries the
/// label-consistent marker; unknown digests always get a neutral one.
std::string mock_stage1(const std::optional<std::string>& image_digest, const MockConfig& cfg,
                        Draw& draw);

/// Simulated answer. With an image attached (zero-shot / CoT) the label
/// comes from label_map with accuracy r1/r0; without one the marker in the
/// prompt decides, and no marker means a fair coin.
std::string mock_stage2(std::string_view prompt_text,
                        const std::optional<std::string>& image_digest, const MockConfig& cfg,
                        Draw& draw);

struct MockResponse {
  int status = 200;
  std::string body;
};

/// Wire-protocol handler; a pure function of (config, request body).
class MockModel {
 public:
  explicit MockModel(MockConfig cfg);
  MockResponse handle(std::string_view request_body) const;
  const MockConfig& config() const { return cfg_; }

 private:
  MockConfig cfg_;
};

class MockServer {
 public:
  /// Port 0 picks a free port. Throws Error(Bind) on bind failure.
  static std::unique_ptr<MockServer> start(MockConfig cfg, const std::string& host = "127.0.0.1",
                                           int port = 0);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const { return port_; }
  std::string base_url() const;
  long request_count() const { return requests_.load(); }
  int peak_in_flight() const { return peak_.load(); }
  void reset_counters();

  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

 private:
  explicit MockServer(MockConfig cfg);

  MockModel model_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
  std::atomic<long> requests_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

}  // namespace ttsdiag
