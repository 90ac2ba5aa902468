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

#include "ttsdiag/mockmodel.hpp"

#include <array>
#include <chrono>
#include <set>
#include <filesystem>

#include <httplib.h>

#include "ttsdiag/dataset.hpp"
#include "ttsdiag/digest.hpp"
#include "ttsdiag/error.hpp"
#include "ttsdiag/prompting.hpp"

namespace ttsdiag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<const char*, 6> kFindings = {
    "symmetric lung fields with clear costophrenic angles",
    "patchy increased density in the lower zones",
    "uniform texture without focal lesions",
    "prominent vascular markings near the hila",
    "smooth borders and homogeneous intensity",
    "scattered small bright foci in the periphery",
};

std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::optional<int> lookup(const MockConfig& cfg, const std::optional<std::string>& digest) {
  if (!digest) return std::nullopt;
  auto it = cfg.label_map.find(*digest);
  if (it == cfg.label_map.end()) return std::nullopt;
  return it->second;
}

std::string boxed(int label) { return "\\boxed{" + std::to_string(label) + "}"; }

std::string error_body(const std::string& message) {
  return json{{"error", {{"message", message}, {"type", "mock_error"}}}}.dump();
}

struct ParsedRequest {
  std::string model;
  std::string text;
  std::optional<std::string> image_digest;
  bool has_image = false;
};

ParsedRequest parse_request(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Protocol, "body is not JSON");
  auto messages = j.find("messages");
  if (messages == j.end() || !messages->is_array() || messages->empty()) {
    throw Error(ErrorCode::Protocol, "messages must be a non-empty array");
  }
  ParsedRequest req;
  req.model = j.value("model", "mock");
  const json* user = nullptr;
  for (const json& m : *messages) {
    if (m.is_object() && m.value("role", "") == "user") user = &m;
  }
  if (!user) throw Error(ErrorCode::Protocol, "no user message");
  const json& content = (*user)["content"];
  if (content.is_string()) {
    req.text = content.get<std::string>();
  } else if (content.is_array()) {
    for (const json& part : content) {
      const std::string type = part.value("type", "");
      if (type == "text") {
        req.text += part.value("text", "");
      } else if (type == "image_url") {
        req.has_image = true;
        const std::string url = part["image_url"].value("url", "");
        const auto comma = url.find(";base64,");
        if (url.rfind("data:", 0) == 0 && comma != std::string::npos) {
          const auto bytes = base64_decode(std::string_view(url).substr(comma + 8));
          req.image_digest = sha256_hex(std::span<const std::uint8_t>(bytes));
        }
      }
    }
  } else {
    throw Error(ErrorCode::Protocol, "user content must be a string or an array of parts");
  }
  return req;
}

}  // namespace

void MockConfig::validate() const {
  auto prob = [](double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::Config, std::string("mock config: field ") + field +
                                         " must be in [0, 1]");
    }
  };
  prob(stage1_informativeness, "stage1_informativeness");
  prob(stage2_accuracy_pos, "stage2_accuracy_pos");
  prob(stage2_accuracy_neg, "stage2_accuracy_neg");
  prob(fail_rate, "fail_rate");
  if (!(latency_ms >= 0)) throw Error(ErrorCode::Config, "mock config: field latency_ms must be >= 0");
  for (const auto& [digest, label] : label_map) {
    if (!is_hex_digest(digest)) {
      throw Error(ErrorCode::Config, "mock config: label_map key is not a 64-hex digest: " + digest);
    }
    if (label != 0 && label != 1) {
      throw Error(ErrorCode::Config, "mock config: label_map value must be 0 or 1");
    }
  }
}

std::map<std::string, int> label_map_from_manifest(const std::string& path) {
  std::map<std::string, int> labels;
  for (const Sample& s : load_manifest(path).samples) {
    labels[encode_image(s).content_digest] = s.label;
  }
  return labels;
}

MockConfig MockConfig::from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "mock config must be a JSON object");
  static const std::set<std::string> allowed = {
      "label_map",           "label_map_from_manifest", "stage1_informativeness",
      "stage2_accuracy_pos", "stage2_accuracy_neg",     "latency_ms",
      "fail_rate",           "seed",                    "canned_response"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw Error(ErrorCode::Config, "mock config: field " + it.key() + ": unknown field");
    }
  }
  MockConfig cfg;
  try {
    if (j.contains("label_map")) cfg.label_map = j["label_map"].get<std::map<std::string, int>>();
    if (j.contains("label_map_from_manifest")) {
      fs::path p = j["label_map_from_manifest"].get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
      for (const auto& [digest, label] : label_map_from_manifest(p.string())) {
        cfg.label_map[digest] = label;
      }
    }
    cfg.stage1_informativeness = j.value("stage1_informativeness", cfg.stage1_informativeness);
    cfg.stage2_accuracy_pos = j.value("stage2_accuracy_pos", cfg.stage2_accuracy_pos);
    cfg.stage2_accuracy_neg = j.value("stage2_accuracy_neg", cfg.stage2_accuracy_neg);
    cfg.latency_ms = j.value("latency_ms", cfg.latency_ms);
    cfg.fail_rate = j.value("fail_rate", cfg.fail_rate);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("canned_response") && !j["canned_response"].is_null()) {
      cfg.canned_response = j["canned_response"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("mock config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

MockConfig MockConfig::from_file(const std::string& path) {
  json j = json::parse(read_file_text(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Config, path + ": malformed JSON");
  return from_json(j, fs::path(path).parent_path().string());
}

Draw::Draw(std::uint64_t seed, std::string_view context) {
  std::string material(8, '\0');
  for (int i = 0; i < 8; ++i) material[static_cast<std::size_t>(i)] = static_cast<char>(seed >> (8 * i));
  material.append(context);
  const auto h = sha256_raw(material);
  state_ = 0;
  for (int i = 0; i < 8; ++i) state_ |= std::uint64_t{h[static_cast<std::size_t>(i)]} << (8 * i);
}

double Draw::uniform() {
  return static_cast<double>(splitmix(state_) >> 11) * 0x1.0p-53;
}

std::string mock_stage1(const std::optional<std::string>& image_digest, const MockConfig& cfg,
                        Draw& draw) {
  const std::optional<int> label = lookup(cfg, image_digest);
  const bool informative = draw.uniform() < cfg.stage1_informativeness;
  const std::size_t a = static_cast<std::size_t>(draw.uniform() * kFindings.size());
  const std::size_t b = static_cast<std::size_t>(draw.uniform() * kFindings.size());
  const auto variant = static_cast<unsigned>(draw.uniform() * 1e6);
  std::string text = "Observed features (view " + std::to_string(variant) + "): " +
                     kFindings[a] + "; " + kFindings[b] + ".";
  if (label && informative) {
    text += " Key finding: ";
    text += *label == 1 ? kMarkPos : kMarkNeg;
    text += ".";
  }
  return text;
}

std::string mock_stage2(std::string_view prompt_text,
                        const std::optional<std::string>& image_digest, const MockConfig& cfg,
                        Draw& draw) {
  const double u = draw.uniform();
  int answer;
  std::optional<int> truth;
  if (image_digest) {
    truth = lookup(cfg, image_digest);
  } else if (prompt_text.find(kMarkPos) != std::string_view::npos) {
    truth = 1;
  } else if (prompt_text.find(kMarkNeg) != std::string_view::npos) {
    truth = 0;
  }
  if (!truth) {
    answer = u < 0.5 ? 1 : 0;
  } else {
    const double accuracy = *truth == 1 ? cfg.stage2_accuracy_pos : cfg.stage2_accuracy_neg;
    answer = u < accuracy ? *truth : 1 - *truth;
  }
  if (image_digest && prompt_text.find("step by step") != std::string_view::npos) {
    return "Step 1: inspect the image. Step 2: weigh the visible findings. Final answer: " +
           boxed(answer);
  }
  return boxed(answer);
}

MockModel::MockModel(MockConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

MockResponse MockModel::handle(std::string_view request_body) const {
  ParsedRequest req;
  try {
    req = parse_request(request_body);
  } catch (const std::exception& e) {
    return {400, error_body(e.what())};
  }
  Draw draw(cfg_.seed, std::string(req.image_digest.value_or("")) + "|" + std::string(request_body));
  if (draw.uniform() < cfg_.fail_rate) return {500, error_body("injected failure")};

  std::string text;
  if (cfg_.canned_response) {
    text = *cfg_.canned_response;
  } else if (req.has_image && req.text.find(kBoxedToken) != std::string::npos) {
    text = mock_stage2(req.text, req.image_digest ? req.image_digest : std::optional<std::string>(""),
                       cfg_, draw);
  } else if (req.has_image) {
    text = mock_stage1(req.image_digest, cfg_, draw);
  } else {
    text = mock_stage2(req.text, std::nullopt, cfg_, draw);
  }

  json resp = {{"id", "mock-" + sha256_hex(request_body).substr(0, 16)},
               {"object", "chat.completion"},
               {"model", req.model},
               {"choices",
                json::array({{{"index", 0},
                              {"message", {{"role", "assistant"}, {"content", text}}},
                              {"finish_reason", "stop"}}})}};
  return {200, resp.dump()};
}

MockServer::MockServer(MockConfig cfg)
    : model_(std::move(cfg)), server_(std::make_unique<httplib::Server>()) {}

std::unique_ptr<MockServer> MockServer::start(MockConfig cfg, const std::string& host, int port) {
  std::unique_ptr<MockServer> s(new MockServer(std::move(cfg)));
  s->host_ = host;
  httplib::Server& srv = *s->server_;
  srv.new_task_queue = [] { return new httplib::ThreadPool(64); };
  srv.set_keep_alive_max_count(1'000'000);
  // Idle keep-alive workers only notice stop() when this expires.
  srv.set_keep_alive_timeout(1);

  MockServer* self = s.get();
  srv.Post("/v1/chat/completions", [self](const httplib::Request& req, httplib::Response& res) {
    const int now = ++self->in_flight_;
    for (int peak = self->peak_.load(); now > peak && !self->peak_.compare_exchange_weak(peak, now);) {
    }
    ++self->requests_;
    if (self->model_.config().latency_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::duration<double, std::milli>(self->model_.config().latency_ms));
    }
    MockResponse r = self->model_.handle(req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
    --self->in_flight_;
  });

  // httplib defaults to SO_REUSEPORT, which would let two servers share a port.
  srv.set_socket_options([](int sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) {
    throw Error(ErrorCode::Bind, "mock server cannot bind " + host + ":" + std::to_string(port));
  }
  s->port_ = bound;
  s->thread_ = std::thread([self] { self->server_->listen_after_bind(); });
  srv.wait_until_ready();
  return s;
}

MockServer::~MockServer() { stop(); }

std::string MockServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

void MockServer::reset_counters() {
  requests_ = 0;
  peak_ = 0;
}

void MockServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void MockServer::wait() {
  // Polling instead of joining lets stop() own the join.
  while (server_ && server_->is_running()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace ttsdiag
