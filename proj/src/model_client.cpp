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

#include "ttsdiag/model_client.hpp"

#include <atomic>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace ttsdiag {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix + /v1/chat/completions
};

Target split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::Config, "endpoint base_url must start with http:// or https://: '" +
                                       base_url + "'");
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  Target t;
  t.origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  t.path = prefix + "/v1/chat/completions";
  return t;
}

// Keep-alive connections are reused across requests so long runs do not
// churn through ephemeral ports.
class ConnectionPool {
 public:
  static ConnectionPool& instance() {
    static ConnectionPool pool;
    return pool;
  }

  std::unique_ptr<httplib::Client> acquire(const std::string& origin) {
    {
      std::lock_guard lock(mu_);
      auto& idle = idle_[origin];
      if (!idle.empty()) {
        auto c = std::move(idle.back());
        idle.pop_back();
        return c;
      }
    }
    auto c = std::make_unique<httplib::Client>(origin);
    c->set_keep_alive(true);
    return c;
  }

  void release(const std::string& origin, std::unique_ptr<httplib::Client> c) {
    std::lock_guard lock(mu_);
    auto& idle = idle_[origin];
    if (idle.size() < kMaxIdle) idle.push_back(std::move(c));
  }

 private:
  static constexpr std::size_t kMaxIdle = 32;
  std::mutex mu_;
  std::map<std::string, std::vector<std::unique_ptr<httplib::Client>>> idle_;
};

double backoff_delay(double initial, int attempt) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const double cap = initial * static_cast<double>(1ULL << std::min(attempt, 30));
  return std::uniform_real_distribution<double>(0.0, cap)(rng);
}

std::string truncate(std::string s, std::size_t n = 512) {
  if (s.size() > n) {
    s.resize(n);
    s += "...";
  }
  return s;
}

}  // namespace

void EndpointConfig::validate() const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::Config, "endpoint '" + model_name + "': field " + field + " " + why);
  };
  if (base_url.empty()) fail("base_url", "must be set");
  split_url(base_url);
  if (model_name.empty()) fail("model_name", "must be set");
  if (max_tokens < 1) fail("max_tokens", "must be a positive integer");
  if (!(timeout_s > 0)) fail("timeout_s", "must be > 0");
  if (max_retries < 0) fail("max_retries", "must be >= 0");
  if (max_in_flight < 1) fail("max_in_flight", "must be >= 1");
  if (backoff_initial_s < 0) fail("backoff_initial_s", "must be >= 0");
}

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "error";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "length") return FinishReason::Length;
  if (s == "error") return FinishReason::Error;
  return FinishReason::Stop;
}

std::string serialize_request(const EndpointConfig& cfg, const ChatRequest& req) {
  if (req.prompt.wants_image != req.image.has_value()) {
    throw Error(ErrorCode::InvalidArgument,
                "request '" + req.request_tag + "': image must be present iff the prompt wants one");
  }
  if (!(req.temperature >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "request '" + req.request_tag +
                                                "': temperature must be non-negative");
  }
  json messages = json::array();
  if (!req.prompt.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", req.prompt.system_text}});
  }
  if (req.image) {
    json parts = json::array();
    parts.push_back({{"type", "text"}, {"text", req.prompt.user_text}});
    parts.push_back({{"type", "image_url"}, {"image_url", {{"url", req.image->data_url()}}}});
    messages.push_back({{"role", "user"}, {"content", std::move(parts)}});
  } else {
    messages.push_back({{"role", "user"}, {"content", req.prompt.user_text}});
  }
  json body = {{"model", cfg.model_name},
               {"temperature", req.temperature},
               {"max_tokens", cfg.max_tokens},
               {"messages", std::move(messages)}};
  if (cfg.send_seed) body["seed"] = req.index;
  return body.dump();
}

Completion parse_response(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::Protocol, "response is not a JSON object: " + truncate(std::string(body)));
  }
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::Protocol, "response has no choices: " + truncate(std::string(body)));
  }
  const json& first = (*choices)[0];
  auto message = first.find("message");
  if (message == first.end() || !message->is_object()) {
    throw Error(ErrorCode::Protocol, "choices[0] has no message");
  }
  auto content = message->find("content");
  if (content == message->end() || !(content->is_string() || content->is_null())) {
    throw Error(ErrorCode::Protocol, "choices[0].message.content is missing or not a string");
  }
  Completion c;
  if (content->is_string()) c.text = content->get<std::string>();
  if (c.text.empty()) throw Error(ErrorCode::Protocol, "choices[0].message.content is empty");
  if (auto fr = first.find("finish_reason"); fr != first.end() && fr->is_string()) {
    c.finish_reason = parse_finish_reason(fr->get<std::string>());
    if (c.finish_reason == FinishReason::Error) c.finish_reason = FinishReason::Stop;
  }
  return c;
}

Completion complete(const EndpointConfig& cfg, const ChatRequest& req) {
  const Target target = split_url(cfg.base_url);
  const std::string body = serialize_request(cfg, req);

  httplib::Headers headers;
  if (const char* key = std::getenv("TTSDIAG_API_KEY"); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(cfg.timeout_s));
  const auto started = Clock::now();
  Error last(ErrorCode::Transport, "no attempt made");

  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::duration<double>(backoff_delay(cfg.backoff_initial_s, attempt - 1)));
    }
    auto client = ConnectionPool::instance().acquire(target.origin);
    client->set_connection_timeout(timeout);
    client->set_read_timeout(timeout);
    client->set_write_timeout(timeout);

    const auto attempt_start = Clock::now();
    auto res = client->Post(target.path, headers, body, "application/json");
    if (!res) {
      const auto elapsed = Clock::now() - attempt_start;
      const bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                             elapsed >= std::chrono::duration<double>(cfg.timeout_s * 0.95);
      last = Error(timed_out ? ErrorCode::Timeout : ErrorCode::Transport,
                   cfg.base_url + ": " + (timed_out ? "request timed out" : "transport failure") +
                       " (" + httplib::to_string(res.error()) + ")");
      continue;  // client dropped; connection state unknown
    }
    const int status = res->status;
    std::string response_body = std::move(res->body);
    ConnectionPool::instance().release(target.origin, std::move(client));

    if (status >= 500) {
      last = Error(ErrorCode::Transport, cfg.base_url + ": HTTP " + std::to_string(status) + ": " +
                                             truncate(response_body));
      continue;
    }
    if (status >= 400) {
      throw Error(ErrorCode::Rejected,
                  cfg.base_url + ": HTTP " + std::to_string(status) + ": " + response_body);
    }
    if (status < 200 || status >= 300) {
      throw Error(ErrorCode::Protocol,
                  cfg.base_url + ": unexpected HTTP status " + std::to_string(status));
    }
    Completion c = parse_response(response_body);
    c.latency = Clock::now() - started;
    return c;
  }
  throw Error(last.code(), std::string(last.what()) + " after " +
                               std::to_string(cfg.max_retries + 1) + " attempt(s)");
}

std::vector<Completion> complete_batch(const EndpointConfig& cfg,
                                       std::span<const ChatRequest> reqs) {
  std::vector<Completion> out(reqs.size());
  if (reqs.empty()) return out;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < reqs.size(); i = next.fetch_add(1)) {
      const auto started = Clock::now();
      try {
        out[i] = complete(cfg, reqs[i]);
      } catch (const Error& e) {
        out[i] = Completion{.text = {},
                            .finish_reason = FinishReason::Error,
                            .latency = Clock::now() - started,
                            .error_code = e.code(),
                            .error = e.what()};
      } catch (const std::exception& e) {
        out[i] = Completion{.text = {},
                            .finish_reason = FinishReason::Error,
                            .latency = Clock::now() - started,
                            .error_code = ErrorCode::Transport,
                            .error = e.what()};
      }
    }
  };

  const std::size_t workers =
      std::min(reqs.size(), static_cast<std::size_t>(std::max(1, cfg.max_in_flight)));
  if (workers == 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  threads.clear();  // joins
  return out;
}

}  // namespace ttsdiag
