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

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttsdiag/dataset.hpp"
#include "ttsdiag/error.hpp"
#include "ttsdiag/prompting.hpp"

namespace ttsdiag {

/// One chat-completion endpoint (Stage-1 VLM or Stage-2 LLM role).
struct EndpointConfig {
  std::string base_url;  // requests go to {base_url}/v1/chat/completions
  std::string model_name;
  int max_tokens = 512;
  double timeout_s = 120.0;
  int max_retries = 3;
  int max_in_flight = 4;
  double backoff_initial_s = 0.5;  // doubled per attempt, full jitter
  bool send_seed = true;           // sends the generation index as `seed`

  /// Throws Error(Config) naming the offending field.
  void validate() const;
};

struct ChatRequest {
  PromptBundle prompt;
  std::optional<ImagePayload> image;
  double temperature = 0.0;
  int index = 0;  // generation index i within the sample's pool
  std::string request_tag;
};

enum class FinishReason { Stop, Length, Error };
std::string_view to_string(FinishReason r);
FinishReason parse_finish_reason(std::string_view s);

struct Completion {
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;
  std::chrono::duration<double> latency{0};
  // Set only for FinishReason::Error.
  std::optional<ErrorCode> error_code;
  std::string error;
};

/// Canonical wire body. Identical requests serialize to identical bytes.
std::string serialize_request(const EndpointConfig& cfg, const ChatRequest& req);

/// Reads choices[0]; throws Error(Protocol) on malformed bodies or an empty
/// message content.
Completion parse_response(std::string_view body);

/// Blocking single call with retries on transport errors and 5xx. 4xx fails
/// immediately with Error(Rejected); the error text echoes the body.
Completion complete(const EndpointConfig& cfg, const ChatRequest& req);

/// Positionally aligned results; per-request failures come back as
/// FinishReason::Error completions. At most cfg.max_in_flight requests are
/// outstanding at once.
std::vector<Completion> complete_batch(const EndpointConfig& cfg,
                                       std::span<const ChatRequest> reqs);

/// Seam between the pipeline and whatever produces completions (HTTP,
/// cache, test doubles).
class CompletionSource {
 public:
  virtual ~CompletionSource() = default;
  virtual std::vector<Completion> complete_batch(const EndpointConfig& cfg,
                                                 std::span<const ChatRequest> reqs) = 0;
};

class HttpCompletionSource final : public CompletionSource {
 public:
  std::vector<Completion> complete_batch(const EndpointConfig& cfg,
                                         std::span<const ChatRequest> reqs) override {
    return ttsdiag::complete_batch(cfg, reqs);
  }
};

}  // namespace ttsdiag
