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
#include <optional>
#include <string>

#include "ttsdiag/model_client.hpp"

namespace ttsdiag {

/// Content-addressed store of completions, one JSON file per key under a
/// directory. Entries are immutable once written.
class CompletionCache {
 public:
  explicit CompletionCache(std::string dir);

  /// SHA-256 over (model_name, prompt_digest, image digest or "", index,
  /// temperature).
  static std::string key(const std::string& model_name, const std::string& prompt_digest,
                         const std::string& image_digest, int index, double temperature);
  static std::string key(const EndpointConfig& cfg, const ChatRequest& req);

  std::optional<Completion> get(const std::string& key) const;

  /// Error completions are not stored. An existing entry is left untouched.
  void put(const std::string& key, const Completion& c);

  const std::string& dir() const { return dir_; }

 private:
  std::string path_for(const std::string& key) const;

  std::string dir_;
};

/// Serves hits from the cache and forwards misses (as one batch) to `inner`.
class CachedCompletionSource final : public CompletionSource {
 public:
  CachedCompletionSource(CompletionSource& inner, CompletionCache& cache)
      : inner_(inner), cache_(cache) {}

  std::vector<Completion> complete_batch(const EndpointConfig& cfg,
                                         std::span<const ChatRequest> reqs) override;

  long hits() const { return hits_.load(); }
  long misses() const { return misses_.load(); }

 private:
  CompletionSource& inner_;
  CompletionCache& cache_;
  std::atomic<long> hits_{0};
  std::atomic<long> misses_{0};
};

}  // namespace ttsdiag
