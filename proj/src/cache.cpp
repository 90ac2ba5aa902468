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

#include "ttsdiag/cache.hpp"

#include <filesystem>

#include <json.hpp>

#include "ttsdiag/digest.hpp"

namespace ttsdiag {

namespace fs = std::filesystem;
using nlohmann::json;

CompletionCache::CompletionCache(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw Error(ErrorCode::Io, "cannot create cache directory: " + dir_);
  }
}

std::string CompletionCache::key(const std::string& model_name, const std::string& prompt_digest,
                                 const std::string& image_digest, int index, double temperature) {
  // A JSON array keeps the fields unambiguously delimited.
  json tuple = json::array({model_name, prompt_digest, image_digest, index, temperature});
  return sha256_hex(tuple.dump());
}

std::string CompletionCache::key(const EndpointConfig& cfg, const ChatRequest& req) {
  return key(cfg.model_name, req.prompt.digest(), req.image ? req.image->content_digest : "",
             req.index, req.temperature);
}

std::string CompletionCache::path_for(const std::string& key) const {
  return (fs::path(dir_) / (key + ".json")).string();
}

std::optional<Completion> CompletionCache::get(const std::string& key) const {
  const std::string path = path_for(key);
  if (!fs::exists(path)) return std::nullopt;
  json j = json::parse(read_file_text(path), nullptr, false);
  if (j.is_discarded() || !j.contains("text") || !j["text"].is_string()) {
    throw Error(ErrorCode::Io, "corrupt cache entry: " + path);
  }
  Completion c;
  c.text = j["text"].get<std::string>();
  c.finish_reason = parse_finish_reason(j.value("finish_reason", "stop"));
  return c;
}

void CompletionCache::put(const std::string& key, const Completion& c) {
  if (c.finish_reason == FinishReason::Error) return;
  const std::string path = path_for(key);
  if (fs::exists(path)) return;
  json j = {{"text", c.text}, {"finish_reason", to_string(c.finish_reason)}};
  write_file_atomic(path, j.dump());
}

std::vector<Completion> CachedCompletionSource::complete_batch(const EndpointConfig& cfg,
                                                               std::span<const ChatRequest> reqs) {
  std::vector<Completion> out(reqs.size());
  std::vector<std::string> keys(reqs.size());
  std::vector<ChatRequest> missing;
  std::vector<std::size_t> missing_pos;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    keys[i] = CompletionCache::key(cfg, reqs[i]);
    if (auto hit = cache_.get(keys[i])) {
      out[i] = std::move(*hit);
      ++hits_;
    } else {
      missing.push_back(reqs[i]);
      missing_pos.push_back(i);
    }
  }
  if (missing.empty()) return out;
  misses_ += static_cast<long>(missing.size());

  auto fresh = inner_.complete_batch(cfg, missing);
  for (std::size_t k = 0; k < missing.size(); ++k) {
    const std::size_t i = missing_pos[k];
    cache_.put(keys[i], fresh[k]);
    out[i] = std::move(fresh[k]);
  }
  return out;
}

}  // namespace ttsdiag
