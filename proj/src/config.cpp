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

#include <algorithm>
#include <filesystem>
#include <limits>
#include <set>

#include "ttsdiag/digest.hpp"
#include "ttsdiag/runner.hpp"

namespace ttsdiag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Field access with error messages of the form "<file>: field a.b[2].c: ...".
class Fields {
 public:
  Fields(const json& obj, std::string path, const std::string& origin,
         std::initializer_list<const char*> allowed)
      : obj_(obj), path_(std::move(path)), origin_(origin) {
    if (!obj_.is_object()) fail(path_.empty() ? "<root>" : path_, "must be an object");
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (std::find_if(allowed.begin(), allowed.end(),
                       [&](const char* a) { return it.key() == a; }) == allowed.end()) {
        fail(at(it.key()), "unknown field");
      }
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& field, const std::string& why) const {
    throw Error(ErrorCode::Config, origin_ + ": field " + field + ": " + why);
  }

  bool has(const char* key) const { return obj_.contains(key) && !obj_[key].is_null(); }
  const json& raw(const char* key) const { return obj_[key]; }

  std::string str(const char* key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(at(key), "is required");
    }
    if (!obj_[key].is_string()) fail(at(key), "must be a string");
    return obj_[key].get<std::string>();
  }

  long long integer(const char* key, std::optional<long long> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(at(key), "is required");
    }
    if (!obj_[key].is_number_integer()) fail(at(key), "must be an integer");
    return obj_[key].get<long long>();
  }

  double number(const char* key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(at(key), "is required");
    }
    if (!obj_[key].is_number()) fail(at(key), "must be a number");
    return obj_[key].get<double>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!obj_[key].is_boolean()) fail(at(key), "must be true or false");
    return obj_[key].get<bool>();
  }

 private:
  const json& obj_;
  std::string path_;
  const std::string& origin_;
};

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

int to_int(const Fields& f, const char* key, long long v) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    f.fail(f.at(key), "out of range");
  }
  return static_cast<int>(v);
}

EndpointConfig parse_endpoint(const json& j, const std::string& path, const std::string& origin,
                              int default_max_tokens) {
  Fields f(j, path, origin,
           {"base_url", "model_name", "max_tokens", "timeout_s", "max_retries", "max_in_flight",
            "backoff_initial_s", "send_seed"});
  EndpointConfig e;
  e.base_url = f.str("base_url");
  e.model_name = f.str("model_name");
  e.max_tokens = to_int(f, "max_tokens", f.integer("max_tokens", default_max_tokens));
  e.timeout_s = f.number("timeout_s", e.timeout_s);
  e.max_retries = to_int(f, "max_retries", f.integer("max_retries", e.max_retries));
  e.max_in_flight = to_int(f, "max_in_flight", f.integer("max_in_flight", e.max_in_flight));
  e.backoff_initial_s = f.number("backoff_initial_s", e.backoff_initial_s);
  e.send_seed = f.boolean("send_seed", e.send_seed);
  if (e.max_tokens < 1) f.fail(f.at("max_tokens"), "must be a positive integer");
  if (!(e.timeout_s > 0)) f.fail(f.at("timeout_s"), "must be > 0");
  if (e.max_retries < 0) f.fail(f.at("max_retries"), "must be >= 0");
  if (e.max_in_flight < 1) f.fail(f.at("max_in_flight"), "must be >= 1");
  if (e.backoff_initial_s < 0) f.fail(f.at("backoff_initial_s"), "must be >= 0");
  return e;
}

json endpoint_to_json(const EndpointConfig& e) {
  return {{"base_url", e.base_url},
          {"model_name", e.model_name},
          {"max_tokens", e.max_tokens},
          {"timeout_s", e.timeout_s},
          {"max_retries", e.max_retries},
          {"max_in_flight", e.max_in_flight},
          {"backoff_initial_s", e.backoff_initial_s},
          {"send_seed", e.send_seed}};
}

json method_to_json(const MethodConfig& m) {
  json j = {{"name", m.label()},
            {"method", to_string(m.method)},
            {"stage1_variant", to_string(m.stage1_variant)},
            {"num_samples", m.num_samples},
            {"temperature", m.temperature},
            {"stage2_temperature", m.stage2_temperature},
            {"greedy_single", m.greedy_single},
            {"stage1_endpoint", endpoint_to_json(m.stage1_endpoint)}};
  if (m.method == Method::DescribeThenDiagnose) {
    j["stage2_endpoint"] = endpoint_to_json(m.stage2_endpoint);
  }
  return j;
}

std::vector<int> parse_n_values(const json& j, const std::string& field,
                                const std::string& origin) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::Config, origin + ": field " + field + ": must be a non-empty array");
  }
  std::set<int> values;
  for (const json& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000) {
      throw Error(ErrorCode::Config,
                  origin + ": field " + field + ": entries must be positive integers");
    }
    values.insert(v.get<int>());
  }
  return {values.begin(), values.end()};
}

}  // namespace

std::string RunConfig::effective_cache_dir() const {
  return cache_dir.empty() ? (fs::path(output_dir) / "cache").string() : cache_dir;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::Config, "run config: field " + field + ": " + why);
  };
  if (dataset_path.empty()) fail("dataset", "is required");
  if (output_dir.empty()) fail("output_dir", "is required");
  if (methods.empty()) fail("methods", "must list at least one method");
  if (n_values.empty()) fail("n_values", "must be non-empty");
  if (sample_concurrency < 1) fail("sample_concurrency", "must be >= 1");
  const int max_n = *std::max_element(n_values.begin(), n_values.end());
  std::set<std::string> names;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const MethodConfig& m = methods[i];
    const std::string where = "methods[" + std::to_string(i) + "]";
    if (!names.insert(m.label()).second) fail(where + ".name", "duplicate '" + m.label() + "'");
    m.validate();
    if (max_n > m.num_samples) {
      fail("n_values", "largest n (" + std::to_string(max_n) + ") exceeds " + where +
                           ".num_samples (" + std::to_string(m.num_samples) + ")");
    }
  }
  for (int n : n_values) {
    if (n < 1) fail("n_values", "entries must be positive");
  }
}

json RunConfig::to_json() const {
  json methods_json = json::array();
  for (const MethodConfig& m : methods) methods_json.push_back(method_to_json(m));
  return {{"dataset", dataset_path},       {"split", split},
          {"methods", methods_json},       {"n_values", n_values},
          {"output_dir", output_dir},      {"cache_dir", cache_dir},
          {"prompt_file", prompt_file},    {"sample_concurrency", sample_concurrency},
          {"random_seed", random_seed}};
}

std::string RunConfig::digest() const {
  json j = to_json();
  j.erase("output_dir");
  j.erase("cache_dir");
  j.erase("sample_concurrency");
  return sha256_hex(j.dump());
}

RunConfig parse_run_config(const json& j, const std::string& base_dir, const std::string& origin) {
  Fields f(j, "", origin,
           {"dataset", "split", "methods", "n_values", "output_dir", "cache_dir", "prompt_file",
            "sample_concurrency", "random_seed", "endpoints"});
  RunConfig cfg;
  cfg.dataset_path = resolve(base_dir, f.str("dataset"));
  cfg.split = f.str("split", "");
  cfg.output_dir = resolve(base_dir, f.str("output_dir"));
  cfg.cache_dir = resolve(base_dir, f.str("cache_dir", ""));
  cfg.prompt_file = resolve(base_dir, f.str("prompt_file", ""));
  cfg.sample_concurrency =
      to_int(f, "sample_concurrency", f.integer("sample_concurrency", cfg.sample_concurrency));
  if (f.has("random_seed")) {
    const json& seed = f.raw("random_seed");
    if (!seed.is_number_integer()) f.fail("random_seed", "must be an integer");
    cfg.random_seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>()
                                                : static_cast<std::uint64_t>(seed.get<long long>());
  }

  std::map<std::string, json> named;
  if (f.has("endpoints")) {
    const json& eps = f.raw("endpoints");
    if (!eps.is_object()) f.fail("endpoints", "must be an object of named endpoint blocks");
    for (auto it = eps.begin(); it != eps.end(); ++it) named[it.key()] = it.value();
  }
  auto endpoint = [&](const json& ref, const std::string& path, int default_tokens) {
    if (ref.is_string()) {
      auto it = named.find(ref.get<std::string>());
      if (it == named.end()) {
        f.fail(path, "unknown endpoint '" + ref.get<std::string>() + "'");
      }
      return parse_endpoint(it->second, "endpoints." + it->first, origin, default_tokens);
    }
    return parse_endpoint(ref, path, origin, default_tokens);
  };

  if (!f.has("methods") || !f.raw("methods").is_array() || f.raw("methods").empty()) {
    f.fail("methods", "must be a non-empty array");
  }
  const json& methods = f.raw("methods");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string path = "methods[" + std::to_string(i) + "]";
    Fields m(methods[i], path, origin,
             {"name", "method", "stage1_variant", "num_samples", "temperature",
              "stage2_temperature", "stage1_endpoint", "stage2_endpoint", "greedy_single"});
    MethodConfig mc;
    try {
      mc.method = parse_method(m.str("method"));
      mc.stage1_variant = parse_stage1_variant(m.str("stage1_variant", "unconstrained"));
    } catch (const Error& e) {
      if (std::string(e.what()).find(": field ") != std::string::npos) throw;
      m.fail(path, e.what());
    }
    mc.name = m.str("name", std::string(to_string(mc.method)));
    mc.num_samples = to_int(m, "num_samples", m.integer("num_samples", 1));
    if (mc.num_samples < 1) m.fail(m.at("num_samples"), "must be a positive integer");
    mc.temperature = m.number("temperature", kDefaultTemperature);
    mc.stage2_temperature = m.number("stage2_temperature", 0.0);
    if (!(mc.temperature >= 0)) m.fail(m.at("temperature"), "must be >= 0");
    if (!(mc.stage2_temperature >= 0)) m.fail(m.at("stage2_temperature"), "must be >= 0");
    mc.greedy_single = m.boolean("greedy_single", false);
    if (!m.has("stage1_endpoint")) m.fail(m.at("stage1_endpoint"), "is required");
    mc.stage1_endpoint =
        endpoint(m.raw("stage1_endpoint"), m.at("stage1_endpoint"), kDefaultStage1MaxTokens);
    if (mc.method == Method::DescribeThenDiagnose) {
      if (!m.has("stage2_endpoint")) m.fail(m.at("stage2_endpoint"), "is required");
      mc.stage2_endpoint =
          endpoint(m.raw("stage2_endpoint"), m.at("stage2_endpoint"), kDefaultStage2MaxTokens);
    }
    cfg.methods.push_back(std::move(mc));
  }

  if (f.has("n_values")) {
    cfg.n_values = parse_n_values(f.raw("n_values"), "n_values", origin);
  } else {
    // Single plus the largest n every method can serve.
    int top = cfg.methods.empty() ? 1 : cfg.methods.front().num_samples;
    for (const MethodConfig& m : cfg.methods) top = std::min(top, m.num_samples);
    cfg.n_values = top <= 1 ? std::vector<int>{1} : std::vector<int>{1, top};
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, origin + ": " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_file_text(path);
  } catch (const Error&) {
    throw Error(ErrorCode::Config, "cannot read config file: " + path);
  }
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Config, path + ": malformed JSON");
  return parse_run_config(j, fs::path(path).parent_path().string(), path);
}

void apply_overrides(RunConfig& cfg, const json& overrides) {
  const std::string origin = "override";
  Fields f(overrides, "", origin,
           {"output_dir", "n_values", "stage1_variant", "num_samples", "sample_concurrency",
            "random_seed", "split", "cache_dir", "prompt_file", "dataset"});
  if (f.has("output_dir")) cfg.output_dir = f.str("output_dir");
  if (f.has("cache_dir")) cfg.cache_dir = f.str("cache_dir");
  if (f.has("prompt_file")) cfg.prompt_file = f.str("prompt_file");
  if (f.has("dataset")) cfg.dataset_path = f.str("dataset");
  if (f.has("split")) cfg.split = f.str("split");
  if (f.has("random_seed")) cfg.random_seed = static_cast<std::uint64_t>(f.integer("random_seed"));
  if (f.has("sample_concurrency")) {
    cfg.sample_concurrency = to_int(f, "sample_concurrency", f.integer("sample_concurrency"));
  }
  if (f.has("stage1_variant")) {
    Stage1Variant v;
    try {
      v = parse_stage1_variant(f.str("stage1_variant"));
    } catch (const Error& e) {
      f.fail("stage1_variant", e.what());
    }
    for (MethodConfig& m : cfg.methods) {
      if (m.method == Method::DescribeThenDiagnose) m.stage1_variant = v;
    }
  }
  if (f.has("num_samples")) {
    const int n = to_int(f, "num_samples", f.integer("num_samples"));
    if (n < 1) f.fail("num_samples", "must be a positive integer");
    for (MethodConfig& m : cfg.methods) m.num_samples = n;
  }
  if (f.has("n_values")) cfg.n_values = parse_n_values(f.raw("n_values"), "n_values", origin);
  cfg.validate();
}

void expand_sweep(RunConfig& cfg, std::vector<int> n_values) {
  if (n_values.empty()) n_values = kDefaultSweep;
  std::sort(n_values.begin(), n_values.end());
  n_values.erase(std::unique(n_values.begin(), n_values.end()), n_values.end());
  cfg.n_values = n_values;
  for (MethodConfig& m : cfg.methods) m.num_samples = std::max(m.num_samples, n_values.back());
}

}  // namespace ttsdiag
