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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsdiag/aggregate.hpp"
#include "ttsdiag/pipeline.hpp"

namespace ttsdiag {

struct RunConfig {
  std::string dataset_path;
  std::string split;  // empty = all samples
  std::vector<MethodConfig> methods;
  std::vector<int> n_values;
  std::string output_dir;
  std::string cache_dir;    // empty = <output_dir>/cache
  std::string prompt_file;  // empty = built-in templates
  int sample_concurrency = 1;
  std::uint64_t random_seed = 0;

  /// Throws Error(Config) naming the field.
  void validate() const;
  std::string effective_cache_dir() const;

  /// Canonical JSON of every field (paths as given).
  nlohmann::json to_json() const;

  /// SHA-256 over the fields that determine results (not output/cache
  /// locations or concurrency).
  std::string digest() const;
};

/// Parses the config file schema. Relative paths resolve against
/// `base_dir`. Error messages carry `origin` and the JSON field path.
RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir,
                           const std::string& origin);
RunConfig load_run_config(const std::string& path);

/// Flag-style overrides: output_dir, n_values, stage1_variant, num_samples,
/// sample_concurrency, random_seed, split, cache_dir, prompt_file.
void apply_overrides(RunConfig& cfg, const nlohmann::json& overrides);

/// Default N-sweep ticks.
inline const std::vector<int> kDefaultSweep = {1, 2, 4, 8, 16};

/// Sets n_values (default sweep when empty) and raises each method's
/// num_samples to the largest n.
void expand_sweep(RunConfig& cfg, std::vector<int> n_values = {});

struct CellMetrics {
  double auc = 0;
  double ap = 0;
  int degraded_count = 0;

  bool operator==(const CellMetrics&) const = default;
};

struct RunResult {
  std::string dataset_name;
  std::vector<std::string> method_order;
  std::vector<int> n_values;
  // method -> n -> scores in dataset order
  std::map<std::string, std::map<int, std::vector<DiagnosisScore>>> scores;
  std::map<std::string, std::map<int, CellMetrics>> metrics;
  nlohmann::json provenance;
  bool complete = false;
  long endpoint_requests = 0;  // cache misses issued by this invocation
};

struct RunOptions {
  /// Stop after this many (method, sample) units have been processed by
  /// this invocation; the run is left resumable.
  std::optional<std::size_t> max_units;
  /// Replaces the HTTP transport (tests, in-process mocks).
  CompletionSource* source = nullptr;
  std::function<void(const std::string&)> progress;
};

RunResult run_experiment(const RunConfig& cfg, const RunOptions& opts = {});

/// Completes a partial run from the config stored in its provenance. When
/// `expected` is given its digest must match the stored one. Throws
/// Error(Provenance) naming each changed digest.
RunResult resume(const std::string& output_dir, const RunOptions& opts = {},
                 const std::optional<RunConfig>& expected = std::nullopt);

/// Aggregates generation indices [0, n) only. Throws Error(InvalidArgument)
/// when the pool holds fewer than n answer indices.
DiagnosisScore subsample_scores(std::span<const GenerationRecord> records, int n);

/// Reads metrics, scores and provenance from a finished output directory.
/// Throws Error(Incomplete) for unfinished runs.
RunResult load_run_result(const std::string& output_dir);

nlohmann::json record_to_json(const GenerationRecord& r);
GenerationRecord record_from_json(const nlohmann::json& j);
std::string metrics_to_json(const RunResult& r);

enum class ReportFormat { Markdown, Csv, Json };
ReportFormat parse_report_format(std::string_view s);

/// Method x {Single, TTS} x {AUC, AP} table, per-n curve data and power-law
/// fits. Single is n = 1; TTS is the largest n of the run.
std::string render_report(const RunResult& run, ReportFormat format);

}  // namespace ttsdiag
