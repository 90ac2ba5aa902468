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

#include "ttsdiag/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ttsdiag/cache.hpp"
#include "ttsdiag/digest.hpp"
#include "ttsdiag/metrics.hpp"

namespace ttsdiag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kGenerations = "generations.jsonl";
constexpr const char* kScores = "scores.jsonl";
constexpr const char* kMetrics = "metrics.json";
constexpr const char* kProvenance = "provenance.json";

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string out_path(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

int records_per_unit(const MethodConfig& m) {
  const int per_index = m.method == Method::DescribeThenDiagnose ? 2 : 1;
  return per_index * (m.num_samples + (m.greedy_single ? 1 : 0));
}

using UnitRecords = std::map<std::string, std::map<std::string, std::vector<GenerationRecord>>>;

struct Prepared {
  RunConfig cfg;
  Dataset dataset;
  PromptTemplates templates;
  std::string prompt_digest;
};

Prepared prepare(const RunConfig& cfg) {
  cfg.validate();
  Prepared p{.cfg = cfg, .dataset = {}, .templates = PromptTemplates::builtin(), .prompt_digest = {}};
  p.dataset = filter_split(load_manifest(cfg.dataset_path), cfg.split);
  if (p.dataset.samples.empty()) {
    throw Error(ErrorCode::Dataset, "dataset has no samples" +
                                        (cfg.split.empty() ? std::string()
                                                           : " in split '" + cfg.split + "'"));
  }
  const ValidationReport report = validate_dataset(p.dataset);
  if (!report.ok()) {
    std::string msg = "dataset failed validation:";
    for (const std::string& issue : report.issues) msg += "\n  " + issue;
    throw Error(ErrorCode::Dataset, msg);
  }
  if (!cfg.prompt_file.empty()) p.templates = PromptTemplates::from_file(cfg.prompt_file);
  p.prompt_digest = p.templates.digest();
  return p;
}

json base_provenance(const Prepared& p, const std::string& started_at) {
  json endpoints = json::object();
  const json cfg_json = p.cfg.to_json();
  for (const json& m : cfg_json["methods"]) {
    json e = {{"stage1", m["stage1_endpoint"]}};
    if (m.contains("stage2_endpoint")) e["stage2"] = m["stage2_endpoint"];
    endpoints[m["name"].get<std::string>()] = e;
  }
  return {{"config", cfg_json},
          {"config_digest", p.cfg.digest()},
          {"prompt_file", p.cfg.prompt_file.empty() ? "<builtin>" : p.cfg.prompt_file},
          {"prompt_digest", p.prompt_digest},
          {"dataset_digest", p.dataset.source_digest},
          {"dataset_name", p.dataset.task.dataset_name},
          {"sample_count", p.dataset.samples.size()},
          {"endpoints", endpoints},
          {"seed", p.cfg.random_seed},
          {"started_at", started_at},
          {"finished_at", nullptr},
          {"status", "incomplete"}};
}

void write_provenance(const std::string& dir, const json& prov) {
  write_file_atomic(out_path(dir, kProvenance), prov.dump(2) + "\n");
}

std::string render_records(const std::vector<GenerationRecord>& records) {
  std::string out;
  for (const GenerationRecord& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

class GenerationLog {
 public:
  explicit GenerationLog(std::string path) : path_(std::move(path)) {}

  void append(const std::vector<GenerationRecord>& records) {
    const std::string text = render_records(records);
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "cannot append to " + path_);
  }

 private:
  std::string path_;
  std::mutex mu_;
};

UnitRecords read_complete_units(const std::string& path, const RunConfig& cfg) {
  UnitRecords units;
  if (!fs::exists(path)) return units;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // torn final line after an interruption
    try {
      GenerationRecord r = record_from_json(j);
      units[r.method][r.sample_id].push_back(std::move(r));
    } catch (const std::exception&) {
      continue;
    }
  }
  for (const MethodConfig& m : cfg.methods) {
    auto it = units.find(m.label());
    if (it == units.end()) continue;
    for (auto s = it->second.begin(); s != it->second.end();) {
      if (static_cast<int>(s->second.size()) != records_per_unit(m)) {
        s = it->second.erase(s);
      } else {
        ++s;
      }
    }
  }
  return units;
}

std::string canonical_log(const Prepared& p, const UnitRecords& units) {
  std::string out;
  for (const MethodConfig& m : p.cfg.methods) {
    auto it = units.find(m.label());
    if (it == units.end()) continue;
    for (const Sample& s : p.dataset.samples) {
      if (auto rec = it->second.find(s.id); rec != it->second.end()) {
        out += render_records(rec->second);
      }
    }
  }
  return out;
}

RunResult finalize(const Prepared& p, const UnitRecords& units, json provenance) {
  const std::string& dir = p.cfg.output_dir;
  RunResult result;
  result.dataset_name = p.dataset.task.dataset_name;
  result.n_values = p.cfg.n_values;

  std::vector<int> labels;
  for (const Sample& s : p.dataset.samples) labels.push_back(s.label);

  std::string scores_text;
  for (const MethodConfig& m : p.cfg.methods) {
    result.method_order.push_back(m.label());
    const auto& per_sample = units.at(m.label());
    for (int n : p.cfg.n_values) {
      std::vector<DiagnosisScore> scores;
      std::vector<double> estimates;
      int degraded = 0;
      for (const Sample& s : p.dataset.samples) {
        const auto& recs = per_sample.at(s.id);
        DiagnosisScore score;
        if (n == 1 && m.greedy_single) {
          std::vector<GenerationRecord> greedy;
          std::copy_if(recs.begin(), recs.end(), std::back_inserter(greedy),
                       [](const GenerationRecord& r) { return r.greedy; });
          score = estimate_probability(greedy);
        } else {
          score = subsample_scores(recs, n);
        }
        degraded += score.degraded ? 1 : 0;
        estimates.push_back(score.estimate);
        json line = {{"method", m.label()},         {"n", n},
                     {"sample_id", score.sample_id}, {"estimate", score.estimate},
                     {"n_total", score.n_total},     {"n_valid", score.n_valid},
                     {"degraded", score.degraded}};
        scores_text += line.dump() + "\n";
        scores.push_back(std::move(score));
      }
      const ScoredSet set(estimates, labels);
      result.metrics[m.label()][n] =
          CellMetrics{.auc = auc(set), .ap = average_precision(set), .degraded_count = degraded};
      result.scores[m.label()][n] = std::move(scores);
    }
  }

  write_file_atomic(out_path(dir, kGenerations), canonical_log(p, units));
  write_file_atomic(out_path(dir, kScores), scores_text);
  write_file_atomic(out_path(dir, kMetrics), metrics_to_json(result));
  provenance["status"] = "complete";
  provenance["finished_at"] = now_utc();
  write_provenance(dir, provenance);
  result.provenance = std::move(provenance);
  result.complete = true;
  return result;
}

RunResult execute(const Prepared& p, const RunOptions& opts, UnitRecords units, json provenance) {
  const RunConfig& cfg = p.cfg;
  const auto& samples = p.dataset.samples;

  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(cfg.random_seed);
  std::shuffle(order.begin(), order.end(), rng);

  struct Unit {
    std::size_t method;
    std::size_t sample;
  };
  std::vector<Unit> pending;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    const auto& done = units[cfg.methods[m].label()];
    for (std::size_t s : order) {
      if (!done.contains(samples[s].id)) pending.push_back({m, s});
    }
  }

  HttpCompletionSource http;
  CompletionSource& base = opts.source ? *opts.source : http;
  CompletionCache cache(cfg.effective_cache_dir());
  CachedCompletionSource source(base, cache);
  GenerationLog log(out_path(cfg.output_dir, kGenerations));

  const std::size_t limit = std::min(pending.size(), opts.max_units.value_or(pending.size()));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};
  std::atomic<bool> abort{false};
  std::atomic<bool> any_success{false};
  std::mutex mu;
  std::exception_ptr failure;
  std::string unreachable;

  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < limit && !abort; k = next.fetch_add(1)) {
      const Unit u = pending[k];
      const MethodConfig& m = cfg.methods[u.method];
      const Sample& sample = samples[u.sample];
      try {
        auto records = run_method(sample, p.dataset.task, m, source, p.templates);
        if (m.greedy_single) {
          MethodConfig greedy = m;
          greedy.num_samples = 1;
          greedy.temperature = 0.0;
          greedy.stage2_temperature = 0.0;
          for (GenerationRecord& r : run_method(sample, p.dataset.task, greedy, source,
                                                p.templates)) {
            r.greedy = true;
            records.push_back(std::move(r));
          }
        }
        const bool ok = std::any_of(records.begin(), records.end(), [](const GenerationRecord& r) {
          return r.finish_reason != FinishReason::Error;
        });
        if (ok) {
          any_success = true;
        } else if (!any_success) {
          std::lock_guard lock(mu);
          if (unreachable.empty()) {
            unreachable = records.empty() ? "no records" : records.front().error;
          }
          abort = true;
          return;
        }
        log.append(records);
        {
          std::lock_guard lock(mu);
          units[m.label()][sample.id] = std::move(records);
        }
        const std::size_t done = ++finished;
        if (opts.progress) {
          opts.progress(m.label() + " " + sample.id + " (" + std::to_string(done) + "/" +
                        std::to_string(pending.size()) + ")");
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        abort = true;
        return;
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, cfg.sample_concurrency));
  if (threads == 1 || limit <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, limit); ++t) pool.emplace_back(worker);
  }

  if (failure) std::rethrow_exception(failure);
  if (!unreachable.empty()) {
    throw Error(ErrorCode::Transport,
                "endpoint unreachable: every generation of the first sample failed: " +
                    unreachable);
  }

  if (finished < pending.size()) {
    RunResult partial;
    partial.dataset_name = p.dataset.task.dataset_name;
    partial.n_values = cfg.n_values;
    for (const MethodConfig& m : cfg.methods) partial.method_order.push_back(m.label());
    partial.provenance = std::move(provenance);
    partial.complete = false;
    partial.endpoint_requests = source.misses();
    return partial;
  }
  RunResult result = finalize(p, units, std::move(provenance));
  result.endpoint_requests = source.misses();
  return result;
}

void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::Io, "output_dir is not writable: " + dir);
  }
  const std::string probe = out_path(dir, ".write_probe");
  {
    std::ofstream out(probe);
    if (!out) throw Error(ErrorCode::Io, "output_dir is not writable: " + dir);
  }
  fs::remove(probe, ec);
}

}  // namespace

json record_to_json(const GenerationRecord& r) {
  json j = {{"sample_id", r.sample_id},
            {"method", r.method},
            {"stage", to_string(r.stage)},
            {"index", r.index},
            {"prompt_digest", r.prompt_digest},
            {"raw_text", r.raw_text},
            {"finish_reason", to_string(r.finish_reason)}};
  if (r.parsed) j["parsed"] = to_string(*r.parsed);
  if (!r.error.empty()) j["error"] = r.error;
  if (r.greedy) j["greedy"] = true;
  return j;
}

GenerationRecord record_from_json(const json& j) {
  GenerationRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.stage = parse_generation_stage(j.at("stage").get<std::string>());
  r.index = j.at("index").get<int>();
  r.prompt_digest = j.at("prompt_digest").get<std::string>();
  r.raw_text = j.at("raw_text").get<std::string>();
  r.finish_reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
  if (j.contains("parsed")) r.parsed = parse_parsed_answer(j["parsed"].get<std::string>());
  r.error = j.value("error", "");
  r.greedy = j.value("greedy", false);
  if (r.stage != GenerationStage::Stage1 && !r.parsed) {
    throw Error(ErrorCode::InvalidArgument, "answer record without parsed value");
  }
  return r;
}

std::string metrics_to_json(const RunResult& r) {
  json j = json::object();
  for (const auto& [method, cells] : r.metrics) {
    json m = json::object();
    for (const auto& [n, c] : cells) {
      m[std::to_string(n)] = {{"auc", c.auc}, {"ap", c.ap}, {"degraded_count", c.degraded_count}};
    }
    j[method] = m;
  }
  return j.dump(2) + "\n";
}

DiagnosisScore subsample_scores(std::span<const GenerationRecord> records, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  std::vector<GenerationRecord> prefix;
  std::set<int> indices;
  for (const GenerationRecord& r : records) {
    if (r.greedy || !r.answer_bearing() || r.index >= n) continue;
    indices.insert(r.index);
    prefix.push_back(r);
  }
  if (static_cast<int>(indices.size()) < n) {
    throw Error(ErrorCode::InvalidArgument,
                "n = " + std::to_string(n) + " exceeds the generation pool (" +
                    std::to_string(indices.size()) + " indices below n)");
  }
  return estimate_probability(prefix);
}

RunResult run_experiment(const RunConfig& cfg, const RunOptions& opts) {
  const Prepared p = prepare(cfg);
  ensure_output_dir(cfg.output_dir);
  for (const char* stale : {kMetrics, kScores}) {
    std::error_code ec;
    fs::remove(out_path(cfg.output_dir, stale), ec);
  }
  json provenance = base_provenance(p, now_utc());
  write_provenance(cfg.output_dir, provenance);
  write_file_atomic(out_path(cfg.output_dir, kGenerations), "");
  return execute(p, opts, {}, std::move(provenance));
}

RunResult resume(const std::string& output_dir, const RunOptions& opts,
                 const std::optional<RunConfig>& expected) {
  const std::string prov_path = out_path(output_dir, kProvenance);
  if (!fs::exists(prov_path)) {
    throw Error(ErrorCode::Provenance, "no run to resume in " + output_dir);
  }
  json stored = json::parse(read_file_text(prov_path), nullptr, false);
  if (stored.is_discarded() || !stored.contains("config")) {
    throw Error(ErrorCode::Provenance, "corrupt provenance file: " + prov_path);
  }

  RunConfig cfg = parse_run_config(stored["config"], "", prov_path);
  cfg.output_dir = output_dir;

  std::vector<std::string> changes;
  auto compare = [&](const char* field, const std::string& now) {
    const std::string was = stored.value(field, "");
    if (was != now) changes.push_back(std::string(field) + " changed: " + was + " -> " + now);
  };
  if (expected) compare("config_digest", expected->digest());

  Prepared p = prepare(cfg);
  compare("prompt_digest", p.prompt_digest);
  compare("dataset_digest", p.dataset.source_digest);
  if (!changes.empty()) {
    std::string msg = "refusing to resume " + output_dir + ":";
    for (const std::string& c : changes) msg += "\n  " + c;
    throw Error(ErrorCode::Provenance, msg);
  }

  if (stored.value("status", "") == "complete") return load_run_result(output_dir);

  UnitRecords units = read_complete_units(out_path(output_dir, kGenerations), cfg);
  write_file_atomic(out_path(output_dir, kGenerations), canonical_log(p, units));
  return execute(p, opts, std::move(units), std::move(stored));
}

RunResult load_run_result(const std::string& output_dir) {
  const std::string prov_path = out_path(output_dir, kProvenance);
  if (!fs::exists(prov_path)) throw Error(ErrorCode::Incomplete, "no run in " + output_dir);
  json prov = json::parse(read_file_text(prov_path), nullptr, false);
  if (prov.is_discarded()) throw Error(ErrorCode::Incomplete, "corrupt provenance: " + prov_path);
  if (prov.value("status", "") != "complete") {
    throw Error(ErrorCode::Incomplete, "run in " + output_dir + " is not complete");
  }

  RunResult r;
  r.complete = true;
  r.dataset_name = prov.value("dataset_name", "");
  for (const json& m : prov["config"]["methods"]) r.method_order.push_back(m["name"]);
  r.n_values = prov["config"]["n_values"].get<std::vector<int>>();

  json metrics = json::parse(read_file_text(out_path(output_dir, kMetrics)), nullptr, false);
  if (metrics.is_discarded()) throw Error(ErrorCode::Incomplete, "corrupt metrics.json");
  for (auto m = metrics.begin(); m != metrics.end(); ++m) {
    for (auto c = m.value().begin(); c != m.value().end(); ++c) {
      r.metrics[m.key()][std::stoi(c.key())] =
          CellMetrics{.auc = c.value().at("auc").get<double>(),
                      .ap = c.value().at("ap").get<double>(),
                      .degraded_count = c.value().at("degraded_count").get<int>()};
    }
  }

  std::istringstream scores(read_file_text(out_path(output_dir, kScores)));
  std::string line;
  while (std::getline(scores, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    r.scores[j["method"].get<std::string>()][j["n"].get<int>()].push_back(
        DiagnosisScore{.sample_id = j["sample_id"],
                       .estimate = j["estimate"],
                       .n_total = j["n_total"],
                       .n_valid = j["n_valid"],
                       .degraded = j["degraded"]});
  }
  r.provenance = std::move(prov);
  return r;
}

}  // namespace ttsdiag
