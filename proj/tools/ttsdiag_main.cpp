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

// Command-line front end. Uses only the C interface of libttsdiag.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttsdiag/ttsdiag.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int exit_code_for(ttsdiag_status s) {
  switch (s) {
    case TTSDIAG_OK: return kExitOk;
    case TTSDIAG_ERR_INVALID_ARGUMENT:
    case TTSDIAG_ERR_CONFIG: return kExitUsage;
    default: return kExitRuntime;
  }
}

int fail(ttsdiag_status s) {
  std::cerr << "ttsdiag: " << ttsdiag_status_string(s) << ": " << ttsdiag_last_error() << "\n";
  return exit_code_for(s);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  ttsdiag_string_free(s);
  return out;
}

void print_progress(const char* message, void*) { std::cerr << message << "\n"; }

struct RunArgs {
  std::string config;
  std::string output_dir;
  std::string stage1_variant;
  std::string split;
  std::string cache_dir;
  std::string prompt_file;
  std::string dataset;
  std::vector<int> n_values;
  int num_samples = 0;
  int sample_concurrency = 0;
  std::optional<long long> seed;
  std::size_t max_units = 0;
  bool resume = false;
  bool quiet = false;
};

void add_run_options(CLI::App* cmd, RunArgs& a, bool sweep) {
  cmd->add_option("--config,-c", a.config, "run config JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--output-dir,-o", a.output_dir, "override output_dir");
  cmd->add_option("--stage1-variant", a.stage1_variant,
                  "dictated|unconstrained for describe_then_diagnose methods");
  cmd->add_option("--n-values", a.n_values,
                  sweep ? "sweep ticks (default 1 2 4 8 16)" : "override n_values");
  cmd->add_option("--num-samples", a.num_samples, "override num_samples of every method");
  cmd->add_option("--split", a.split, "only samples with this split tag");
  cmd->add_option("--dataset", a.dataset, "override dataset path");
  cmd->add_option("--cache-dir", a.cache_dir, "override cache directory");
  cmd->add_option("--prompt-file", a.prompt_file, "override prompt template file");
  cmd->add_option("--sample-concurrency", a.sample_concurrency, "samples processed in parallel");
  cmd->add_option("--seed", a.seed, "processing-order seed");
  cmd->add_option("--max-units", a.max_units,
                  "stop after this many (method, sample) units; resume later with --resume");
  cmd->add_flag("--resume", a.resume, "continue a partial run in the output directory");
  cmd->add_flag("--quiet,-q", a.quiet, "no progress lines");
}

int do_run(const RunArgs& a, bool sweep) {
  ttsdiag_run_config* cfg = nullptr;
  ttsdiag_status s = ttsdiag_run_config_load(a.config.c_str(), &cfg);
  if (s != TTSDIAG_OK) return fail(s);

  nlohmann::json ov = nlohmann::json::object();
  if (!a.output_dir.empty()) ov["output_dir"] = a.output_dir;
  if (!a.stage1_variant.empty()) ov["stage1_variant"] = a.stage1_variant;
  if (!a.split.empty()) ov["split"] = a.split;
  if (!a.dataset.empty()) ov["dataset"] = a.dataset;
  if (!a.cache_dir.empty()) ov["cache_dir"] = a.cache_dir;
  if (!a.prompt_file.empty()) ov["prompt_file"] = a.prompt_file;
  if (a.num_samples != 0) ov["num_samples"] = a.num_samples;
  if (a.sample_concurrency != 0) ov["sample_concurrency"] = a.sample_concurrency;
  if (a.seed) ov["random_seed"] = *a.seed;
  if (!sweep && !a.n_values.empty()) ov["n_values"] = a.n_values;
  s = ttsdiag_run_config_apply(cfg, ov.dump().c_str());
  if (s == TTSDIAG_OK && sweep) {
    s = ttsdiag_run_config_sweep(cfg, a.n_values.data(), a.n_values.size());
  }
  if (s != TTSDIAG_OK) {
    ttsdiag_run_config_free(cfg);
    return fail(s);
  }

  ttsdiag_run_options opts{a.max_units, a.quiet ? nullptr : print_progress, nullptr};
  ttsdiag_run_result* result = nullptr;
  if (a.resume) {
    const std::string out_dir =
        nlohmann::json::parse(take([&] {
          char* j = nullptr;
          ttsdiag_run_config_to_json(cfg, &j);
          return j;
        }()))
            .value("output_dir", "");
    s = ttsdiag_resume(out_dir.c_str(), cfg, &opts, &result);
  } else {
    s = ttsdiag_run(cfg, &opts, &result);
  }
  ttsdiag_run_config_free(cfg);
  if (s != TTSDIAG_OK) return fail(s);

  if (!ttsdiag_run_result_complete(result)) {
    std::cerr << "run stopped before completion (" << ttsdiag_run_result_endpoint_requests(result)
              << " endpoint requests); continue with --resume\n";
    ttsdiag_run_result_free(result);
    return kExitOk;
  }
  char* report = nullptr;
  s = ttsdiag_report_render(result, "markdown", &report);
  const long requests = ttsdiag_run_result_endpoint_requests(result);
  ttsdiag_run_result_free(result);
  if (s != TTSDIAG_OK) return fail(s);
  std::cout << take(report);
  if (!a.quiet) std::cerr << "endpoint requests: " << requests << "\n";
  return kExitOk;
}

int do_report(const std::string& run_dir, const std::string& format, const std::string& out) {
  ttsdiag_run_result* result = nullptr;
  ttsdiag_status s = ttsdiag_run_load(run_dir.c_str(), &result);
  if (s != TTSDIAG_OK) return fail(s);
  char* text = nullptr;
  s = ttsdiag_report_render(result, format.c_str(), &text);
  ttsdiag_run_result_free(result);
  if (s != TTSDIAG_OK) return fail(s);
  const std::string body = take(text);
  if (out.empty()) {
    std::cout << body;
    return kExitOk;
  }
  std::ofstream f(out, std::ios::binary);
  f << body;
  if (!f) {
    std::cerr << "ttsdiag: cannot write " << out << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int do_mock_serve(const std::string& config, const std::string& dataset, const std::string& host,
                  int port) {
  // Block termination signals before the server threads start so that only
  // sigwait below receives them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  ttsdiag_mock_server* mock = nullptr;
  const ttsdiag_status s =
      ttsdiag_mock_start(config.empty() ? nullptr : config.c_str(),
                         dataset.empty() ? nullptr : dataset.c_str(), host.c_str(), port, &mock);
  if (s != TTSDIAG_OK) return fail(s);
  std::cout << "mock endpoint listening on http://" << host << ":" << ttsdiag_mock_port(mock)
            << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  ttsdiag_mock_stop(mock);
  std::cerr << "served " << ttsdiag_mock_request_count(mock) << " requests\n";
  ttsdiag_mock_free(mock);
  return kExitOk;
}

int do_validate(const std::string& dataset, bool as_json) {
  ttsdiag_dataset* d = nullptr;
  ttsdiag_status s = ttsdiag_dataset_load(dataset.c_str(), &d);
  if (s != TTSDIAG_OK) return fail(s);
  char* report = nullptr;
  int ok = 0;
  s = ttsdiag_dataset_validate(d, &report, &ok);
  ttsdiag_dataset_free(d);
  if (s != TTSDIAG_OK) return fail(s);
  const std::string text = take(report);
  if (as_json) {
    std::cout << text << "\n";
    return ok ? kExitOk : kExitRuntime;
  }
  const auto j = nlohmann::json::parse(text);
  std::cout << "dataset: " << j["dataset_name"].get<std::string>() << "\n"
            << "samples: " << j["sample_count"] << "\n"
            << "class 0: " << j["class_counts"]["0"] << "\n"
            << "class 1: " << j["class_counts"]["1"] << "\n";
  for (const auto& m : j["missing_files"]) std::cout << "missing: " << m.get<std::string>() << "\n";
  for (const auto& n : j["resolution_notes"]) std::cout << "note: " << n.get<std::string>() << "\n";
  for (const auto& i : j["issues"]) std::cout << "issue: " << i.get<std::string>() << "\n";
  std::cout << (ok ? "ok" : "invalid") << "\n";
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot binary image diagnosis with test-time scaling"};
  app.set_version_flag("--version", std::string(ttsdiag_version()));
  app.require_subcommand(1, 1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "execute the methods of a run config");
  add_run_options(run, run_args, false);

  RunArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "run config expanded over an N sweep");
  add_run_options(sweep, sweep_args, true);

  std::string report_dir, report_format = "markdown", report_out;
  auto* report = app.add_subcommand("report", "render tables or curve data of a finished run");
  report->add_option("--run,-r", report_dir, "output directory of a run")->required();
  report->add_option("--format,-f", report_format, "markdown|csv|json");
  report->add_option("--output", report_out, "write to file instead of stdout");

  std::string mock_config, mock_dataset, mock_host = "127.0.0.1";
  int mock_port = 8000;
  auto* mock = app.add_subcommand("mock-serve", "serve the deterministic mock endpoint");
  mock->add_option("--config,-c", mock_config, "mock config JSON")->check(CLI::ExistingFile);
  mock->add_option("--dataset,-d", mock_dataset, "build the label map from this dataset");
  mock->add_option("--host", mock_host, "bind address");
  mock->add_option("--port,-p", mock_port, "port (0 = any free port)")->check(CLI::Range(0, 65535));

  std::string validate_dataset;
  bool validate_json = false;
  auto* validate = app.add_subcommand("validate", "check a dataset manifest and its images");
  validate->add_option("--dataset,-d", validate_dataset, "dataset directory or manifest")
      ->required();
  validate->add_flag("--json", validate_json, "print the full report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (run->parsed()) return do_run(run_args, false);
  if (sweep->parsed()) return do_run(sweep_args, true);
  if (report->parsed()) return do_report(report_dir, report_format, report_out);
  if (mock->parsed()) return do_mock_serve(mock_config, mock_dataset, mock_host, mock_port);
  if (validate->parsed()) return do_validate(validate_dataset, validate_json);
  return kExitUsage;
}
