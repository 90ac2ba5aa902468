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

#include "ttsdiag/ttsdiag.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "ttsdiag/dataset.hpp"
#include "ttsdiag/error.hpp"
#include "ttsdiag/metrics.hpp"
#include "ttsdiag/mockmodel.hpp"
#include "ttsdiag/pipeline.hpp"
#include "ttsdiag/runner.hpp"

using nlohmann::json;
using namespace ttsdiag;

struct ttsdiag_dataset {
  Dataset value;
};
struct ttsdiag_run_config {
  RunConfig value;
};
struct ttsdiag_run_result {
  RunResult value;
};
struct ttsdiag_mock_server {
  std::unique_ptr<MockServer> server;
};

namespace {

thread_local std::string g_last_error;

ttsdiag_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return TTSDIAG_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return TTSDIAG_ERR_IO;
    case ErrorCode::Dataset: return TTSDIAG_ERR_DATASET;
    case ErrorCode::Config: return TTSDIAG_ERR_CONFIG;
    case ErrorCode::Timeout: return TTSDIAG_ERR_TIMEOUT;
    case ErrorCode::Transport: return TTSDIAG_ERR_TRANSPORT;
    case ErrorCode::Protocol: return TTSDIAG_ERR_PROTOCOL;
    case ErrorCode::Rejected: return TTSDIAG_ERR_REJECTED;
    case ErrorCode::Provenance: return TTSDIAG_ERR_PROVENANCE;
    case ErrorCode::Incomplete: return TTSDIAG_ERR_INCOMPLETE;
    case ErrorCode::Bind: return TTSDIAG_ERR_BIND;
  }
  return TTSDIAG_ERR_INTERNAL;
}

template <class F>
ttsdiag_status guarded(F&& f) {
  try {
    f();
    return TTSDIAG_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception& e) {
    g_last_error = std::string("malformed JSON argument: ") + e.what();
    return TTSDIAG_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TTSDIAG_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

RunOptions to_options(const ttsdiag_run_options* opts) {
  RunOptions o;
  if (!opts) return o;
  if (opts->max_units > 0) o.max_units = opts->max_units;
  if (opts->progress) {
    auto fn = opts->progress;
    void* user = opts->user;
    o.progress = [fn, user](const std::string& msg) { fn(msg.c_str(), user); };
  }
  return o;
}

}  // namespace

extern "C" {

const char* ttsdiag_version(void) { return "1.0.0"; }

const char* ttsdiag_last_error(void) { return g_last_error.c_str(); }

const char* ttsdiag_status_string(ttsdiag_status status) {
  switch (status) {
    case TTSDIAG_OK: return "ok";
    case TTSDIAG_ERR_INVALID_ARGUMENT: return to_string(ErrorCode::InvalidArgument);
    case TTSDIAG_ERR_IO: return to_string(ErrorCode::Io);
    case TTSDIAG_ERR_DATASET: return to_string(ErrorCode::Dataset);
    case TTSDIAG_ERR_CONFIG: return to_string(ErrorCode::Config);
    case TTSDIAG_ERR_TIMEOUT: return to_string(ErrorCode::Timeout);
    case TTSDIAG_ERR_TRANSPORT: return to_string(ErrorCode::Transport);
    case TTSDIAG_ERR_PROTOCOL: return to_string(ErrorCode::Protocol);
    case TTSDIAG_ERR_REJECTED: return to_string(ErrorCode::Rejected);
    case TTSDIAG_ERR_PROVENANCE: return to_string(ErrorCode::Provenance);
    case TTSDIAG_ERR_INCOMPLETE: return to_string(ErrorCode::Incomplete);
    case TTSDIAG_ERR_BIND: return to_string(ErrorCode::Bind);
    case TTSDIAG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ttsdiag_string_free(char* s) { std::free(s); }

ttsdiag_status ttsdiag_dataset_load(const char* path, ttsdiag_dataset** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    *out = new ttsdiag_dataset{load_manifest(path)};
  });
}

size_t ttsdiag_dataset_size(const ttsdiag_dataset* d) { return d ? d->value.samples.size() : 0; }

ttsdiag_status ttsdiag_dataset_validate(const ttsdiag_dataset* d, char** report_json, int* ok) {
  return guarded([&] {
    require(d && report_json, "dataset and report_json must be non-null");
    const ValidationReport r = validate_dataset(d->value);
    json j = {{"dataset_name", d->value.task.dataset_name},
              {"sample_count", r.sample_count},
              {"class_counts", {{"0", r.class_counts[0]}, {"1", r.class_counts[1]}}},
              {"missing_files", r.missing_files},
              {"resolution_notes", r.resolution_notes},
              {"issues", r.issues},
              {"ok", r.ok()}};
    *report_json = copy_string(j.dump(2));
    if (ok) *ok = r.ok() ? 1 : 0;
  });
}

void ttsdiag_dataset_free(ttsdiag_dataset* d) { delete d; }

ttsdiag_status ttsdiag_run_config_load(const char* path, ttsdiag_run_config** out) {
  return guarded([&] {
    require(path && out, "path and out must be non-null");
    *out = new ttsdiag_run_config{load_run_config(path)};
  });
}

ttsdiag_status ttsdiag_run_config_apply(ttsdiag_run_config* cfg, const char* overrides_json) {
  return guarded([&] {
    require(cfg && overrides_json, "cfg and overrides_json must be non-null");
    RunConfig copy = cfg->value;
    apply_overrides(copy, json::parse(overrides_json));
    cfg->value = std::move(copy);
  });
}

ttsdiag_status ttsdiag_run_config_sweep(ttsdiag_run_config* cfg, const int* n_values,
                                        size_t count) {
  return guarded([&] {
    require(cfg && (count == 0 || n_values), "cfg must be non-null");
    std::vector<int> ns(n_values, n_values + count);
    for (int n : ns) require(n >= 1, "sweep n values must be positive");
    RunConfig copy = cfg->value;
    expand_sweep(copy, ns);
    copy.validate();
    cfg->value = std::move(copy);
  });
}

ttsdiag_status ttsdiag_run_config_to_json(const ttsdiag_run_config* cfg, char** out) {
  return guarded([&] {
    require(cfg && out, "cfg and out must be non-null");
    *out = copy_string(cfg->value.to_json().dump(2));
  });
}

void ttsdiag_run_config_free(ttsdiag_run_config* cfg) { delete cfg; }

ttsdiag_status ttsdiag_run(const ttsdiag_run_config* cfg, const ttsdiag_run_options* opts,
                           ttsdiag_run_result** out) {
  return guarded([&] {
    require(cfg && out, "cfg and out must be non-null");
    *out = new ttsdiag_run_result{run_experiment(cfg->value, to_options(opts))};
  });
}

ttsdiag_status ttsdiag_resume(const char* output_dir, const ttsdiag_run_config* expected,
                              const ttsdiag_run_options* opts, ttsdiag_run_result** out) {
  return guarded([&] {
    require(output_dir && out, "output_dir and out must be non-null");
    std::optional<RunConfig> want;
    if (expected) want = expected->value;
    *out = new ttsdiag_run_result{resume(output_dir, to_options(opts), want)};
  });
}

ttsdiag_status ttsdiag_run_load(const char* output_dir, ttsdiag_run_result** out) {
  return guarded([&] {
    require(output_dir && out, "output_dir and out must be non-null");
    *out = new ttsdiag_run_result{load_run_result(output_dir)};
  });
}

int ttsdiag_run_result_complete(const ttsdiag_run_result* r) {
  return r && r->value.complete ? 1 : 0;
}

long ttsdiag_run_result_endpoint_requests(const ttsdiag_run_result* r) {
  return r ? r->value.endpoint_requests : 0;
}

ttsdiag_status ttsdiag_run_result_metrics_json(const ttsdiag_run_result* r, char** out) {
  return guarded([&] {
    require(r && out, "result and out must be non-null");
    *out = copy_string(metrics_to_json(r->value));
  });
}

ttsdiag_status ttsdiag_report_render(const ttsdiag_run_result* r, const char* format, char** out) {
  return guarded([&] {
    require(r && format && out, "result, format and out must be non-null");
    *out = copy_string(render_report(r->value, parse_report_format(format)));
  });
}

void ttsdiag_run_result_free(ttsdiag_run_result* r) { delete r; }

ttsdiag_status ttsdiag_mock_start(const char* config_path, const char* dataset_path,
                                  const char* host, int port, ttsdiag_mock_server** out) {
  return guarded([&] {
    require(out, "out must be non-null");
    require(port >= 0 && port <= 65535, "port must be in [0, 65535]");
    MockConfig cfg = config_path ? MockConfig::from_file(config_path) : MockConfig{};
    if (dataset_path) {
      for (const auto& [digest, label] : label_map_from_manifest(dataset_path)) {
        cfg.label_map[digest] = label;
      }
    }
    *out = new ttsdiag_mock_server{MockServer::start(std::move(cfg), host ? host : "127.0.0.1", port)};
  });
}

int ttsdiag_mock_port(const ttsdiag_mock_server* m) { return m ? m->server->port() : -1; }

long ttsdiag_mock_request_count(const ttsdiag_mock_server* m) {
  return m ? m->server->request_count() : 0;
}

int ttsdiag_mock_peak_in_flight(const ttsdiag_mock_server* m) {
  return m ? m->server->peak_in_flight() : 0;
}

void ttsdiag_mock_stop(ttsdiag_mock_server* m) {
  if (m) m->server->stop();
}

void ttsdiag_mock_free(ttsdiag_mock_server* m) { delete m; }

int ttsdiag_parse_boxed_answer(const char* text) {
  if (!text) return -1;
  switch (parse_boxed_answer(text)) {
    case ParsedAnswer::Class0: return 0;
    case ParsedAnswer::Class1: return 1;
    case ParsedAnswer::Unparseable: return -1;
  }
  return -1;
}

ttsdiag_status ttsdiag_auc(const double* scores, const int* labels, size_t n, double* out) {
  return guarded([&] {
    require(scores && labels && out, "scores, labels and out must be non-null");
    *out = auc(ScoredSet({scores, n}, {labels, n}));
  });
}

ttsdiag_status ttsdiag_average_precision(const double* scores, const int* labels, size_t n,
                                         double* out) {
  return guarded([&] {
    require(scores && labels && out, "scores, labels and out must be non-null");
    *out = average_precision(ScoredSet({scores, n}, {labels, n}));
  });
}

ttsdiag_status ttsdiag_fit_power_law(const int* n_values, const double* metrics, size_t count,
                                     double* alpha, double* beta, double* rmse) {
  return guarded([&] {
    require(n_values && metrics, "n_values and metrics must be non-null");
    std::vector<PowerLawPoint> pts;
    for (size_t i = 0; i < count; ++i) pts.push_back({n_values[i], metrics[i]});
    const PowerLawFit fit = fit_power_law(pts);
    if (alpha) *alpha = fit.alpha;
    if (beta) *beta = fit.beta;
    if (rmse) *rmse = fit.rmse;
  });
}

}  // extern "C"
