/*
 * Copyright 2026 The ttsdiag Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to libttsdiag.
 *
 * Objects are opaque handles created by *_load / *_start / ttsdiag_run and
 * released with the matching *_free. Every fallible call returns a
 * ttsdiag_status; on failure ttsdiag_last_error() holds a message for the
 * calling thread until its next failing call. Strings handed out through
 * char** parameters are heap copies owned by the caller and released with
 * ttsdiag_string_free().
 */
#ifndef TTSDIAG_TTSDIAG_H
#define TTSDIAG_TTSDIAG_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(TTSDIAG_BUILDING_LIBRARY)
#    define TTSDIAG_API __declspec(dllexport)
#  else
#    define TTSDIAG_API __declspec(dllimport)
#  endif
#else
#  define TTSDIAG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ttsdiag_status {
  TTSDIAG_OK = 0,
  TTSDIAG_ERR_INVALID_ARGUMENT = 1,
  TTSDIAG_ERR_IO = 2,
  TTSDIAG_ERR_DATASET = 3,
  TTSDIAG_ERR_CONFIG = 4,
  TTSDIAG_ERR_TIMEOUT = 5,
  TTSDIAG_ERR_TRANSPORT = 6,
  TTSDIAG_ERR_PROTOCOL = 7,
  TTSDIAG_ERR_REJECTED = 8,
  TTSDIAG_ERR_PROVENANCE = 9,
  TTSDIAG_ERR_INCOMPLETE = 10,
  TTSDIAG_ERR_BIND = 11,
  TTSDIAG_ERR_INTERNAL = 99
} ttsdiag_status;

typedef struct ttsdiag_dataset ttsdiag_dataset;
typedef struct ttsdiag_run_config ttsdiag_run_config;
typedef struct ttsdiag_run_result ttsdiag_run_result;
typedef struct ttsdiag_mock_server ttsdiag_mock_server;

TTSDIAG_API const char* ttsdiag_version(void);
TTSDIAG_API const char* ttsdiag_last_error(void);
TTSDIAG_API const char* ttsdiag_status_string(ttsdiag_status status);
TTSDIAG_API void ttsdiag_string_free(char* s);

/* Datasets: a directory with task.json + manifest.jsonl, or a manifest path. */
TTSDIAG_API ttsdiag_status ttsdiag_dataset_load(const char* path, ttsdiag_dataset** out);
TTSDIAG_API size_t ttsdiag_dataset_size(const ttsdiag_dataset* d);
/* report_json: {"sample_count","class_counts":{"0","1"},"missing_files",
 * "resolution_notes","issues","ok"}. *ok is 1 when there are no issues. */
TTSDIAG_API ttsdiag_status ttsdiag_dataset_validate(const ttsdiag_dataset* d, char** report_json,
                                                    int* ok);
TTSDIAG_API void ttsdiag_dataset_free(ttsdiag_dataset* d);

/* Run configuration (JSON config file schema). */
TTSDIAG_API ttsdiag_status ttsdiag_run_config_load(const char* path, ttsdiag_run_config** out);
/* overrides_json keys: output_dir, n_values, stage1_variant, num_samples,
 * sample_concurrency, random_seed, split, cache_dir, prompt_file, dataset. */
TTSDIAG_API ttsdiag_status ttsdiag_run_config_apply(ttsdiag_run_config* cfg,
                                                    const char* overrides_json);
/* N-sweep: count == 0 selects the default ticks {1,2,4,8,16}. */
TTSDIAG_API ttsdiag_status ttsdiag_run_config_sweep(ttsdiag_run_config* cfg, const int* n_values,
                                                    size_t count);
TTSDIAG_API ttsdiag_status ttsdiag_run_config_to_json(const ttsdiag_run_config* cfg, char** out);
TTSDIAG_API void ttsdiag_run_config_free(ttsdiag_run_config* cfg);

typedef void (*ttsdiag_progress_fn)(const char* message, void* user);

typedef struct ttsdiag_run_options {
  size_t max_units; /* 0 = no limit; otherwise stop after this many units */
  ttsdiag_progress_fn progress; /* may be NULL */
  void* user;
} ttsdiag_run_options;

/* opts may be NULL. A run stopped by max_units yields an incomplete result. */
TTSDIAG_API ttsdiag_status ttsdiag_run(const ttsdiag_run_config* cfg,
                                       const ttsdiag_run_options* opts,
                                       ttsdiag_run_result** out);
/* expected may be NULL; when given its digest must match the stored run. */
TTSDIAG_API ttsdiag_status ttsdiag_resume(const char* output_dir,
                                          const ttsdiag_run_config* expected,
                                          const ttsdiag_run_options* opts,
                                          ttsdiag_run_result** out);
TTSDIAG_API ttsdiag_status ttsdiag_run_load(const char* output_dir, ttsdiag_run_result** out);
TTSDIAG_API int ttsdiag_run_result_complete(const ttsdiag_run_result* r);
TTSDIAG_API long ttsdiag_run_result_endpoint_requests(const ttsdiag_run_result* r);
TTSDIAG_API ttsdiag_status ttsdiag_run_result_metrics_json(const ttsdiag_run_result* r, char** out);
/* format: "markdown", "csv" or "json". */
TTSDIAG_API ttsdiag_status ttsdiag_report_render(const ttsdiag_run_result* r, const char* format,
                                                 char** out);
TTSDIAG_API void ttsdiag_run_result_free(ttsdiag_run_result* r);

/* Mock endpoint. config_path and dataset_path may be NULL; a dataset adds
 * its image digests to the label map. port 0 picks a free port. */
TTSDIAG_API ttsdiag_status ttsdiag_mock_start(const char* config_path, const char* dataset_path,
                                              const char* host, int port,
                                              ttsdiag_mock_server** out);
TTSDIAG_API int ttsdiag_mock_port(const ttsdiag_mock_server* m);
TTSDIAG_API long ttsdiag_mock_request_count(const ttsdiag_mock_server* m);
TTSDIAG_API int ttsdiag_mock_peak_in_flight(const ttsdiag_mock_server* m);
TTSDIAG_API void ttsdiag_mock_stop(ttsdiag_mock_server* m);
TTSDIAG_API void ttsdiag_mock_free(ttsdiag_mock_server* m);

/* Primitives. parse returns 0, 1, or -1 for unparseable. */
TTSDIAG_API int ttsdiag_parse_boxed_answer(const char* text);
TTSDIAG_API ttsdiag_status ttsdiag_auc(const double* scores, const int* labels, size_t n,
                                       double* out);
TTSDIAG_API ttsdiag_status ttsdiag_average_precision(const double* scores, const int* labels,
                                                     size_t n, double* out);
TTSDIAG_API ttsdiag_status ttsdiag_fit_power_law(const int* n_values, const double* metrics,
                                                 size_t count, double* alpha, double* beta,
                                                 double* rmse);

#ifdef __cplusplus
}
#endif

#endif /* TTSDIAG_TTSDIAG_H */
