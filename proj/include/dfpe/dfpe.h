// Copyright 2026 The DFPE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


/*
 * C interface to the fingerprint-ensemble library.
 *
 * All objects are opaque handles created by *_load / *_new / *_compute style
 * functions and released with the matching *_free function (free functions
 * accept NULL). Every fallible call returns a dfpe_status; on failure a
 * description is available from dfpe_last_error() on the calling thread until
 * the next failing call on that thread.
 *
 * Strings returned through char** out-parameters are heap allocated and must
 * be released with dfpe_string_free().
 */

#ifndef DFPE_DFPE_H_
#define DFPE_DFPE_H_

#include <stddef.h>

#if defined(_WIN32)
#  if defined(DFPE_BUILDING_LIBRARY)
#    define DFPE_API __declspec(dllexport)
#  else
#    define DFPE_API __declspec(dllimport)
#  endif
#else
#  define DFPE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dfpe_status {
  DFPE_OK = 0,
  DFPE_E_INVALID_ARGUMENT = 1, /* NULL handle or bad enum value from the caller */
  DFPE_E_INPUT = 2,            /* malformed or inconsistent input data / config */
  DFPE_E_RUNTIME = 3           /* I/O, network or other failure during work */
} dfpe_status;

typedef enum dfpe_aggregation {
  DFPE_AGG_POOLED = 0,
  DFPE_AGG_SUBJECT_MEAN = 1
} dfpe_aggregation;

typedef struct dfpe_dataset dfpe_dataset;
typedef struct dfpe_predictions dfpe_predictions;
typedef struct dfpe_disciplines dfpe_disciplines;
typedef struct dfpe_embeddings dfpe_embeddings;
typedef struct dfpe_config dfpe_config;
typedef struct dfpe_fingerprints dfpe_fingerprints;
typedef struct dfpe_ensembles dfpe_ensembles;
typedef struct dfpe_report dfpe_report;

DFPE_API const char* dfpe_version(void);
DFPE_API const char* dfpe_last_error(void);
DFPE_API void dfpe_string_free(char* s);

/* ---- inputs ------------------------------------------------------------ */

DFPE_API dfpe_status dfpe_dataset_load(const char* path, dfpe_dataset** out);
DFPE_API void dfpe_dataset_free(dfpe_dataset* dataset);
DFPE_API size_t dfpe_dataset_subject_count(const dfpe_dataset* dataset);
DFPE_API size_t dfpe_dataset_question_count(const dfpe_dataset* dataset, int validation);

DFPE_API dfpe_status dfpe_predictions_load(const char* path, const dfpe_dataset* dataset,
                                           dfpe_predictions** out);
DFPE_API void dfpe_predictions_free(dfpe_predictions* predictions);
DFPE_API size_t dfpe_predictions_model_count(const dfpe_predictions* predictions);
DFPE_API size_t dfpe_predictions_warning_count(const dfpe_predictions* predictions);
/* Borrowed pointer, valid while the handle lives. NULL when out of range. */
DFPE_API const char* dfpe_predictions_warning(const dfpe_predictions* predictions, size_t index);

/* Per-subject question counts, and the completeness matrix when predictions
 * is non-NULL, as a JSON document. */
DFPE_API dfpe_status dfpe_ingest_summary(const dfpe_dataset* dataset,
                                         const dfpe_predictions* predictions, char** json_out);

DFPE_API dfpe_status dfpe_disciplines_load(const char* path, const dfpe_dataset* dataset,
                                           dfpe_disciplines** out);
DFPE_API void dfpe_disciplines_free(dfpe_disciplines* disciplines);

DFPE_API dfpe_status dfpe_embeddings_load(const char* path, const dfpe_dataset* dataset,
                                          dfpe_embeddings** out);
DFPE_API void dfpe_embeddings_free(dfpe_embeddings* embeddings);

/* ---- run configuration ------------------------------------------------- */

/* Defaults: quantile_q 0.05, gamma 5, dbscan_eps 1e-4, dbscan_min_pts 2,
 * answer_pattern fingerprints, filter_then_cluster. */
DFPE_API dfpe_status dfpe_config_new(dfpe_config** out);
DFPE_API void dfpe_config_free(dfpe_config* config);
/* Overlays the fields of a JSON config file; also registers its presets. */
DFPE_API dfpe_status dfpe_config_load_file(dfpe_config* config, const char* path);
DFPE_API dfpe_status dfpe_config_apply_preset(dfpe_config* config, const char* name);
/* key is a RunConfig field name, value its textual form. */
DFPE_API dfpe_status dfpe_config_set(dfpe_config* config, const char* key, const char* value);
DFPE_API dfpe_status dfpe_config_to_json(const dfpe_config* config, char** json_out);

/* ---- pipeline stages --------------------------------------------------- */

/* embeddings may be NULL unless the config selects external_embedding. */
DFPE_API dfpe_status dfpe_fingerprints_compute(const dfpe_dataset* dataset,
                                               const dfpe_predictions* predictions,
                                               const dfpe_embeddings* embeddings,
                                               const dfpe_config* config,
                                               dfpe_fingerprints** out);
DFPE_API void dfpe_fingerprints_free(dfpe_fingerprints* fingerprints);
DFPE_API dfpe_status dfpe_fingerprints_write(const dfpe_fingerprints* fingerprints,
                                             const char* path);

/* Per-subject distance matrices and DBSCAN labels over all pool models. */
DFPE_API dfpe_status dfpe_clusters_write(const dfpe_fingerprints* fingerprints,
                                         const dfpe_config* config, const char* path);

DFPE_API dfpe_status dfpe_ensembles_build(const dfpe_dataset* dataset,
                                          const dfpe_predictions* predictions,
                                          const dfpe_fingerprints* fingerprints,
                                          const dfpe_config* config, dfpe_ensembles** out);
DFPE_API dfpe_status dfpe_ensembles_load(const char* path, dfpe_ensembles** out);
DFPE_API void dfpe_ensembles_free(dfpe_ensembles* ensembles);
DFPE_API dfpe_status dfpe_ensembles_write(const dfpe_ensembles* ensembles, const char* path);
DFPE_API size_t dfpe_ensembles_member_count(const dfpe_ensembles* ensembles, const char* subject_id);

/* Weighted-vote predictions for every test question, one JSON line each. */
DFPE_API dfpe_status dfpe_predict_write(const dfpe_ensembles* ensembles,
                                        const dfpe_dataset* dataset,
                                        const dfpe_predictions* predictions, const char* path);

DFPE_API dfpe_status dfpe_evaluate(const dfpe_dataset* dataset,
                                   const dfpe_predictions* predictions,
                                   const dfpe_disciplines* disciplines,
                                   const dfpe_ensembles* ensembles, dfpe_aggregation aggregation,
                                   dfpe_report** out);
DFPE_API dfpe_status dfpe_report_load(const char* path, dfpe_report** out);
DFPE_API void dfpe_report_free(dfpe_report* report);
/* method is one of "BSM", "BSMoV", "MVoting", "DFPE". */
DFPE_API dfpe_status dfpe_report_accuracy(const dfpe_report* report, const char* method,
                                          double* overall, double* discipline_mean);
DFPE_API dfpe_status dfpe_report_write_json(const dfpe_report* report, const char* path);
DFPE_API dfpe_status dfpe_report_write_text(const dfpe_report* report, const char* path);
DFPE_API dfpe_status dfpe_report_write_cooccurrence(const dfpe_report* report, const char* path);
DFPE_API dfpe_status dfpe_report_text(const dfpe_report* report, char** text_out);

/* axis is "quantile", "gamma" or "eps". values may be NULL with count 0 to
 * use the default grid. Writes sweep_<axis>.csv and sweep_<axis>.svg. */
DFPE_API dfpe_status dfpe_sweep_run(const char* axis, const double* values, size_t count,
                                    const dfpe_config* config, const dfpe_dataset* dataset,
                                    const dfpe_predictions* predictions,
                                    const dfpe_embeddings* embeddings,
                                    const dfpe_disciplines* disciplines,
                                    dfpe_aggregation aggregation, const char* out_dir);

/* Generates a synthetic pool from a JSON spec file into out_dir
 * (manifest.jsonl, predictions.jsonl, disciplines.jsonl, accuracy_check.json).
 * seed_override < 0 keeps the spec's seed. */
DFPE_API dfpe_status dfpe_simulate(const char* spec_path, long long seed_override,
                                   const char* out_dir);

/* Collects predictions from chat-completions endpoints into out_path. The
 * summary (cache hits, network calls, warnings) is returned as JSON. */
DFPE_API dfpe_status dfpe_collect(const char* endpoints_path, const char* templates_path,
                                  const dfpe_dataset* dataset, const char* cache_dir,
                                  const char* out_path, char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif /* DFPE_DFPE_H_ */
