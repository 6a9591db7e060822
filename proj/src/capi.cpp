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


#include "dfpe/dfpe.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "dfpe/cluster.hpp"
#include "dfpe/collect.hpp"
#include "dfpe/config.hpp"
#include "dfpe/ensemble.hpp"
#include "dfpe/error.hpp"
#include "dfpe/evaluate.hpp"
#include "dfpe/fingerprint.hpp"
#include "dfpe/ingest.hpp"
#include "dfpe/simulate.hpp"
#include "dfpe/sweep.hpp"
#include "jsonl.hpp"

#ifndef DFPE_VERSION_STRING
#define DFPE_VERSION_STRING "0.0.0"
#endif

struct dfpe_dataset {
  dfpe::Dataset value;
};
struct dfpe_predictions {
  dfpe::PredictionSet value;
};
struct dfpe_disciplines {
  dfpe::DisciplineMap value;
};
struct dfpe_embeddings {
  dfpe::EmbeddingSet value;
};
struct dfpe_config {
  dfpe::RunConfig value;
  dfpe::PresetRegistry presets;
};
struct dfpe_fingerprints {
  dfpe::FingerprintTable value;
};
struct dfpe_ensembles {
  dfpe::EnsembleSet value;
  dfpe::RunConfig config;
};
struct dfpe_report {
  dfpe::EvalReport value;
};

namespace {

thread_local std::string g_last_error;

struct NullArgument {
  const char* name;
};

template <typename T>
const T& need(const T* p, const char* name) {
  if (p == nullptr) throw NullArgument{name};
  return *p;
}

const char* need_str(const char* s, const char* name) {
  if (s == nullptr) throw NullArgument{name};
  return s;
}

template <typename Fn>
dfpe_status guarded(Fn&& fn) {
  try {
    fn();
    return DFPE_OK;
  } catch (const NullArgument& e) {
    g_last_error = std::string("argument '") + e.name + "' is NULL";
    return DFPE_E_INVALID_ARGUMENT;
  } catch (const dfpe::InputError& e) {
    g_last_error = e.what();
    return DFPE_E_INPUT;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return DFPE_E_INPUT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DFPE_E_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return DFPE_E_RUNTIME;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Handle, typename Fn>
dfpe_status create(Handle** out, Fn&& make) {
  return guarded([&] {
    if (out == nullptr) throw NullArgument{"out"};
    *out = nullptr;
    *out = new Handle{make()};
  });
}

dfpe::DisciplineAggregation to_aggregation(dfpe_aggregation a) {
  switch (a) {
    case DFPE_AGG_POOLED: return dfpe::DisciplineAggregation::kPooled;
    case DFPE_AGG_SUBJECT_MEAN: return dfpe::DisciplineAggregation::kSubjectMean;
  }
  throw NullArgument{"aggregation"};
}

}  // namespace

extern "C" {

const char* dfpe_version(void) { return DFPE_VERSION_STRING; }
const char* dfpe_last_error(void) { return g_last_error.c_str(); }
void dfpe_string_free(char* s) { std::free(s); }

dfpe_status dfpe_dataset_load(const char* path, dfpe_dataset** out) {
  return create(out, [&] { return dfpe::load_dataset(need_str(path, "path")); });
}
void dfpe_dataset_free(dfpe_dataset* dataset) { delete dataset; }

size_t dfpe_dataset_subject_count(const dfpe_dataset* dataset) {
  return dataset ? dataset->value.subjects().size() : 0;
}

size_t dfpe_dataset_question_count(const dfpe_dataset* dataset, int validation) {
  if (!dataset) return 0;
  return dataset->value.count(validation ? dfpe::Split::kValidation : dfpe::Split::kTest);
}

dfpe_status dfpe_predictions_load(const char* path, const dfpe_dataset* dataset,
                                  dfpe_predictions** out) {
  return create(out, [&] {
    return dfpe::load_predictions(need_str(path, "path"), need(dataset, "dataset").value);
  });
}
void dfpe_predictions_free(dfpe_predictions* predictions) { delete predictions; }

size_t dfpe_predictions_model_count(const dfpe_predictions* predictions) {
  return predictions ? predictions->value.pool().size() : 0;
}

size_t dfpe_predictions_warning_count(const dfpe_predictions* predictions) {
  return predictions ? predictions->value.warnings().size() : 0;
}

const char* dfpe_predictions_warning(const dfpe_predictions* predictions, size_t index) {
  if (!predictions || index >= predictions->value.warnings().size()) return nullptr;
  return predictions->value.warnings()[index].c_str();
}

dfpe_status dfpe_ingest_summary(const dfpe_dataset* dataset, const dfpe_predictions* predictions,
                                char** json_out) {
  return guarded([&] {
    const auto& ds = need(dataset, "dataset").value;
    if (json_out == nullptr) throw NullArgument{"json_out"};
    nlohmann::json subjects = nlohmann::json::object();
    for (const auto& [id, q] : ds.subjects())
      subjects[id] = {{"validation", q.validation.size()}, {"test", q.test.size()}};
    nlohmann::json doc{{"subjects", subjects},
                       {"totals",
                        {{"validation", ds.count(dfpe::Split::kValidation)},
                         {"test", ds.count(dfpe::Split::kTest)}}}};
    if (predictions) {
      const auto& p = predictions->value;
      nlohmann::json matrix = nlohmann::json::object();
      for (const auto& model : p.pool().model_ids)
        for (const auto& subject : ds.subject_ids())
          matrix[model][subject] = p.completeness(model, subject).fraction();
      doc["models"] = p.pool().model_ids;
      doc["completeness"] = matrix;
      doc["warnings"] = p.warnings();
    }
    *json_out = dup_string(doc.dump(2) + "\n");
  });
}

dfpe_status dfpe_disciplines_load(const char* path, const dfpe_dataset* dataset,
                                  dfpe_disciplines** out) {
  return create(out, [&] {
    return dfpe::load_discipline_map(need_str(path, "path"), need(dataset, "dataset").value);
  });
}
void dfpe_disciplines_free(dfpe_disciplines* disciplines) { delete disciplines; }

dfpe_status dfpe_embeddings_load(const char* path, const dfpe_dataset* dataset,
                                 dfpe_embeddings** out) {
  return create(out, [&] {
    return dfpe::EmbeddingSet::load(need_str(path, "path"), need(dataset, "dataset").value);
  });
}
void dfpe_embeddings_free(dfpe_embeddings* embeddings) { delete embeddings; }

dfpe_status dfpe_config_new(dfpe_config** out) {
  return guarded([&] {
    if (out == nullptr) throw NullArgument{"out"};
    *out = new dfpe_config{};
  });
}
void dfpe_config_free(dfpe_config* config) { delete config; }

dfpe_status dfpe_config_load_file(dfpe_config* config, const char* path) {
  return guarded([&] {
    if (config == nullptr) throw NullArgument{"config"};
    const auto file = dfpe::load_config_file(need_str(path, "path"));
    config->value = file.config;
    config->presets = file.presets;
  });
}

dfpe_status dfpe_config_apply_preset(dfpe_config* config, const char* name) {
  return guarded([&] {
    if (config == nullptr) throw NullArgument{"config"};
    config->value = config->presets.apply(need_str(name, "name"), config->value);
  });
}

dfpe_status dfpe_config_set(dfpe_config* config, const char* key, const char* value) {
  return guarded([&] {
    if (config == nullptr) throw NullArgument{"config"};
    dfpe::RunConfig updated = config->value;
    dfpe::set_field(updated, need_str(key, "key"), need_str(value, "value"));
    updated.validate();
    config->value = updated;
  });
}

dfpe_status dfpe_config_to_json(const dfpe_config* config, char** json_out) {
  return guarded([&] {
    const auto& c = need(config, "config").value;
    if (json_out == nullptr) throw NullArgument{"json_out"};
    *json_out = dup_string(dfpe::to_json(c).dump(2) + "\n");
  });
}

dfpe_status dfpe_fingerprints_compute(const dfpe_dataset* dataset,
                                      const dfpe_predictions* predictions,
                                      const dfpe_embeddings* embeddings, const dfpe_config* config,
                                      dfpe_fingerprints** out) {
  return create(out, [&] {
    return dfpe::compute_fingerprints(need(dataset, "dataset").value,
                                      need(predictions, "predictions").value,
                                      need(config, "config").value.fingerprint_strategy,
                                      embeddings ? &embeddings->value : nullptr);
  });
}
void dfpe_fingerprints_free(dfpe_fingerprints* fingerprints) { delete fingerprints; }

dfpe_status dfpe_fingerprints_write(const dfpe_fingerprints* fingerprints, const char* path) {
  return guarded([&] {
    dfpe::detail::write_file_atomic(need_str(path, "path"),
                                    dfpe::fingerprints_to_jsonl(need(fingerprints, "fingerprints").value));
  });
}

dfpe_status dfpe_clusters_write(const dfpe_fingerprints* fingerprints, const dfpe_config* config,
                                const char* path) {
  return guarded([&] {
    const auto& table = need(fingerprints, "fingerprints").value;
    const auto& c = need(config, "config").value;
    c.validate();
    nlohmann::json subjects = nlohmann::json::array();
    for (const auto& [subject, fps] : table) {
      if (fps.empty()) continue;
      const auto distances = dfpe::pairwise_distances(fps);
      auto raw = dfpe::dbscan(distances, c.dbscan_eps, c.dbscan_min_pts);
      raw.subject_id = subject;
      const auto promoted = dfpe::promote_noise_to_singletons(raw);
      subjects.push_back(dfpe::clustering_debug_json(distances, raw, promoted));
    }
    const nlohmann::json doc{{"config", dfpe::to_json(c)}, {"subjects", subjects}};
    dfpe::detail::write_file_atomic(need_str(path, "path"), doc.dump(2) + "\n");
  });
}

dfpe_status dfpe_ensembles_build(const dfpe_dataset* dataset, const dfpe_predictions* predictions,
                                 const dfpe_fingerprints* fingerprints, const dfpe_config* config,
                                 dfpe_ensembles** out) {
  return guarded([&] {
    if (out == nullptr) throw NullArgument{"out"};
    *out = nullptr;
    const auto& c = need(config, "config").value;
    auto built = dfpe::build_ensembles(need(dataset, "dataset").value,
                                       need(predictions, "predictions").value,
                                       need(fingerprints, "fingerprints").value, c);
    *out = new dfpe_ensembles{std::move(built), c};
  });
}

dfpe_status dfpe_ensembles_load(const char* path, dfpe_ensembles** out) {
  return guarded([&] {
    if (out == nullptr) throw NullArgument{"out"};
    *out = nullptr;
    const auto text = dfpe::detail::read_file(need_str(path, "path"));
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw dfpe::InputError(std::string(path) + ": " + e.what());
    }
    dfpe::RunConfig config;
    if (doc.contains("config")) dfpe::apply_json(config, doc.at("config"));
    *out = new dfpe_ensembles{dfpe::ensembles_from_json(doc), config};
  });
}
void dfpe_ensembles_free(dfpe_ensembles* ensembles) { delete ensembles; }

dfpe_status dfpe_ensembles_write(const dfpe_ensembles* ensembles, const char* path) {
  return guarded([&] {
    const auto& e = need(ensembles, "ensembles");
    dfpe::detail::write_file_atomic(need_str(path, "path"),
                                    dfpe::ensembles_to_json(e.value, e.config).dump(2) + "\n");
  });
}

size_t dfpe_ensembles_member_count(const dfpe_ensembles* ensembles, const char* subject_id) {
  if (!ensembles || !subject_id) return 0;
  auto it = ensembles->value.find(subject_id);
  return it == ensembles->value.end() ? 0 : it->second.members.size();
}

dfpe_status dfpe_predict_write(const dfpe_ensembles* ensembles, const dfpe_dataset* dataset,
                               const dfpe_predictions* predictions, const char* path) {
  return guarded([&] {
    const auto map = dfpe::predict_all(need(ensembles, "ensembles").value,
                                       need(predictions, "predictions").value,
                                       need(dataset, "dataset").value);
    dfpe::detail::write_file_atomic(need_str(path, "path"), dfpe::predictions_to_jsonl(map));
  });
}

dfpe_status dfpe_evaluate(const dfpe_dataset* dataset, const dfpe_predictions* predictions,
                          const dfpe_disciplines* disciplines, const dfpe_ensembles* ensembles,
                          dfpe_aggregation aggregation, dfpe_report** out) {
  return create(out, [&] {
    return dfpe::evaluate(need(predictions, "predictions").value, need(dataset, "dataset").value,
                          need(disciplines, "disciplines").value,
                          need(ensembles, "ensembles").value, to_aggregation(aggregation));
  });
}

dfpe_status dfpe_report_load(const char* path, dfpe_report** out) {
  return create(out, [&] {
    const auto text = dfpe::detail::read_file(need_str(path, "path"));
    try {
      return dfpe::report_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
      throw dfpe::InputError(std::string(path) + ": " + e.what());
    }
  });
}
void dfpe_report_free(dfpe_report* report) { delete report; }

dfpe_status dfpe_report_accuracy(const dfpe_report* report, const char* method, double* overall,
                                 double* discipline_mean) {
  return guarded([&] {
    const auto& m = need(report, "report").value.method(need_str(method, "method"));
    if (overall) *overall = m.overall_accuracy();
    if (discipline_mean) *discipline_mean = m.discipline_accuracy_mean;
  });
}

dfpe_status dfpe_report_write_json(const dfpe_report* report, const char* path) {
  return guarded([&] {
    dfpe::detail::write_file_atomic(need_str(path, "path"),
                                    dfpe::to_json(need(report, "report").value).dump(2) + "\n");
  });
}

dfpe_status dfpe_report_write_text(const dfpe_report* report, const char* path) {
  return guarded([&] {
    dfpe::detail::write_file_atomic(need_str(path, "path"),
                                    dfpe::render_text(need(report, "report").value));
  });
}

dfpe_status dfpe_report_write_cooccurrence(const dfpe_report* report, const char* path) {
  return guarded([&] {
    dfpe::detail::write_file_atomic(
        need_str(path, "path"),
        dfpe::render_cooccurrence_tsv(need(report, "report").value.cooccurrence));
  });
}

dfpe_status dfpe_report_text(const dfpe_report* report, char** text_out) {
  return guarded([&] {
    const auto& r = need(report, "report").value;
    if (text_out == nullptr) throw NullArgument{"text_out"};
    *text_out = dup_string(dfpe::render_text(r));
  });
}

dfpe_status dfpe_sweep_run(const char* axis, const double* values, size_t count,
                           const dfpe_config* config, const dfpe_dataset* dataset,
                           const dfpe_predictions* predictions, const dfpe_embeddings* embeddings,
                           const dfpe_disciplines* disciplines, dfpe_aggregation aggregation,
                           const char* out_dir) {
  return guarded([&] {
    dfpe::SweepSpec spec;
    spec.axis = dfpe::parse_sweep_axis(need_str(axis, "axis"));
    if (count > 0) {
      if (values == nullptr) throw NullArgument{"values"};
      spec.values.assign(values, values + count);
    } else {
      spec.values = dfpe::default_grid(spec.axis);
    }
    spec.fixed = need(config, "config").value;
    spec.outputs = need_str(out_dir, "out_dir");
    const auto& ds = need(dataset, "dataset").value;
    const auto& preds = need(predictions, "predictions").value;
    const auto table = dfpe::compute_fingerprints(ds, preds, spec.fixed.fingerprint_strategy,
                                                  embeddings ? &embeddings->value : nullptr);
    const auto rows = dfpe::run_sweep(spec, ds, preds, table, need(disciplines, "disciplines").value,
                                      to_aggregation(aggregation));
    dfpe::write_sweep(spec, rows);
  });
}

dfpe_status dfpe_simulate(const char* spec_path, long long seed_override, const char* out_dir) {
  return guarded([&] {
    auto spec = dfpe::load_pool_spec(need_str(spec_path, "spec_path"));
    if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);
    const std::filesystem::path dir = need_str(out_dir, "out_dir");
    const auto pool = dfpe::generate(spec);
    dfpe::write_pool(pool, dir);
    const auto dataset = dfpe::Dataset::from_records(pool.questions);
    const auto predictions = dfpe::PredictionSet::from_records(dataset, pool.predictions);
    const auto check = dfpe::empirical_accuracy_check(predictions, dataset, spec);
    dfpe::detail::write_file_atomic(dir / "accuracy_check.json", dfpe::to_json(check).dump(2) + "\n");
  });
}

dfpe_status dfpe_collect(const char* endpoints_path, const char* templates_path,
                         const dfpe_dataset* dataset, const char* cache_dir, const char* out_path,
                         char** summary_json_out) {
  return guarded([&] {
    const auto endpoints = dfpe::load_endpoints(need_str(endpoints_path, "endpoints_path"));
    const auto templates = dfpe::load_templates(need_str(templates_path, "templates_path"));
    const auto result = dfpe::collect_predictions(endpoints, templates, need(dataset, "dataset").value,
                                                  need_str(cache_dir, "cache_dir"));
    dfpe::detail::write_file_atomic(need_str(out_path, "out_path"),
                                    dfpe::predictions_jsonl(result.records));
    if (summary_json_out) {
      const nlohmann::json summary{{"records", result.records.size()},
                                   {"cache_hits", result.stats.cache_hits},
                                   {"network_calls", result.stats.network_calls},
                                   {"retries", result.stats.retries},
                                   {"unanswered", result.stats.unanswered},
                                   {"failed", result.stats.failed},
                                   {"warnings", result.warnings}};
      *summary_json_out = dup_string(summary.dump(2) + "\n");
    }
  });
}

}  // extern "C"
