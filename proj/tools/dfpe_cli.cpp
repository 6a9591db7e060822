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


// Command-line front end. Talks to the library only through the C API.
//
// Exit status: 0 on success, 2 on invalid input or usage, 1 on runtime
// failure. Diagnostics go to stderr; results go to --out or stdout.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfpe/dfpe.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

// Raised when a C API call fails; carries the exit status.
struct Failure {
  int exit_code;
  std::string message;
};

void check(dfpe_status status, const std::string& what) {
  if (status == DFPE_OK) return;
  const int code = status == DFPE_E_INPUT ? kExitInput : kExitRuntime;
  throw Failure{code, what + ": " + dfpe_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using Dataset = std::unique_ptr<dfpe_dataset, Deleter<dfpe_dataset, dfpe_dataset_free>>;
using Predictions = std::unique_ptr<dfpe_predictions, Deleter<dfpe_predictions, dfpe_predictions_free>>;
using Disciplines = std::unique_ptr<dfpe_disciplines, Deleter<dfpe_disciplines, dfpe_disciplines_free>>;
using Embeddings = std::unique_ptr<dfpe_embeddings, Deleter<dfpe_embeddings, dfpe_embeddings_free>>;
using Config = std::unique_ptr<dfpe_config, Deleter<dfpe_config, dfpe_config_free>>;
using Fingerprints =
    std::unique_ptr<dfpe_fingerprints, Deleter<dfpe_fingerprints, dfpe_fingerprints_free>>;
using Ensembles = std::unique_ptr<dfpe_ensembles, Deleter<dfpe_ensembles, dfpe_ensembles_free>>;
using Report = std::unique_ptr<dfpe_report, Deleter<dfpe_report, dfpe_report_free>>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  dfpe_string_free(s);
  return out;
}

struct Options {
  std::string config;
  std::string dataset;
  std::string predictions;
  std::string embeddings;
  std::string discipline_map;
  std::string out;
  std::string preset;
  std::optional<long long> seed;

  std::optional<std::string> quantile, gamma, eps, min_pts, fingerprint_strategy, filter_order;
  std::string aggregation = "pooled";
  std::string ensembles;

  std::string axis;
  std::vector<double> values;
  std::string spec;
  std::string endpoints;
  std::string templates;
  std::string cache;
  std::string report;
};

Dataset load_dataset(const Options& o) {
  dfpe_dataset* p = nullptr;
  check(dfpe_dataset_load(o.dataset.c_str(), &p), "loading dataset");
  return Dataset(p);
}

Predictions load_predictions(const Options& o, const Dataset& ds) {
  dfpe_predictions* p = nullptr;
  check(dfpe_predictions_load(o.predictions.c_str(), ds.get(), &p), "loading predictions");
  Predictions out(p);
  for (size_t i = 0; i < dfpe_predictions_warning_count(p); ++i)
    std::cerr << "warning: " << dfpe_predictions_warning(p, i) << '\n';
  return out;
}

Disciplines load_disciplines(const Options& o, const Dataset& ds) {
  dfpe_disciplines* p = nullptr;
  check(dfpe_disciplines_load(o.discipline_map.c_str(), ds.get(), &p), "loading discipline map");
  return Disciplines(p);
}

Embeddings load_embeddings(const Options& o, const Dataset& ds) {
  if (o.embeddings.empty()) return Embeddings(nullptr);
  dfpe_embeddings* p = nullptr;
  check(dfpe_embeddings_load(o.embeddings.c_str(), ds.get(), &p), "loading embeddings");
  return Embeddings(p);
}

// Defaults, then the config file, then --preset, then individual flags.
Config resolve_config(const Options& o) {
  dfpe_config* raw = nullptr;
  check(dfpe_config_new(&raw), "creating config");
  Config c(raw);
  if (!o.config.empty()) check(dfpe_config_load_file(c.get(), o.config.c_str()), "loading config");
  if (!o.preset.empty()) check(dfpe_config_apply_preset(c.get(), o.preset.c_str()), "applying preset");
  auto set = [&](const char* key, const std::optional<std::string>& v) {
    if (v) check(dfpe_config_set(c.get(), key, v->c_str()), std::string("--") + key);
  };
  set("quantile_q", o.quantile);
  set("gamma", o.gamma);
  set("dbscan_eps", o.eps);
  set("dbscan_min_pts", o.min_pts);
  set("fingerprint_strategy", o.fingerprint_strategy);
  set("filter_order", o.filter_order);
  if (o.seed) set("seed", std::to_string(*o.seed));
  return c;
}

dfpe_aggregation parse_aggregation(const std::string& text) {
  if (text == "pooled") return DFPE_AGG_POOLED;
  if (text == "subject_mean") return DFPE_AGG_SUBJECT_MEAN;
  throw Failure{kExitInput, "--discipline-aggregation must be pooled or subject_mean"};
}

std::string out_file(const Options& o, const char* name) {
  fs::create_directories(o.out);
  return (fs::path(o.out) / name).string();
}

Fingerprints compute_fingerprints(const Dataset& ds, const Predictions& preds,
                                  const Embeddings& emb, const Config& cfg) {
  dfpe_fingerprints* p = nullptr;
  check(dfpe_fingerprints_compute(ds.get(), preds.get(), emb.get(), cfg.get(), &p),
        "computing fingerprints");
  return Fingerprints(p);
}

Ensembles obtain_ensembles(const Options& o, const Dataset& ds, const Predictions& preds,
                           const Config& cfg, bool* built) {
  dfpe_ensembles* p = nullptr;
  if (!o.ensembles.empty()) {
    check(dfpe_ensembles_load(o.ensembles.c_str(), &p), "loading ensembles");
    *built = false;
    return Ensembles(p);
  }
  const Embeddings emb = load_embeddings(o, ds);
  const Fingerprints fps = compute_fingerprints(ds, preds, emb, cfg);
  check(dfpe_ensembles_build(ds.get(), preds.get(), fps.get(), cfg.get(), &p), "building ensembles");
  *built = true;
  return Ensembles(p);
}

int cmd_ingest_check(const Options& o) {
  const Dataset ds = load_dataset(o);
  Predictions preds(nullptr);
  if (!o.predictions.empty()) preds = load_predictions(o, ds);
  if (!o.discipline_map.empty()) load_disciplines(o, ds);
  if (!o.embeddings.empty()) load_embeddings(o, ds);
  char* json = nullptr;
  check(dfpe_ingest_summary(ds.get(), preds.get(), &json), "summarizing");
  const std::string summary = take_string(json);
  if (!o.out.empty()) {
    const std::string path = out_file(o, "ingest_summary.json");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Failure{kExitRuntime, "cannot write " + path};
    std::fwrite(summary.data(), 1, summary.size(), f);
    std::fclose(f);
  }
  std::cout << summary;
  return kExitOk;
}

int cmd_fingerprint(const Options& o) {
  const Config cfg = resolve_config(o);
  const Dataset ds = load_dataset(o);
  if (!o.discipline_map.empty()) load_disciplines(o, ds);
  const Predictions preds = load_predictions(o, ds);
  const Embeddings emb = load_embeddings(o, ds);
  const Fingerprints fps = compute_fingerprints(ds, preds, emb, cfg);
  check(dfpe_fingerprints_write(fps.get(), out_file(o, "fingerprints.jsonl").c_str()),
        "writing fingerprints");
  return kExitOk;
}

int cmd_cluster(const Options& o) {
  const Config cfg = resolve_config(o);
  const Dataset ds = load_dataset(o);
  if (!o.discipline_map.empty()) load_disciplines(o, ds);
  const Predictions preds = load_predictions(o, ds);
  const Embeddings emb = load_embeddings(o, ds);
  const Fingerprints fps = compute_fingerprints(ds, preds, emb, cfg);
  check(dfpe_clusters_write(fps.get(), cfg.get(), out_file(o, "clusters.json").c_str()),
        "writing clusters");
  return kExitOk;
}

int cmd_build_ensembles(const Options& o) {
  const Config cfg = resolve_config(o);
  const Dataset ds = load_dataset(o);
  if (!o.discipline_map.empty()) load_disciplines(o, ds);
  const Predictions preds = load_predictions(o, ds);
  bool built = false;
  const Ensembles ens = obtain_ensembles(o, ds, preds, cfg, &built);
  check(dfpe_ensembles_write(ens.get(), out_file(o, "ensembles.json").c_str()), "writing ensembles");
  return kExitOk;
}

int cmd_predict(const Options& o) {
  const Config cfg = resolve_config(o);
  const Dataset ds = load_dataset(o);
  if (!o.discipline_map.empty()) load_disciplines(o, ds);
  const Predictions preds = load_predictions(o, ds);
  bool built = false;
  const Ensembles ens = obtain_ensembles(o, ds, preds, cfg, &built);
  check(dfpe_predict_write(ens.get(), ds.get(), preds.get(),
                           out_file(o, "predictions_dfpe.jsonl").c_str()),
        "writing predictions");
  return kExitOk;
}

void write_report(const Options& o, const Report& report) {
  check(dfpe_report_write_json(report.get(), out_file(o, "report.json").c_str()), "writing report");
  check(dfpe_report_write_text(report.get(), out_file(o, "report.txt").c_str()), "writing report");
  check(dfpe_report_write_cooccurrence(report.get(), out_file(o, "cooccurrence.tsv").c_str()),
        "writing co-occurrence matrix");
  char* text = nullptr;
  check(dfpe_report_text(report.get(), &text), "rendering report");
  std::cout << take_string(text);
}

int cmd_evaluate(const Options& o) {
  const auto aggregation = parse_aggregation(o.aggregation);
  const Config cfg = resolve_config(o);
  const Dataset ds = load_dataset(o);
  const Predictions preds = load_predictions(o, ds);
  const Disciplines disc = load_disciplines(o, ds);
  bool built = false;
  const Ensembles ens = obtain_ensembles(o, ds, preds, cfg, &built);
  dfpe_report* raw = nullptr;
  check(dfpe_evaluate(ds.get(), preds.get(), disc.get(), ens.get(), aggregation, &raw), "evaluating");
  const Report report(raw);
  if (built)
    check(dfpe_ensembles_write(ens.get(), out_file(o, "ensembles.json").c_str()), "writing ensembles");
  write_report(o, report);
  return kExitOk;
}

int cmd_report(const Options& o) {
  dfpe_report* raw = nullptr;
  check(dfpe_report_load(o.report.c_str(), &raw), "loading report");
  const Report report(raw);
  check(dfpe_report_write_text(report.get(), out_file(o, "report.txt").c_str()), "writing report");
  check(dfpe_report_write_cooccurrence(report.get(), out_file(o, "cooccurrence.tsv").c_str()),
        "writing co-occurrence matrix");
  char* text = nullptr;
  check(dfpe_report_text(report.get(), &text), "rendering report");
  std::cout << take_string(text);
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const auto aggregation = parse_aggregation(o.aggregation);
  const Config cfg = resolve_config(o);
  const Dataset ds = load_dataset(o);
  const Predictions preds = load_predictions(o, ds);
  const Disciplines disc = load_disciplines(o, ds);
  const Embeddings emb = load_embeddings(o, ds);
  fs::create_directories(o.out);
  check(dfpe_sweep_run(o.axis.c_str(), o.values.empty() ? nullptr : o.values.data(), o.values.size(),
                       cfg.get(), ds.get(), preds.get(), emb.get(), disc.get(), aggregation,
                       o.out.c_str()),
        "running sweep");
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  check(dfpe_simulate(o.spec.c_str(), o.seed.value_or(-1), o.out.c_str()), "simulating");
  return kExitOk;
}

int cmd_collect(const Options& o) {
  const Dataset ds = load_dataset(o);
  char* summary = nullptr;
  check(dfpe_collect(o.endpoints.c_str(), o.templates.c_str(), ds.get(), o.cache.c_str(),
                     out_file(o, "predictions.jsonl").c_str(), &summary),
        "collecting");
  std::cerr << take_string(summary);
  return kExitOk;
}

void add_config_flags(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON run config file")->check(CLI::ExistingFile);
  sub->add_option("--preset", o.preset, "parameter preset (optimal, balanced, or from --config)");
  sub->add_option("--quantile", o.quantile, "quantile threshold q in [0, 1]");
  sub->add_option("--gamma", o.gamma, "accuracy factor (>= 0)");
  sub->add_option("--eps", o.eps, "DBSCAN epsilon (cosine distance, > 0)");
  sub->add_option("--min-pts", o.min_pts, "DBSCAN min_pts (>= 1)");
  sub->add_option("--fingerprint-strategy", o.fingerprint_strategy,
                  "answer_pattern or external_embedding");
  sub->add_option("--filter-order", o.filter_order, "filter_then_cluster or cluster_then_filter");
  sub->add_option("--seed", o.seed, "seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fingerprint-clustered, quantile-filtered, accuracy-weighted LLM ensembles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("dfpe ") + dfpe_version());
  Options o;

  auto input = [&](CLI::App* sub, const char* flag, std::string& target, bool required,
                   const char* help) {
    auto* opt = sub->add_option(flag, target, help)->check(CLI::ExistingFile);
    if (required) opt->required();
  };
  auto out_dir = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--out", o.out, "output directory");
    if (required) opt->required();
  };

  auto* ingest = app.add_subcommand("ingest-check", "validate inputs and report counts/completeness");
  input(ingest, "--dataset", o.dataset, true, "question manifest (JSONL)");
  input(ingest, "--predictions", o.predictions, false, "prediction log (JSONL)");
  input(ingest, "--discipline-map", o.discipline_map, false, "subject to discipline map (JSONL)");
  input(ingest, "--embeddings", o.embeddings, false, "embedding file (JSONL)");
  out_dir(ingest, false);

  auto* fingerprint = app.add_subcommand("fingerprint", "write per (model, subject) fingerprints");
  auto* cluster = app.add_subcommand("cluster", "write per-subject distance matrices and clusters");
  auto* build = app.add_subcommand("build-ensembles", "build per-subject ensembles");
  auto* predict = app.add_subcommand("predict", "weighted-vote predictions on the test split");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate the ensemble against the baselines");
  auto* sweep = app.add_subcommand("sweep", "sensitivity sweep over one parameter");
  for (auto* sub : {fingerprint, cluster, build, predict, evaluate, sweep}) {
    input(sub, "--dataset", o.dataset, true, "question manifest (JSONL)");
    input(sub, "--predictions", o.predictions, true, "prediction log (JSONL)");
    input(sub, "--embeddings", o.embeddings, false, "embedding file for external_embedding");
    add_config_flags(sub, o);
    out_dir(sub, true);
  }
  for (auto* sub : {predict, evaluate})
    input(sub, "--ensembles", o.ensembles, false, "use a previously written ensembles.json");
  for (auto* sub : {fingerprint, cluster, build, predict})
    input(sub, "--discipline-map", o.discipline_map, false, "subject to discipline map (JSONL), validated only");
  for (auto* sub : {evaluate, sweep}) {
    input(sub, "--discipline-map", o.discipline_map, true, "subject to discipline map (JSONL)");
    sub->add_option("--discipline-aggregation", o.aggregation, "pooled (default) or subject_mean");
  }
  sweep->add_option("--axis", o.axis, "quantile, gamma or eps")->required();
  sweep->add_option("--values", o.values, "comma-separated values (default grid when omitted)")
      ->delimiter(',');

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic model pool");
  input(simulate, "--spec", o.spec, true, "pool spec (JSON)");
  simulate->add_option("--seed", o.seed, "override the spec's seed");
  out_dir(simulate, true);

  auto* collect = app.add_subcommand("collect", "collect predictions from chat endpoints");
  input(collect, "--dataset", o.dataset, true, "question manifest (JSONL)");
  input(collect, "--endpoints", o.endpoints, true, "endpoint list (JSON)");
  input(collect, "--templates", o.templates, true, "prompt templates (JSON)");
  collect->add_option("--cache", o.cache, "response cache directory")->required();
  out_dir(collect, true);

  auto* report = app.add_subcommand("report", "render tables from a report.json");
  input(report, "--report", o.report, true, "report.json written by evaluate");
  out_dir(report, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitInput;
  }

  try {
    if (*ingest) return cmd_ingest_check(o);
    if (*fingerprint) return cmd_fingerprint(o);
    if (*cluster) return cmd_cluster(o);
    if (*build) return cmd_build_ensembles(o);
    if (*predict) return cmd_predict(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*sweep) return cmd_sweep(o);
    if (*simulate) return cmd_simulate(o);
    if (*collect) return cmd_collect(o);
    if (*report) return cmd_report(o);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInput;
}
