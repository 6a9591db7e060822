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


// Exercises the shared library through its C header only.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "dfpe/dfpe.h"

namespace {

const std::string kSmall = std::string(DFPE_FIXTURE_DIR) + "/small/";

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<dfpe_dataset, Deleter<dfpe_dataset, dfpe_dataset_free>>;
using Predictions = std::unique_ptr<dfpe_predictions, Deleter<dfpe_predictions, dfpe_predictions_free>>;
using Disciplines = std::unique_ptr<dfpe_disciplines, Deleter<dfpe_disciplines, dfpe_disciplines_free>>;
using Config = std::unique_ptr<dfpe_config, Deleter<dfpe_config, dfpe_config_free>>;
using Fingerprints = std::unique_ptr<dfpe_fingerprints, Deleter<dfpe_fingerprints, dfpe_fingerprints_free>>;
using Ensembles = std::unique_ptr<dfpe_ensembles, Deleter<dfpe_ensembles, dfpe_ensembles_free>>;
using Report = std::unique_ptr<dfpe_report, Deleter<dfpe_report, dfpe_report_free>>;

std::string take(char* s) {
  std::string out(s ? s : "");
  dfpe_string_free(s);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dfpe_capi_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct Pipeline {
  Dataset dataset;
  Predictions predictions;
  Disciplines disciplines;
  Config config;

  Pipeline() {
    dfpe_dataset* d = nullptr;
    EXPECT_EQ(dfpe_dataset_load((kSmall + "manifest.jsonl").c_str(), &d), DFPE_OK);
    dataset.reset(d);
    dfpe_predictions* p = nullptr;
    EXPECT_EQ(dfpe_predictions_load((kSmall + "predictions.jsonl").c_str(), d, &p), DFPE_OK);
    predictions.reset(p);
    dfpe_disciplines* m = nullptr;
    EXPECT_EQ(dfpe_disciplines_load((kSmall + "disciplines.jsonl").c_str(), d, &m), DFPE_OK);
    disciplines.reset(m);
    dfpe_config* c = nullptr;
    EXPECT_EQ(dfpe_config_new(&c), DFPE_OK);
    config.reset(c);
  }

  Ensembles ensembles() const {
    dfpe_fingerprints* f = nullptr;
    EXPECT_EQ(dfpe_fingerprints_compute(dataset.get(), predictions.get(), nullptr, config.get(), &f), DFPE_OK);
    Fingerprints fp(f);
    dfpe_ensembles* e = nullptr;
    EXPECT_EQ(dfpe_ensembles_build(dataset.get(), predictions.get(), f, config.get(), &e), DFPE_OK);
    return Ensembles(e);
  }

  Report evaluate(const dfpe_ensembles* e) const {
    dfpe_report* r = nullptr;
    EXPECT_EQ(dfpe_evaluate(dataset.get(), predictions.get(), disciplines.get(), e, DFPE_AGG_POOLED, &r), DFPE_OK);
    return Report(r);
  }
};

nlohmann::json expected() { return nlohmann::json::parse(slurp(kSmall + "expected.json")); }

TEST(CApi, VersionAndCounts) {
  EXPECT_STREQ(dfpe_version(), "0.1.0");
  const Pipeline p;
  EXPECT_EQ(dfpe_dataset_subject_count(p.dataset.get()), 3u);
  EXPECT_EQ(dfpe_dataset_question_count(p.dataset.get(), 1), 24u);
  EXPECT_EQ(dfpe_dataset_question_count(p.dataset.get(), 0), 36u);
  EXPECT_EQ(dfpe_predictions_model_count(p.predictions.get()), 5u);
  EXPECT_EQ(dfpe_predictions_warning(p.predictions.get(), 1000), nullptr);
  char* json = nullptr;
  ASSERT_EQ(dfpe_ingest_summary(p.dataset.get(), p.predictions.get(), &json), DFPE_OK);
  EXPECT_NO_THROW(nlohmann::json::parse(take(json)));
}

TEST(CApi, OptimalPresetMatchesReference) {
  const Pipeline p;
  ASSERT_EQ(dfpe_config_apply_preset(p.config.get(), "optimal"), DFPE_OK);
  const auto ens = p.ensembles();
  const auto report = p.evaluate(ens.get());
  const auto want = expected();
  double overall = 0, mean = 0;
  ASSERT_EQ(dfpe_report_accuracy(report.get(), "DFPE", &overall, &mean), DFPE_OK);
  EXPECT_DOUBLE_EQ(overall, want.at("configs").at("optimal").at("report").at("accuracy").get<double>());
  for (const auto* method : {"BSM", "BSMoV", "MVoting"}) {
    ASSERT_EQ(dfpe_report_accuracy(report.get(), method, &overall, &mean), DFPE_OK);
    EXPECT_DOUBLE_EQ(overall, want.at("baselines").at(method).at("accuracy").get<double>()) << method;
  }
  for (const auto& [subject, e] : want.at("configs").at("optimal").at("ensembles").items())
    EXPECT_EQ(dfpe_ensembles_member_count(ens.get(), subject.c_str()), e.at("members").size());
  EXPECT_EQ(dfpe_ensembles_member_count(ens.get(), "no_such_subject"), 0u);
}

TEST(CApi, ConfigSetAndJson) {
  const Pipeline p;
  ASSERT_EQ(dfpe_config_set(p.config.get(), "gamma", "7.5"), DFPE_OK);
  ASSERT_EQ(dfpe_config_set(p.config.get(), "filter_order", "cluster_then_filter"), DFPE_OK);
  char* json = nullptr;
  ASSERT_EQ(dfpe_config_to_json(p.config.get(), &json), DFPE_OK);
  const auto j = nlohmann::json::parse(take(json));
  EXPECT_EQ(j.at("gamma"), 7.5);
  EXPECT_EQ(j.at("filter_order"), "cluster_then_filter");
  EXPECT_EQ(dfpe_config_set(p.config.get(), "gamma", "lots"), DFPE_E_INPUT);
  EXPECT_EQ(dfpe_config_set(p.config.get(), "quantile_q", "1.5"), DFPE_E_INPUT);
  EXPECT_EQ(dfpe_config_set(p.config.get(), "colour", "1"), DFPE_E_INPUT);
  EXPECT_EQ(dfpe_config_apply_preset(p.config.get(), "turbo"), DFPE_E_INPUT);
  EXPECT_NE(std::string(dfpe_last_error()).find("turbo"), std::string::npos);
}

TEST(CApi, ErrorCodesAndLastError) {
  dfpe_dataset* d = nullptr;
  EXPECT_EQ(dfpe_dataset_load(nullptr, &d), DFPE_E_INVALID_ARGUMENT);
  EXPECT_EQ(dfpe_dataset_load("/no/such/manifest.jsonl", &d), DFPE_E_INPUT);
  EXPECT_EQ(d, nullptr);
  EXPECT_NE(std::string(dfpe_last_error()).find("/no/such/manifest.jsonl"), std::string::npos);

  const Pipeline p;
  dfpe_predictions* preds = nullptr;
  const auto dir = scratch("errors");
  std::ofstream(dir / "bad.jsonl") << R"({"model_id":"m","subject_id":"subject_a","question_id":"nope","predicted_choice":"A"})" << "\n";
  EXPECT_EQ(dfpe_predictions_load((dir / "bad.jsonl").c_str(), p.dataset.get(), &preds), DFPE_E_INPUT);
  EXPECT_NE(std::string(dfpe_last_error()).find("nope"), std::string::npos);

  double a = 0, b = 0;
  EXPECT_EQ(dfpe_report_accuracy(nullptr, "DFPE", &a, &b), DFPE_E_INVALID_ARGUMENT);
  const auto report = p.evaluate(p.ensembles().get());
  EXPECT_EQ(dfpe_report_accuracy(report.get(), "Oracle", &a, &b), DFPE_E_INPUT);
  dfpe_report* r = nullptr;
  EXPECT_EQ(dfpe_evaluate(p.dataset.get(), p.predictions.get(), p.disciplines.get(), nullptr,
                          static_cast<dfpe_aggregation>(9), &r),
            DFPE_E_INVALID_ARGUMENT);

  // Free functions tolerate NULL.
  dfpe_dataset_free(nullptr);
  dfpe_report_free(nullptr);
  dfpe_string_free(nullptr);
}

TEST(CApi, LastErrorIsPerThread) {
  dfpe_dataset* d = nullptr;
  EXPECT_EQ(dfpe_dataset_load("/main/thread/path", &d), DFPE_E_INPUT);
  std::string other;
  std::thread([&] {
    dfpe_dataset* x = nullptr;
    dfpe_dataset_load("/worker/thread/path", &x);
    other = dfpe_last_error();
  }).join();
  EXPECT_NE(other.find("/worker/thread/path"), std::string::npos);
  EXPECT_NE(std::string(dfpe_last_error()).find("/main/thread/path"), std::string::npos);
}

TEST(CApi, FilesRoundTrip) {
  const Pipeline p;
  const auto dir = scratch("files");
  const auto ens = p.ensembles();
  ASSERT_EQ(dfpe_ensembles_write(ens.get(), (dir / "ensembles.json").c_str()), DFPE_OK);
  dfpe_ensembles* loaded = nullptr;
  ASSERT_EQ(dfpe_ensembles_load((dir / "ensembles.json").c_str(), &loaded), DFPE_OK);
  Ensembles back(loaded);
  ASSERT_EQ(dfpe_ensembles_write(back.get(), (dir / "again.json").c_str()), DFPE_OK);
  EXPECT_EQ(slurp(dir / "ensembles.json"), slurp(dir / "again.json"));

  const auto report = p.evaluate(back.get());
  ASSERT_EQ(dfpe_report_write_json(report.get(), (dir / "report.json").c_str()), DFPE_OK);
  ASSERT_EQ(dfpe_report_write_text(report.get(), (dir / "report.txt").c_str()), DFPE_OK);
  ASSERT_EQ(dfpe_report_write_cooccurrence(report.get(), (dir / "co.tsv").c_str()), DFPE_OK);
  dfpe_report* r = nullptr;
  ASSERT_EQ(dfpe_report_load((dir / "report.json").c_str(), &r), DFPE_OK);
  Report reloaded(r);
  char* text = nullptr;
  ASSERT_EQ(dfpe_report_text(reloaded.get(), &text), DFPE_OK);
  EXPECT_EQ(take(text), slurp(dir / "report.txt"));

  ASSERT_EQ(dfpe_predict_write(back.get(), p.dataset.get(), p.predictions.get(), (dir / "pred.jsonl").c_str()), DFPE_OK);
  std::istringstream lines(slurp(dir / "pred.jsonl"));
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) EXPECT_TRUE(nlohmann::json::parse(line).contains("question_id"));
  EXPECT_EQ(n, 36);

  dfpe_fingerprints* f = nullptr;
  ASSERT_EQ(dfpe_fingerprints_compute(p.dataset.get(), p.predictions.get(), nullptr, p.config.get(), &f), DFPE_OK);
  Fingerprints fp(f);
  ASSERT_EQ(dfpe_fingerprints_write(f, (dir / "fp.jsonl").c_str()), DFPE_OK);
  ASSERT_EQ(dfpe_clusters_write(f, p.config.get(), (dir / "clusters.json").c_str()), DFPE_OK);
  EXPECT_NO_THROW(nlohmann::json::parse(slurp(dir / "clusters.json")));
}

TEST(CApi, EmbeddingStrategyNeedsEmbeddings) {
  const Pipeline p;
  ASSERT_EQ(dfpe_config_set(p.config.get(), "fingerprint_strategy", "external_embedding"), DFPE_OK);
  dfpe_fingerprints* f = nullptr;
  EXPECT_EQ(dfpe_fingerprints_compute(p.dataset.get(), p.predictions.get(), nullptr, p.config.get(), &f),
            DFPE_E_INPUT);
  EXPECT_EQ(f, nullptr);
}

TEST(CApi, SimulateThenSweep) {
  const auto dir = scratch("simulate");
  std::ofstream(dir / "spec.json") << R"({"n_models": 5, "n_subjects": 3,
    "questions_per_subject": {"validation": 12, "test": 20}, "accuracy_range": [0.4, 0.8],
    "correlation_groups": [{"models": [0, 1], "rho": 0.9}], "seed": 3, "n_disciplines": 2})";
  ASSERT_EQ(dfpe_simulate((dir / "spec.json").c_str(), -1, (dir / "pool").c_str()), DFPE_OK);
  for (const auto* f : {"manifest.jsonl", "predictions.jsonl", "disciplines.jsonl", "accuracy_check.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / "pool" / f)) << f;
  ASSERT_EQ(dfpe_simulate((dir / "spec.json").c_str(), 3, (dir / "same").c_str()), DFPE_OK);
  EXPECT_EQ(slurp(dir / "pool" / "predictions.jsonl"), slurp(dir / "same" / "predictions.jsonl"));
  ASSERT_EQ(dfpe_simulate((dir / "spec.json").c_str(), 4, (dir / "other").c_str()), DFPE_OK);
  EXPECT_NE(slurp(dir / "pool" / "predictions.jsonl"), slurp(dir / "other" / "predictions.jsonl"));

  dfpe_dataset* d = nullptr;
  ASSERT_EQ(dfpe_dataset_load((dir / "pool" / "manifest.jsonl").c_str(), &d), DFPE_OK);
  Dataset ds(d);
  dfpe_predictions* pr = nullptr;
  ASSERT_EQ(dfpe_predictions_load((dir / "pool" / "predictions.jsonl").c_str(), d, &pr), DFPE_OK);
  Predictions preds(pr);
  dfpe_disciplines* m = nullptr;
  ASSERT_EQ(dfpe_disciplines_load((dir / "pool" / "disciplines.jsonl").c_str(), d, &m), DFPE_OK);
  Disciplines disc(m);
  dfpe_config* c = nullptr;
  ASSERT_EQ(dfpe_config_new(&c), DFPE_OK);
  Config cfg(c);
  const double values[] = {1.0, 5.0};
  ASSERT_EQ(dfpe_sweep_run("gamma", values, 2, c, d, pr, nullptr, m, DFPE_AGG_POOLED, (dir / "sweep").c_str()),
            DFPE_OK);
  const auto csv = slurp(dir / "sweep" / "sweep_gamma.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  ASSERT_EQ(dfpe_sweep_run("eps", nullptr, 0, c, d, pr, nullptr, m, DFPE_AGG_SUBJECT_MEAN, (dir / "sweep").c_str()),
            DFPE_OK);
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep" / "sweep_eps.svg"));
  EXPECT_EQ(dfpe_sweep_run("beta", nullptr, 0, c, d, pr, nullptr, m, DFPE_AGG_POOLED, (dir / "sweep").c_str()),
            DFPE_E_INPUT);
}

}  // namespace
