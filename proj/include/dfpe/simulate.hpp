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


// Synthetic model pools with controllable per-subject accuracy and
// correlated wrong answers.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfpe/ingest.hpp"

namespace dfpe {

struct CorrelationGroup {
  std::vector<int> models;  // model indices
  double rho = 0.0;         // probability of taking the group's shared wrong answer
};

struct SyntheticPoolSpec {
  int n_models = 0;
  int n_subjects = 0;
  int validation_per_subject = 0;
  int test_per_subject = 0;
  int choices_per_question = 4;
  std::vector<std::vector<double>> accuracy;  // [model][subject]
  // Partition of the models. Models not listed form singleton groups.
  std::vector<CorrelationGroup> correlation_groups;
  std::uint64_t seed = 0;
  int n_disciplines = 1;

  void validate() const;
};

// Reads the spec file layout. Accepts either "accuracy_matrix" or
// "accuracy_range": [lo, hi], the latter drawn uniformly per cell from the
// seed.
SyntheticPoolSpec spec_from_json(const nlohmann::json& object);
SyntheticPoolSpec load_pool_spec(const std::filesystem::path& path);
nlohmann::json to_json(const SyntheticPoolSpec& spec);

std::string synthetic_model_id(int index);
std::string synthetic_subject_id(int index);

struct SyntheticPool {
  std::vector<QuestionRecord> questions;
  std::vector<PredictionRecord> predictions;
  std::map<std::string, std::string> disciplines;  // subject -> discipline
};

// Deterministic in the spec. Each subject draws from its own stream seeded by
// (seed, subject index). Per question: a uniform correct answer; per group a
// shared wrong answer; each model answers correctly with its accuracy,
// otherwise takes the shared wrong answer with probability rho, otherwise a
// uniform wrong answer.
SyntheticPool generate(const SyntheticPoolSpec& spec);

std::string manifest_jsonl(const std::vector<QuestionRecord>& questions);
std::string predictions_jsonl(const std::vector<PredictionRecord>& predictions);
std::string disciplines_jsonl(const std::map<std::string, std::string>& disciplines);

// Writes manifest.jsonl, predictions.jsonl and disciplines.jsonl into `dir`.
void write_pool(const SyntheticPool& pool, const std::filesystem::path& dir);

struct AccuracyDeviation {
  std::string model_id;
  std::string subject_id;
  double expected = 0.0;
  double observed = 0.0;
  std::size_t questions = 0;
  double bound = 0.0;  // sigmas * binomial standard error
  bool flagged = false;
};

// Compares each (model, subject) empirical accuracy over both splits with
// the spec and flags deviations beyond `sigmas` binomial standard errors.
std::vector<AccuracyDeviation> empirical_accuracy_check(const PredictionSet& predictions,
                                                        const Dataset& dataset,
                                                        const SyntheticPoolSpec& spec,
                                                        double sigmas = 4.0);
nlohmann::json to_json(const std::vector<AccuracyDeviation>& deviations);

}  // namespace dfpe
