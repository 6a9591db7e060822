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


// Weighted voting on test questions, the single-model and majority-vote
// baselines, and evaluation reports.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfpe/ensemble.hpp"
#include "dfpe/ingest.hpp"

namespace dfpe {

struct Ballot {
  double weight = 0.0;
  int choice = 0;  // index into the question's choice list
};

struct VoteTally {
  std::string subject_id;
  std::string question_id;
  std::vector<double> scores;  // per choice, in choice-list order
  int winner = 0;

  const std::string& winner_label(const QuestionRecord& question) const {
    return question.choices.at(static_cast<std::size_t>(winner));
  }
};

// Relative to the total ballot weight.
inline constexpr double kTallyTieTolerance = 1e-12;

// Sums ballot weights per choice in ballot order. The winner has the largest
// score; scores within kTallyTieTolerance of it tie, and ties go to the
// earliest choice. Throws InputError("empty
// vote") when there are no ballots.
VoteTally tally(const QuestionRecord& question, std::span<const Ballot> ballots);

// `votes` maps model_id to the predicted choice label. Models outside the
// ensemble are ignored; members without a vote contribute nothing.
VoteTally weighted_vote(const SubjectEnsemble& ensemble, const QuestionRecord& question,
                        const std::map<std::string, std::string>& votes);

using QuestionKey = std::pair<std::string, std::string>;  // (subject_id, question_id)

// Predicted choice label per test question; std::nullopt when nobody voted
// (scored as incorrect).
using PredictionMap = std::map<QuestionKey, std::optional<std::string>>;

PredictionMap predict_all(const EnsembleSet& ensembles, const PredictionSet& predictions,
                          const Dataset& dataset);
PredictionMap single_model_predictions(const PredictionSet& predictions, const Dataset& dataset,
                                       const std::string& model_id);
// Equal-weight plurality over the full pool.
PredictionMap mvoting_predictions(const PredictionSet& predictions, const Dataset& dataset);

std::string predictions_to_jsonl(const PredictionMap& predictions);

enum class DisciplineAggregation { kPooled, kSubjectMean };

const char* to_string(DisciplineAggregation aggregation);
DisciplineAggregation parse_discipline_aggregation(const std::string& text);

struct Score {
  std::size_t correct = 0;
  std::size_t total = 0;

  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

struct MethodReport {
  std::string method;
  std::optional<std::string> selected_model;  // single-model baselines only
  Score overall;
  std::map<std::string, Score> subjects;
  std::map<std::string, double> per_discipline;
  double discipline_accuracy_mean = 0.0;

  double overall_accuracy() const { return overall.accuracy(); }
};

MethodReport score_predictions(const std::string& method, const PredictionMap& predictions,
                               const Dataset& dataset, const DisciplineMap& disciplines,
                               DisciplineAggregation aggregation);

// Best single model by pooled test accuracy.
MethodReport baseline_bsm(const PredictionSet& predictions, const Dataset& dataset,
                          const DisciplineMap& disciplines,
                          DisciplineAggregation aggregation = DisciplineAggregation::kPooled);
// Best single model by validation accuracy pooled over all subjects.
MethodReport baseline_bsmov(const PredictionSet& predictions, const Dataset& dataset,
                            const DisciplineMap& disciplines,
                            DisciplineAggregation aggregation = DisciplineAggregation::kPooled);
MethodReport baseline_mvoting(const PredictionSet& predictions, const Dataset& dataset,
                              const DisciplineMap& disciplines,
                              DisciplineAggregation aggregation = DisciplineAggregation::kPooled);

struct Participation {
  std::map<std::string, std::size_t> per_subject;
  double mean = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
};

Participation participation_stats(const EnsembleSet& ensembles);

struct CooccurrenceMatrix {
  std::vector<std::string> models;
  std::vector<std::vector<long>> counts;
};

// counts[i][j], i != j, is the number of subjects whose ensemble contains
// both models. Rows cover `models` (typically the pool), selected or not.
CooccurrenceMatrix cooccurrence_matrix(const EnsembleSet& ensembles,
                                       const std::vector<std::string>& models);

struct EvalReport {
  DisciplineAggregation aggregation = DisciplineAggregation::kPooled;
  std::vector<MethodReport> methods;  // BSM, BSMoV, MVoting, DFPE
  Participation participation;
  CooccurrenceMatrix cooccurrence;

  const MethodReport& method(const std::string& name) const;
};

EvalReport evaluate(const PredictionSet& predictions, const Dataset& dataset,
                    const DisciplineMap& disciplines, const EnsembleSet& ensembles,
                    DisciplineAggregation aggregation = DisciplineAggregation::kPooled);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& document);

// Method table (Model | Accuracy | Discipline-Accuracy), per-discipline table
// (Discipline | BSM | BSMoV | MVoting | DFPE, closed by an Average row), and
// participation summary.
std::string render_text(const EvalReport& report);
std::string render_cooccurrence_tsv(const CooccurrenceMatrix& matrix);

}  // namespace dfpe
