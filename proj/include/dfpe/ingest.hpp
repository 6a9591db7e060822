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

// Domain data model and loaders for question manifests, prediction logs and
// discipline maps. All input files are line-delimited JSON, one record per
// line. Every index built here is sorted by key, so permuting the lines of an
// input file yields an identical in-memory index.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dfpe {

enum class Split { kValidation, kTest };

const char* to_string(Split split);

struct QuestionRecord {
  std::string question_id;
  std::string subject_id;
  Split split = Split::kTest;
  std::vector<std::string> choices;
  std::string correct_choice;

  // Optional free text, only needed when collecting predictions from
  // live endpoints.
  std::string question_text;
  std::vector<std::string> choice_texts;

  // Position of `label` in `choices`, or -1.
  int choice_index(const std::string& label) const;
  int correct_index() const { return choice_index(correct_choice); }
};

struct SubjectQuestions {
  // Each split is sorted by question_id.
  std::vector<QuestionRecord> validation;
  std::vector<QuestionRecord> test;

  const std::vector<QuestionRecord>& of(Split split) const {
    return split == Split::kValidation ? validation : test;
  }
};

class Dataset {
 public:
  struct Location {
    Split split;
    std::size_t index;
  };

  Dataset() = default;

  // Validates invariants: correct_choice in choices, no duplicate choices,
  // at least two choices, (subject, question) ids unique.
  static Dataset from_records(std::vector<QuestionRecord> records);

  const std::map<std::string, SubjectQuestions>& subjects() const { return subjects_; }
  std::vector<std::string> subject_ids() const;
  bool has_subject(const std::string& subject_id) const;

  // Throws InputError for an unknown subject.
  const SubjectQuestions& subject(const std::string& subject_id) const;

  std::optional<Location> locate(const std::string& subject_id,
                                 const std::string& question_id) const;
  const QuestionRecord* find(const std::string& subject_id,
                             const std::string& question_id) const;

  std::size_t count(Split split) const;

 private:
  std::map<std::string, SubjectQuestions> subjects_;
  std::map<std::string, std::map<std::string, Location>> locations_;
};

Dataset parse_dataset(std::istream& in, const std::string& source_name);
Dataset load_dataset(const std::filesystem::path& path);

struct ModelMetadata {
  std::string params;
  std::string notes;
};

// Canonical model order is lexicographic by model id.
struct ModelPool {
  std::vector<std::string> model_ids;
  std::map<std::string, ModelMetadata> metadata;

  std::size_t size() const { return model_ids.size(); }
  // Returns -1 for an unknown model.
  int index_of(const std::string& model_id) const;
};

struct PredictionRecord {
  std::string model_id;
  std::string subject_id;
  std::string question_id;
  std::string predicted_choice;
  std::optional<std::string> raw_response;
};

inline constexpr int kNoAnswer = -1;

// Dense answer sheets for one subject: answers[model][question] holds the
// predicted choice index (into the question's choice list) or kNoAnswer.
// Model indices follow the pool order, question indices the dataset order.
struct SubjectAnswers {
  std::vector<std::vector<int>> validation;
  std::vector<std::vector<int>> test;

  const std::vector<std::vector<int>>& of(Split split) const {
    return split == Split::kValidation ? validation : test;
  }
};

struct CompletenessCell {
  std::size_t validation_answered = 0;
  std::size_t validation_total = 0;
  std::size_t test_answered = 0;
  std::size_t test_total = 0;

  double fraction() const;
  double fraction(Split split) const;
};

class PredictionSet {
 public:
  PredictionSet() = default;

  // Cross-validates every record against the dataset. Throws InputError on
  // unknown question references, predicted choices outside the question's
  // choice list, and duplicate (model, subject, question) records.
  static PredictionSet from_records(const Dataset& dataset,
                                    std::vector<PredictionRecord> records);

  const ModelPool& pool() const { return pool_; }

  // Every dataset subject has an entry, possibly all kNoAnswer.
  const SubjectAnswers& answers(const std::string& subject_id) const;

  int answer(std::size_t model, const std::string& subject_id, Split split,
             std::size_t question) const;

  // model x subject; subjects in dataset order.
  const CompletenessCell& completeness(const std::string& model_id,
                                       const std::string& subject_id) const;

  std::optional<std::string> raw_response(const std::string& model_id,
                                          const std::string& subject_id,
                                          const std::string& question_id) const;

  // Non-fatal findings such as incomplete coverage.
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  ModelPool pool_;
  std::map<std::string, SubjectAnswers> answers_;
  std::map<std::string, std::map<std::string, CompletenessCell>> completeness_;
  std::map<std::string, std::string> raw_responses_;
  std::vector<std::string> warnings_;
};

PredictionSet parse_predictions(std::istream& in, const std::string& source_name,
                                const Dataset& dataset);
PredictionSet load_predictions(const std::filesystem::path& path, const Dataset& dataset);

// Fraction of the subject's validation questions answered correctly. Missing
// predictions count as incorrect. Throws InputError when the subject has no
// validation questions.
double validation_accuracy(const PredictionSet& predictions, const Dataset& dataset,
                           const std::string& model_id, const std::string& subject_id);

struct DisciplineMap {
  std::map<std::string, std::string> entries;

  const std::string& discipline_of(const std::string& subject_id) const;
};

// Every dataset subject must be mapped; extra entries are allowed so that a
// full benchmark map can be reused for subsets.
DisciplineMap parse_discipline_map(std::istream& in, const std::string& source_name,
                                   const Dataset& dataset);
DisciplineMap load_discipline_map(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace dfpe
