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


#include "dfpe/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dfpe/error.hpp"
#include "jsonl.hpp"

namespace dfpe {

namespace {

std::string question_key(const std::string& subject_id, const std::string& question_id) {
  return subject_id + "/" + question_id;
}

std::string prediction_key(const std::string& model_id, const std::string& subject_id,
                           const std::string& question_id) {
  // Unit separator keeps composite keys unambiguous.
  return model_id + '\x1f' + subject_id + '\x1f' + question_id;
}

Split parse_split(const std::string& text, const detail::LineContext& ctx) {
  if (text == "validation") return Split::kValidation;
  if (text == "test") return Split::kTest;
  throw InputError(ctx.where("split must be 'validation' or 'test', got '" + text + "'"));
}

}  // namespace

const char* to_string(Split split) {
  return split == Split::kValidation ? "validation" : "test";
}

int QuestionRecord::choice_index(const std::string& label) const {
  auto it = std::find(choices.begin(), choices.end(), label);
  return it == choices.end() ? -1 : static_cast<int>(it - choices.begin());
}

Dataset Dataset::from_records(std::vector<QuestionRecord> records) {
  Dataset ds;
  std::set<std::pair<std::string, std::string>> seen;
  for (auto& rec : records) {
    const std::string key = question_key(rec.subject_id, rec.question_id);
    if (rec.question_id.empty() || rec.subject_id.empty())
      throw InputError("question " + key + ": empty question_id or subject_id");
    if (!seen.emplace(rec.subject_id, rec.question_id).second)
      throw InputError("duplicate question " + key);
    if (rec.choices.size() < 2) throw InputError("question " + key + ": fewer than two choices");
    std::set<std::string> unique(rec.choices.begin(), rec.choices.end());
    if (unique.size() != rec.choices.size())
      throw InputError("question " + key + ": duplicate choice labels");
    if (rec.choice_index(rec.correct_choice) < 0)
      throw InputError("question " + key + ": correct_choice '" + rec.correct_choice +
                       "' is not among its choices");
    if (!rec.choice_texts.empty() && rec.choice_texts.size() != rec.choices.size())
      throw InputError("question " + key + ": choice_texts length differs from choices");
    auto& subject = ds.subjects_[rec.subject_id];
    (rec.split == Split::kValidation ? subject.validation : subject.test).push_back(std::move(rec));
  }
  auto by_id = [](const QuestionRecord& a, const QuestionRecord& b) {
    return a.question_id < b.question_id;
  };
  for (auto& [subject_id, questions] : ds.subjects_) {
    std::sort(questions.validation.begin(), questions.validation.end(), by_id);
    std::sort(questions.test.begin(), questions.test.end(), by_id);
    auto& loc = ds.locations_[subject_id];
    for (std::size_t i = 0; i < questions.validation.size(); ++i)
      loc[questions.validation[i].question_id] = {Split::kValidation, i};
    for (std::size_t i = 0; i < questions.test.size(); ++i)
      loc[questions.test[i].question_id] = {Split::kTest, i};
  }
  return ds;
}

std::vector<std::string> Dataset::subject_ids() const {
  std::vector<std::string> ids;
  ids.reserve(subjects_.size());
  for (const auto& [id, _] : subjects_) ids.push_back(id);
  return ids;
}

bool Dataset::has_subject(const std::string& subject_id) const {
  return subjects_.count(subject_id) != 0;
}

const SubjectQuestions& Dataset::subject(const std::string& subject_id) const {
  auto it = subjects_.find(subject_id);
  if (it == subjects_.end()) throw InputError("unknown subject '" + subject_id + "'");
  return it->second;
}

std::optional<Dataset::Location> Dataset::locate(const std::string& subject_id,
                                                 const std::string& question_id) const {
  auto s = locations_.find(subject_id);
  if (s == locations_.end()) return std::nullopt;
  auto q = s->second.find(question_id);
  if (q == s->second.end()) return std::nullopt;
  return q->second;
}

const QuestionRecord* Dataset::find(const std::string& subject_id,
                                    const std::string& question_id) const {
  auto loc = locate(subject_id, question_id);
  if (!loc) return nullptr;
  return &subjects_.at(subject_id).of(loc->split)[loc->index];
}

std::size_t Dataset::count(Split split) const {
  std::size_t n = 0;
  for (const auto& [_, questions] : subjects_) n += questions.of(split).size();
  return n;
}

Dataset parse_dataset(std::istream& in, const std::string& source_name) {
  std::vector<QuestionRecord> records;
  std::map<std::string, std::size_t> first_line;
  detail::for_each_record(in, source_name, [&](const nlohmann::json& j, const detail::LineContext& ctx) {
    QuestionRecord rec;
    rec.question_id = detail::require_string(j, "question_id", ctx);
    rec.subject_id = detail::require_string(j, "subject_id", ctx);
    rec.split = parse_split(detail::require_string(j, "split", ctx), ctx);
    rec.choices = detail::require_string_list(j, "choices", ctx);
    rec.correct_choice = detail::require_string(j, "correct_choice", ctx);
    rec.question_text = detail::optional_string(j, "question", ctx).value_or("");
    if (j.contains("choice_texts")) rec.choice_texts = detail::require_string_list(j, "choice_texts", ctx);

    const std::string key = question_key(rec.subject_id, rec.question_id);
    auto [it, inserted] = first_line.emplace(key, ctx.line);
    if (!inserted)
      throw InputError(ctx.where("duplicate question " + key + " (first seen on line " +
                                 std::to_string(it->second) + ")"));
    if (rec.choice_index(rec.correct_choice) < 0)
      throw InputError(ctx.where("question " + key + ": correct_choice '" + rec.correct_choice +
                                 "' is not among its choices"));
    records.push_back(std::move(rec));
  });
  try {
    return Dataset::from_records(std::move(records));
  } catch (const InputError& e) {
    throw InputError(source_name + ": " + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_dataset(in, path.string());
}

int ModelPool::index_of(const std::string& model_id) const {
  auto it = std::lower_bound(model_ids.begin(), model_ids.end(), model_id);
  if (it == model_ids.end() || *it != model_id) return -1;
  return static_cast<int>(it - model_ids.begin());
}

double CompletenessCell::fraction() const {
  const std::size_t total = validation_total + test_total;
  if (total == 0) return 1.0;
  return static_cast<double>(validation_answered + test_answered) / static_cast<double>(total);
}

double CompletenessCell::fraction(Split split) const {
  const auto [answered, total] = split == Split::kValidation
                                     ? std::pair{validation_answered, validation_total}
                                     : std::pair{test_answered, test_total};
  if (total == 0) return 1.0;
  return static_cast<double>(answered) / static_cast<double>(total);
}

PredictionSet PredictionSet::from_records(const Dataset& dataset,
                                          std::vector<PredictionRecord> records) {
  PredictionSet set;
  std::set<std::string> models;
  for (const auto& rec : records) models.insert(rec.model_id);
  set.pool_.model_ids.assign(models.begin(), models.end());
  const std::size_t n_models = set.pool_.size();

  for (const auto& [subject_id, questions] : dataset.subjects()) {
    auto& sheet = set.answers_[subject_id];
    sheet.validation.assign(n_models, std::vector<int>(questions.validation.size(), kNoAnswer));
    sheet.test.assign(n_models, std::vector<int>(questions.test.size(), kNoAnswer));
  }

  std::set<std::string> seen;
  for (auto& rec : records) {
    const std::string who = "model '" + rec.model_id + "', question " +
                            question_key(rec.subject_id, rec.question_id);
    auto loc = dataset.locate(rec.subject_id, rec.question_id);
    if (!loc) throw InputError("prediction references unknown question: " + who);
    const QuestionRecord& q = dataset.subject(rec.subject_id).of(loc->split)[loc->index];
    const int choice = q.choice_index(rec.predicted_choice);
    if (choice < 0)
      throw InputError("predicted_choice '" + rec.predicted_choice +
                       "' is not among the question's choices: " + who);
    const std::string key = prediction_key(rec.model_id, rec.subject_id, rec.question_id);
    if (!seen.insert(key).second) throw InputError("duplicate prediction: " + who);
    const auto model = static_cast<std::size_t>(set.pool_.index_of(rec.model_id));
    auto& sheet = set.answers_.at(rec.subject_id);
    (loc->split == Split::kValidation ? sheet.validation : sheet.test)[model][loc->index] = choice;
    if (rec.raw_response) set.raw_responses_.emplace(key, std::move(*rec.raw_response));
  }

  for (std::size_t m = 0; m < n_models; ++m) {
    const std::string& model_id = set.pool_.model_ids[m];
    for (const auto& [subject_id, questions] : dataset.subjects()) {
      const auto& sheet = set.answers_.at(subject_id);
      CompletenessCell cell;
      cell.validation_total = questions.validation.size();
      cell.test_total = questions.test.size();
      cell.validation_answered = static_cast<std::size_t>(
          std::count_if(sheet.validation[m].begin(), sheet.validation[m].end(),
                        [](int c) { return c != kNoAnswer; }));
      cell.test_answered = static_cast<std::size_t>(std::count_if(
          sheet.test[m].begin(), sheet.test[m].end(), [](int c) { return c != kNoAnswer; }));
      if (cell.validation_answered + cell.test_answered <
          cell.validation_total + cell.test_total) {
        std::ostringstream msg;
        msg << "model '" << model_id << "' answered " << (cell.validation_answered + cell.test_answered)
            << " of " << (cell.validation_total + cell.test_total) << " questions in subject '"
            << subject_id << "' (missing answers score as incorrect)";
        set.warnings_.push_back(msg.str());
      }
      set.completeness_[model_id][subject_id] = cell;
    }
  }
  return set;
}

const SubjectAnswers& PredictionSet::answers(const std::string& subject_id) const {
  auto it = answers_.find(subject_id);
  if (it == answers_.end()) throw InputError("unknown subject '" + subject_id + "'");
  return it->second;
}

int PredictionSet::answer(std::size_t model, const std::string& subject_id, Split split,
                          std::size_t question) const {
  return answers(subject_id).of(split).at(model).at(question);
}

const CompletenessCell& PredictionSet::completeness(const std::string& model_id,
                                                    const std::string& subject_id) const {
  auto m = completeness_.find(model_id);
  if (m == completeness_.end()) throw InputError("unknown model '" + model_id + "'");
  auto s = m->second.find(subject_id);
  if (s == m->second.end()) throw InputError("unknown subject '" + subject_id + "'");
  return s->second;
}

std::optional<std::string> PredictionSet::raw_response(const std::string& model_id,
                                                       const std::string& subject_id,
                                                       const std::string& question_id) const {
  auto it = raw_responses_.find(prediction_key(model_id, subject_id, question_id));
  if (it == raw_responses_.end()) return std::nullopt;
  return it->second;
}

PredictionSet parse_predictions(std::istream& in, const std::string& source_name,
                                const Dataset& dataset) {
  std::vector<PredictionRecord> records;
  detail::for_each_record(in, source_name, [&](const nlohmann::json& j, const detail::LineContext& ctx) {
    PredictionRecord rec;
    rec.model_id = detail::require_string(j, "model_id", ctx);
    rec.subject_id = detail::require_string(j, "subject_id", ctx);
    rec.question_id = detail::require_string(j, "question_id", ctx);
    rec.predicted_choice = detail::require_string(j, "predicted_choice", ctx);
    rec.raw_response = detail::optional_string(j, "raw_response", ctx);
    if (rec.model_id.empty()) throw InputError(ctx.where("empty model_id"));
    records.push_back(std::move(rec));
  });
  try {
    return PredictionSet::from_records(dataset, std::move(records));
  } catch (const InputError& e) {
    throw InputError(source_name + ": " + e.what());
  }
}

PredictionSet load_predictions(const std::filesystem::path& path, const Dataset& dataset) {
  auto in = detail::open_input(path);
  return parse_predictions(in, path.string(), dataset);
}

double validation_accuracy(const PredictionSet& predictions, const Dataset& dataset,
                           const std::string& model_id, const std::string& subject_id) {
  const auto& questions = dataset.subject(subject_id).validation;
  if (questions.empty())
    throw InputError("subject '" + subject_id + "' has no validation questions");
  const int model = predictions.pool().index_of(model_id);
  if (model < 0) return 0.0;
  const auto& sheet = predictions.answers(subject_id).validation[static_cast<std::size_t>(model)];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < questions.size(); ++i)
    if (sheet[i] != kNoAnswer && sheet[i] == questions[i].correct_index()) ++correct;
  return static_cast<double>(correct) / static_cast<double>(questions.size());
}

const std::string& DisciplineMap::discipline_of(const std::string& subject_id) const {
  auto it = entries.find(subject_id);
  if (it == entries.end()) throw InputError("subject '" + subject_id + "' has no discipline");
  return it->second;
}

DisciplineMap parse_discipline_map(std::istream& in, const std::string& source_name,
                                   const Dataset& dataset) {
  DisciplineMap map;
  detail::for_each_record(in, source_name, [&](const nlohmann::json& j, const detail::LineContext& ctx) {
    auto subject = detail::require_string(j, "subject_id", ctx);
    auto discipline = detail::require_string(j, "discipline_id", ctx);
    auto [it, inserted] = map.entries.emplace(subject, discipline);
    if (!inserted && it->second != discipline)
      throw InputError(ctx.where("subject '" + subject + "' mapped to two disciplines"));
  });
  for (const auto& subject : dataset.subject_ids())
    if (!map.entries.count(subject))
      throw InputError(source_name + ": subject '" + subject + "' has no discipline entry");
  return map;
}

DisciplineMap load_discipline_map(const std::filesystem::path& path, const Dataset& dataset) {
  auto in = detail::open_input(path);
  return parse_discipline_map(in, path.string(), dataset);
}

}  // namespace dfpe
