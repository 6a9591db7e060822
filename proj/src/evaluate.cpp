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


#include "dfpe/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "dfpe/error.hpp"

namespace dfpe {

namespace {

constexpr const char* kMethodOrder[] = {"BSM", "BSMoV", "MVoting", "DFPE"};

std::optional<std::string> label_of(const QuestionRecord& q, int choice) {
  if (choice == kNoAnswer) return std::nullopt;
  return q.choices.at(static_cast<std::size_t>(choice));
}

// Pooled or subject-mean accuracy per discipline, and their unweighted mean.
void aggregate_disciplines(MethodReport& report, const DisciplineMap& disciplines,
                           DisciplineAggregation aggregation) {
  std::map<std::string, Score> pooled;
  std::map<std::string, std::vector<double>> subject_accs;
  for (const auto& [subject, score] : report.subjects) {
    const auto& discipline = disciplines.discipline_of(subject);
    pooled[discipline].correct += score.correct;
    pooled[discipline].total += score.total;
    subject_accs[discipline].push_back(score.accuracy());
  }
  report.per_discipline.clear();
  for (const auto& [discipline, score] : pooled) {
    if (aggregation == DisciplineAggregation::kPooled) {
      report.per_discipline[discipline] = score.accuracy();
    } else {
      const auto& accs = subject_accs[discipline];
      double sum = 0.0;
      for (double a : accs) sum += a;
      report.per_discipline[discipline] = sum / static_cast<double>(accs.size());
    }
  }
  double sum = 0.0;
  for (const auto& [_, acc] : report.per_discipline) sum += acc;
  report.discipline_accuracy_mean =
      report.per_discipline.empty() ? 0.0 : sum / static_cast<double>(report.per_discipline.size());
}

std::string fixed3(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << v;
  return out.str();
}

}  // namespace

VoteTally tally(const QuestionRecord& question, std::span<const Ballot> ballots) {
  if (ballots.empty())
    throw InputError("empty vote for question " + question.subject_id + "/" + question.question_id);
  VoteTally t;
  t.subject_id = question.subject_id;
  t.question_id = question.question_id;
  t.scores.assign(question.choices.size(), 0.0);
  double mass = 0;
  for (const auto& b : ballots) {
    if (b.choice < 0 || static_cast<std::size_t>(b.choice) >= t.scores.size())
      throw InputError("ballot choice out of range for question " + question.question_id);
    t.scores[static_cast<std::size_t>(b.choice)] += b.weight;
    mass += std::abs(b.weight);
  }
  // Scores closer than the rounding noise of the sums count as tied, so the
  // earliest-choice rule survives rescaling of the weights.
  const double top = *std::max_element(t.scores.begin(), t.scores.end());
  const double tol = kTallyTieTolerance * mass;
  t.winner = 0;
  while (t.scores[static_cast<std::size_t>(t.winner)] < top - tol) ++t.winner;
  return t;
}

VoteTally weighted_vote(const SubjectEnsemble& ensemble, const QuestionRecord& question,
                        const std::map<std::string, std::string>& votes) {
  std::vector<Ballot> ballots;
  for (const auto& m : ensemble.members) {
    auto it = votes.find(m.model_id);
    if (it == votes.end()) continue;
    const int choice = question.choice_index(it->second);
    if (choice < 0)
      throw InputError("model '" + m.model_id + "' voted '" + it->second +
                       "', not a choice of question " + question.question_id);
    ballots.push_back({m.weight, choice});
  }
  return tally(question, ballots);
}

PredictionMap predict_all(const EnsembleSet& ensembles, const PredictionSet& predictions,
                          const Dataset& dataset) {
  PredictionMap out;
  for (const auto& [subject, questions] : dataset.subjects()) {
    if (questions.test.empty()) continue;
    auto e = ensembles.find(subject);
    if (e == ensembles.end()) throw InputError("no ensemble for subject '" + subject + "'");
    const auto& sheet = predictions.answers(subject).test;
    std::vector<std::pair<std::size_t, double>> members;  // (pool index, weight)
    for (const auto& m : e->second.members) {
      const int idx = predictions.pool().index_of(m.model_id);
      if (idx >= 0) members.emplace_back(static_cast<std::size_t>(idx), m.weight);
    }
    std::vector<Ballot> ballots;
    for (std::size_t i = 0; i < questions.test.size(); ++i) {
      const auto& q = questions.test[i];
      ballots.clear();
      for (const auto& [idx, weight] : members)
        if (sheet[idx][i] != kNoAnswer) ballots.push_back({weight, sheet[idx][i]});
      out[{subject, q.question_id}] =
          ballots.empty() ? std::nullopt : label_of(q, tally(q, ballots).winner);
    }
  }
  return out;
}

PredictionMap single_model_predictions(const PredictionSet& predictions, const Dataset& dataset,
                                       const std::string& model_id) {
  const int model = predictions.pool().index_of(model_id);
  if (model < 0) throw InputError("unknown model '" + model_id + "'");
  PredictionMap out;
  for (const auto& [subject, questions] : dataset.subjects()) {
    const auto& sheet = predictions.answers(subject).test[static_cast<std::size_t>(model)];
    for (std::size_t i = 0; i < questions.test.size(); ++i)
      out[{subject, questions.test[i].question_id}] = label_of(questions.test[i], sheet[i]);
  }
  return out;
}

PredictionMap mvoting_predictions(const PredictionSet& predictions, const Dataset& dataset) {
  PredictionMap out;
  for (const auto& [subject, questions] : dataset.subjects()) {
    const auto& sheet = predictions.answers(subject).test;
    for (std::size_t i = 0; i < questions.test.size(); ++i) {
      const auto& q = questions.test[i];
      std::vector<std::size_t> counts(q.choices.size(), 0);
      bool any = false;
      for (const auto& row : sheet)
        if (row[i] != kNoAnswer) {
          ++counts[static_cast<std::size_t>(row[i])];
          any = true;
        }
      if (!any) {
        out[{subject, q.question_id}] = std::nullopt;
        continue;
      }
      const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
      out[{subject, q.question_id}] = q.choices[static_cast<std::size_t>(best)];
    }
  }
  return out;
}

std::string predictions_to_jsonl(const PredictionMap& predictions) {
  std::ostringstream out;
  for (const auto& [key, choice] : predictions) {
    nlohmann::json j{{"subject_id", key.first}, {"question_id", key.second}};
    j["predicted_choice"] = choice ? nlohmann::json(*choice) : nlohmann::json(nullptr);
    out << j.dump() << '\n';
  }
  return out.str();
}

const char* to_string(DisciplineAggregation aggregation) {
  return aggregation == DisciplineAggregation::kPooled ? "pooled" : "subject_mean";
}

DisciplineAggregation parse_discipline_aggregation(const std::string& text) {
  if (text == "pooled") return DisciplineAggregation::kPooled;
  if (text == "subject_mean") return DisciplineAggregation::kSubjectMean;
  throw InputError("discipline aggregation must be pooled or subject_mean, got '" + text + "'");
}

MethodReport score_predictions(const std::string& method, const PredictionMap& predictions,
                               const Dataset& dataset, const DisciplineMap& disciplines,
                               DisciplineAggregation aggregation) {
  MethodReport report;
  report.method = method;
  for (const auto& [subject, questions] : dataset.subjects()) {
    if (questions.test.empty()) continue;
    Score& score = report.subjects[subject];
    for (const auto& q : questions.test) {
      auto it = predictions.find({subject, q.question_id});
      ++score.total;
      if (it != predictions.end() && it->second && *it->second == q.correct_choice) ++score.correct;
    }
    report.overall.correct += score.correct;
    report.overall.total += score.total;
  }
  aggregate_disciplines(report, disciplines, aggregation);
  return report;
}

MethodReport baseline_bsm(const PredictionSet& predictions, const Dataset& dataset,
                          const DisciplineMap& disciplines, DisciplineAggregation aggregation) {
  std::optional<MethodReport> best;
  for (const auto& model : predictions.pool().model_ids) {
    auto report = score_predictions("BSM", single_model_predictions(predictions, dataset, model),
                                    dataset, disciplines, aggregation);
    report.selected_model = model;
    // Compare counts exactly; pool order makes '>' keep the smallest id on ties.
    if (!best || report.overall.correct * best->overall.total >
                     best->overall.correct * report.overall.total)
      best = std::move(report);
  }
  if (!best) throw InputError("empty model pool");
  return *best;
}

MethodReport baseline_bsmov(const PredictionSet& predictions, const Dataset& dataset,
                            const DisciplineMap& disciplines, DisciplineAggregation aggregation) {
  const auto& pool = predictions.pool().model_ids;
  if (pool.empty()) throw InputError("empty model pool");
  std::size_t best = 0;
  std::size_t best_correct = 0;
  bool first = true;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    std::size_t correct = 0;
    for (const auto& [subject, questions] : dataset.subjects()) {
      const auto& sheet = predictions.answers(subject).validation[m];
      for (std::size_t i = 0; i < questions.validation.size(); ++i)
        if (sheet[i] != kNoAnswer && sheet[i] == questions.validation[i].correct_index()) ++correct;
    }
    if (first || correct > best_correct) {
      best = m;
      best_correct = correct;
      first = false;
    }
  }
  auto report = score_predictions("BSMoV", single_model_predictions(predictions, dataset, pool[best]),
                                  dataset, disciplines, aggregation);
  report.selected_model = pool[best];
  return report;
}

MethodReport baseline_mvoting(const PredictionSet& predictions, const Dataset& dataset,
                              const DisciplineMap& disciplines, DisciplineAggregation aggregation) {
  return score_predictions("MVoting", mvoting_predictions(predictions, dataset), dataset,
                           disciplines, aggregation);
}

Participation participation_stats(const EnsembleSet& ensembles) {
  Participation p;
  std::size_t total = 0;
  bool first = true;
  for (const auto& [subject, ens] : ensembles) {
    const std::size_t n = ens.members.size();
    p.per_subject[subject] = n;
    total += n;
    p.min = first ? n : std::min(p.min, n);
    p.max = first ? n : std::max(p.max, n);
    first = false;
  }
  if (!ensembles.empty()) p.mean = static_cast<double>(total) / static_cast<double>(ensembles.size());
  return p;
}

CooccurrenceMatrix cooccurrence_matrix(const EnsembleSet& ensembles,
                                       const std::vector<std::string>& models) {
  CooccurrenceMatrix m;
  m.models = models;
  std::sort(m.models.begin(), m.models.end());
  m.models.erase(std::unique(m.models.begin(), m.models.end()), m.models.end());
  const std::size_t n = m.models.size();
  m.counts.assign(n, std::vector<long>(n, 0));
  auto index = [&](const std::string& id) -> long {
    auto it = std::lower_bound(m.models.begin(), m.models.end(), id);
    return (it != m.models.end() && *it == id) ? it - m.models.begin() : -1;
  };
  for (const auto& [_, ens] : ensembles) {
    std::vector<long> idx;
    for (const auto& member : ens.members)
      if (long i = index(member.model_id); i >= 0) idx.push_back(i);
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        ++m.counts[static_cast<std::size_t>(idx[a])][static_cast<std::size_t>(idx[b])];
        ++m.counts[static_cast<std::size_t>(idx[b])][static_cast<std::size_t>(idx[a])];
      }
  }
  return m;
}

const MethodReport& EvalReport::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.method == name) return m;
  throw InputError("report has no method '" + name + "'");
}

EvalReport evaluate(const PredictionSet& predictions, const Dataset& dataset,
                    const DisciplineMap& disciplines, const EnsembleSet& ensembles,
                    DisciplineAggregation aggregation) {
  for (const auto& subject : dataset.subject_ids()) disciplines.discipline_of(subject);
  EvalReport report;
  report.aggregation = aggregation;
  report.methods.push_back(baseline_bsm(predictions, dataset, disciplines, aggregation));
  report.methods.push_back(baseline_bsmov(predictions, dataset, disciplines, aggregation));
  report.methods.push_back(baseline_mvoting(predictions, dataset, disciplines, aggregation));
  report.methods.push_back(score_predictions("DFPE", predict_all(ensembles, predictions, dataset),
                                             dataset, disciplines, aggregation));
  report.participation = participation_stats(ensembles);
  report.cooccurrence = cooccurrence_matrix(ensembles, predictions.pool().model_ids);
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : report.methods) {
    nlohmann::json subjects = nlohmann::json::object();
    for (const auto& [subject, s] : m.subjects)
      subjects[subject] = {{"correct", s.correct}, {"total", s.total}, {"accuracy", s.accuracy()}};
    nlohmann::json j{{"method", m.method},
                     {"overall_accuracy", m.overall_accuracy()},
                     {"correct", m.overall.correct},
                     {"total", m.overall.total},
                     {"discipline_accuracy_mean", m.discipline_accuracy_mean},
                     {"per_discipline", m.per_discipline},
                     {"subjects", subjects}};
    j["selected_model"] = m.selected_model ? nlohmann::json(*m.selected_model) : nlohmann::json(nullptr);
    methods.push_back(std::move(j));
  }
  return {
      {"discipline_aggregation", to_string(report.aggregation)},
      {"methods", methods},
      {"participation",
       {{"per_subject", report.participation.per_subject},
        {"mean", report.participation.mean},
        {"min", report.participation.min},
        {"max", report.participation.max}}},
      {"cooccurrence", {{"models", report.cooccurrence.models}, {"counts", report.cooccurrence.counts}}},
  };
}

EvalReport report_from_json(const nlohmann::json& document) {
  EvalReport report;
  try {
    report.aggregation =
        parse_discipline_aggregation(document.at("discipline_aggregation").get<std::string>());
    for (const auto& j : document.at("methods")) {
      MethodReport m;
      m.method = j.at("method").get<std::string>();
      if (!j.at("selected_model").is_null()) m.selected_model = j.at("selected_model").get<std::string>();
      m.overall = {j.at("correct").get<std::size_t>(), j.at("total").get<std::size_t>()};
      m.discipline_accuracy_mean = j.at("discipline_accuracy_mean").get<double>();
      m.per_discipline = j.at("per_discipline").get<std::map<std::string, double>>();
      for (const auto& [subject, s] : j.at("subjects").items())
        m.subjects[subject] = {s.at("correct").get<std::size_t>(), s.at("total").get<std::size_t>()};
      report.methods.push_back(std::move(m));
    }
    const auto& p = document.at("participation");
    report.participation.per_subject = p.at("per_subject").get<std::map<std::string, std::size_t>>();
    report.participation.mean = p.at("mean").get<double>();
    report.participation.min = p.at("min").get<std::size_t>();
    report.participation.max = p.at("max").get<std::size_t>();
    const auto& c = document.at("cooccurrence");
    report.cooccurrence.models = c.at("models").get<std::vector<std::string>>();
    report.cooccurrence.counts = c.at("counts").get<std::vector<std::vector<long>>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string render_text(const EvalReport& report) {
  std::ostringstream out;
  out << "Accuracy and Discipline-Accuracy Comparison\n\n";
  out << std::left << std::setw(16) << "Model" << std::setw(12) << "Accuracy"
      << "Discipline-Accuracy\n";
  for (const char* name : kMethodOrder) {
    const auto& m = report.method(name);
    out << std::left << std::setw(16) << m.method << std::setw(12) << fixed3(m.overall_accuracy())
        << fixed3(m.discipline_accuracy_mean) << '\n';
  }
  for (const char* name : {"BSM", "BSMoV"}) {
    const auto& m = report.method(name);
    if (m.selected_model) out << name << " model: " << *m.selected_model << '\n';
  }

  out << "\nComparison of discipline-level results (" << to_string(report.aggregation) << ")\n\n";
  std::set<std::string> disciplines;
  for (const auto& m : report.methods)
    for (const auto& [d, _] : m.per_discipline) disciplines.insert(d);
  std::size_t width = 12;
  for (const auto& d : disciplines) width = std::max(width, d.size() + 2);
  out << std::left << std::setw(static_cast<int>(width)) << "Discipline";
  for (const char* name : kMethodOrder) out << std::setw(10) << name;
  out << '\n';
  for (const auto& d : disciplines) {
    out << std::left << std::setw(static_cast<int>(width)) << d;
    for (const char* name : kMethodOrder) {
      const auto& pd = report.method(name).per_discipline;
      auto it = pd.find(d);
      out << std::setw(10) << (it == pd.end() ? std::string("-") : fixed3(it->second));
    }
    out << '\n';
  }
  out << std::left << std::setw(static_cast<int>(width)) << "Average";
  for (const char* name : kMethodOrder)
    out << std::setw(10) << fixed3(report.method(name).discipline_accuracy_mean);
  out << '\n';

  const auto& p = report.participation;
  out << "\nModels per subject: mean " << fixed3(p.mean) << ", min " << p.min << ", max " << p.max
      << '\n';
  for (const auto& [subject, n] : p.per_subject) out << "  " << subject << '\t' << n << '\n';
  // Drop the column padding at line ends.
  std::string text = out.str();
  std::string trimmed;
  std::size_t start = 0;
  for (std::size_t nl; (nl = text.find('\n', start)) != std::string::npos; start = nl + 1) {
    std::string line = text.substr(start, nl - start);
    line.erase(line.find_last_not_of(' ') + 1);
    trimmed += line + '\n';
  }
  return trimmed;
}

std::string render_cooccurrence_tsv(const CooccurrenceMatrix& matrix) {
  std::ostringstream out;
  out << "model";
  for (const auto& m : matrix.models) out << '\t' << m;
  out << '\n';
  for (std::size_t i = 0; i < matrix.models.size(); ++i) {
    out << matrix.models[i];
    for (long c : matrix.counts[i]) out << '\t' << c;
    out << '\n';
  }
  return out.str();
}

}  // namespace dfpe
