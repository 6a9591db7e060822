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


#include "dfpe/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "dfpe/error.hpp"
#include "jsonl.hpp"

namespace dfpe {

namespace {

// Explicit mappings from raw engine output so that pools are identical
// across standard library implementations.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int below(std::mt19937_64& rng, int n) {
  return std::min(n - 1, static_cast<int>(unit(rng) * n));
}

std::string label(int index) { return std::string(1, static_cast<char>('A' + index)); }

std::string padded(const char* prefix, int index, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, index);
  return buf;
}

}  // namespace

std::string synthetic_model_id(int index) { return padded("model_", index, 2); }
std::string synthetic_subject_id(int index) { return padded("subject_", index, 2); }

void SyntheticPoolSpec::validate() const {
  if (n_models < 1) throw InputError("n_models must be >= 1");
  if (n_subjects < 1) throw InputError("n_subjects must be >= 1");
  if (validation_per_subject < 0 || test_per_subject < 0)
    throw InputError("question counts must be >= 0");
  if (choices_per_question < 2 || choices_per_question > 26)
    throw InputError("choices_per_question must lie in [2, 26]");
  if (n_disciplines < 1 || n_disciplines > n_subjects)
    throw InputError("n_disciplines must lie in [1, n_subjects]");
  if (accuracy.size() != static_cast<std::size_t>(n_models))
    throw InputError("accuracy matrix needs one row per model");
  for (const auto& row : accuracy) {
    if (row.size() != static_cast<std::size_t>(n_subjects))
      throw InputError("accuracy matrix needs one column per subject");
    for (double a : row)
      if (!(a >= 0.0 && a <= 1.0)) throw InputError("accuracy values must lie in [0, 1]");
  }
  std::set<int> seen;
  for (const auto& g : correlation_groups) {
    if (!(g.rho >= 0.0 && g.rho <= 1.0)) throw InputError("correlation rho must lie in [0, 1]");
    for (int m : g.models) {
      if (m < 0 || m >= n_models) throw InputError("correlation group names an unknown model");
      if (!seen.insert(m).second) throw InputError("correlation groups must be disjoint");
    }
  }
}

SyntheticPoolSpec spec_from_json(const nlohmann::json& j) {
  SyntheticPoolSpec spec;
  try {
    spec.n_models = j.at("n_models").get<int>();
    spec.n_subjects = j.at("n_subjects").get<int>();
    const auto& counts = j.at("questions_per_subject");
    spec.validation_per_subject = counts.at("validation").get<int>();
    spec.test_per_subject = counts.at("test").get<int>();
    spec.choices_per_question = j.value("choices_per_question", 4);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.n_disciplines = j.value("n_disciplines", 1);
    if (j.contains("accuracy_matrix")) {
      spec.accuracy = j.at("accuracy_matrix").get<std::vector<std::vector<double>>>();
    } else if (j.contains("accuracy_range")) {
      const auto range = j.at("accuracy_range").get<std::vector<double>>();
      if (range.size() != 2 || !(range[0] <= range[1]))
        throw InputError("accuracy_range must be [lo, hi] with lo <= hi");
      std::seed_seq seq{spec.seed, std::uint64_t{0xACC}};
      std::mt19937_64 rng(seq);
      spec.accuracy.assign(static_cast<std::size_t>(std::max(spec.n_models, 0)),
                           std::vector<double>(static_cast<std::size_t>(std::max(spec.n_subjects, 0))));
      for (auto& row : spec.accuracy)
        for (double& a : row) a = range[0] + (range[1] - range[0]) * unit(rng);
    } else {
      throw InputError("spec needs accuracy_matrix or accuracy_range");
    }
    if (j.contains("correlation_groups"))
      for (const auto& g : j.at("correlation_groups"))
        spec.correlation_groups.push_back({g.at("models").get<std::vector<int>>(), g.at("rho").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed pool spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SyntheticPoolSpec load_pool_spec(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  try {
    return spec_from_json(j);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const SyntheticPoolSpec& spec) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : spec.correlation_groups) groups.push_back({{"models", g.models}, {"rho", g.rho}});
  return {{"n_models", spec.n_models},
          {"n_subjects", spec.n_subjects},
          {"questions_per_subject",
           {{"validation", spec.validation_per_subject}, {"test", spec.test_per_subject}}},
          {"choices_per_question", spec.choices_per_question},
          {"accuracy_matrix", spec.accuracy},
          {"correlation_groups", groups},
          {"seed", spec.seed},
          {"n_disciplines", spec.n_disciplines}};
}

SyntheticPool generate(const SyntheticPoolSpec& spec) {
  spec.validate();
  const int n_choices = spec.choices_per_question;
  std::vector<std::string> labels;
  for (int c = 0; c < n_choices; ++c) labels.push_back(label(c));

  // group index and rho per model; ungrouped models get their own group.
  std::vector<int> group_of(static_cast<std::size_t>(spec.n_models), -1);
  std::vector<double> rho;
  for (const auto& g : spec.correlation_groups) {
    for (int m : g.models) group_of[static_cast<std::size_t>(m)] = static_cast<int>(rho.size());
    rho.push_back(g.rho);
  }
  for (auto& g : group_of)
    if (g < 0) {
      g = static_cast<int>(rho.size());
      rho.push_back(0.0);
    }

  auto draw_wrong = [&](std::mt19937_64& rng, int correct) {
    const int pick = below(rng, n_choices - 1);
    return pick >= correct ? pick + 1 : pick;
  };

  SyntheticPool pool;
  std::vector<std::vector<PredictionRecord>> per_model(static_cast<std::size_t>(spec.n_models));
  for (int s = 0; s < spec.n_subjects; ++s) {
    const std::string subject = synthetic_subject_id(s);
    pool.disciplines[subject] = padded("discipline_", s % spec.n_disciplines, 2);
    std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(s)};
    std::mt19937_64 rng(seq);
    for (int split = 0; split < 2; ++split) {
      const int count = split == 0 ? spec.validation_per_subject : spec.test_per_subject;
      for (int q = 0; q < count; ++q) {
        QuestionRecord rec;
        rec.question_id = padded(split == 0 ? "val-" : "test-", q, 4);
        rec.subject_id = subject;
        rec.split = split == 0 ? Split::kValidation : Split::kTest;
        rec.choices = labels;
        const int correct = below(rng, n_choices);
        rec.correct_choice = labels[static_cast<std::size_t>(correct)];

        std::vector<int> shared(rho.size());
        for (auto& w : shared) w = draw_wrong(rng, correct);
        for (int m = 0; m < spec.n_models; ++m) {
          const double u = unit(rng);
          const double v = unit(rng);
          const int own = draw_wrong(rng, correct);
          const auto g = static_cast<std::size_t>(group_of[static_cast<std::size_t>(m)]);
          int answer = own;
          if (u < spec.accuracy[static_cast<std::size_t>(m)][static_cast<std::size_t>(s)])
            answer = correct;
          else if (v < rho[g])
            answer = shared[g];
          const std::string& choice = labels[static_cast<std::size_t>(answer)];
          per_model[static_cast<std::size_t>(m)].push_back(
              {synthetic_model_id(m), subject, rec.question_id, choice, choice});
        }
        pool.questions.push_back(std::move(rec));
      }
    }
  }
  for (auto& records : per_model)
    for (auto& r : records) pool.predictions.push_back(std::move(r));
  return pool;
}

std::string manifest_jsonl(const std::vector<QuestionRecord>& questions) {
  std::ostringstream out;
  for (const auto& q : questions) {
    nlohmann::json j{{"question_id", q.question_id},
                     {"subject_id", q.subject_id},
                     {"split", to_string(q.split)},
                     {"choices", q.choices},
                     {"correct_choice", q.correct_choice}};
    if (!q.question_text.empty()) j["question"] = q.question_text;
    if (!q.choice_texts.empty()) j["choice_texts"] = q.choice_texts;
    out << j.dump() << '\n';
  }
  return out.str();
}

std::string predictions_jsonl(const std::vector<PredictionRecord>& predictions) {
  std::ostringstream out;
  for (const auto& p : predictions) {
    nlohmann::json j{{"model_id", p.model_id},
                     {"subject_id", p.subject_id},
                     {"question_id", p.question_id},
                     {"predicted_choice", p.predicted_choice}};
    if (p.raw_response) j["raw_response"] = *p.raw_response;
    out << j.dump() << '\n';
  }
  return out.str();
}

std::string disciplines_jsonl(const std::map<std::string, std::string>& disciplines) {
  std::ostringstream out;
  for (const auto& [subject, discipline] : disciplines)
    out << nlohmann::json{{"subject_id", subject}, {"discipline_id", discipline}}.dump() << '\n';
  return out.str();
}

void write_pool(const SyntheticPool& pool, const std::filesystem::path& dir) {
  detail::write_file_atomic(dir / "manifest.jsonl", manifest_jsonl(pool.questions));
  detail::write_file_atomic(dir / "predictions.jsonl", predictions_jsonl(pool.predictions));
  detail::write_file_atomic(dir / "disciplines.jsonl", disciplines_jsonl(pool.disciplines));
}

std::vector<AccuracyDeviation> empirical_accuracy_check(const PredictionSet& predictions,
                                                        const Dataset& dataset,
                                                        const SyntheticPoolSpec& spec,
                                                        double sigmas) {
  std::vector<AccuracyDeviation> out;
  for (int m = 0; m < spec.n_models; ++m) {
    const std::string model = synthetic_model_id(m);
    const int idx = predictions.pool().index_of(model);
    for (int s = 0; s < spec.n_subjects; ++s) {
      const std::string subject = synthetic_subject_id(s);
      AccuracyDeviation d{model, subject, spec.accuracy[static_cast<std::size_t>(m)][static_cast<std::size_t>(s)]};
      std::size_t correct = 0;
      if (idx >= 0 && dataset.has_subject(subject)) {
        const auto& questions = dataset.subject(subject);
        const auto& sheets = predictions.answers(subject);
        for (Split split : {Split::kValidation, Split::kTest}) {
          const auto& qs = questions.of(split);
          const auto& row = sheets.of(split)[static_cast<std::size_t>(idx)];
          for (std::size_t i = 0; i < qs.size(); ++i) {
            ++d.questions;
            if (row[i] == qs[i].correct_index()) ++correct;
          }
        }
      }
      if (d.questions > 0) {
        d.observed = static_cast<double>(correct) / static_cast<double>(d.questions);
        d.bound = sigmas * std::sqrt(d.expected * (1.0 - d.expected) / static_cast<double>(d.questions));
        d.flagged = std::abs(d.observed - d.expected) > d.bound;
      } else {
        d.flagged = true;
      }
      out.push_back(d);
    }
  }
  return out;
}

nlohmann::json to_json(const std::vector<AccuracyDeviation>& deviations) {
  nlohmann::json cells = nlohmann::json::array();
  std::size_t flagged = 0;
  for (const auto& d : deviations) {
    flagged += d.flagged ? 1 : 0;
    cells.push_back({{"model_id", d.model_id},
                     {"subject_id", d.subject_id},
                     {"expected", d.expected},
                     {"observed", d.observed},
                     {"questions", d.questions},
                     {"bound", d.bound},
                     {"flagged", d.flagged}});
  }
  return {{"flagged", flagged}, {"cells", cells}};
}

}  // namespace dfpe
