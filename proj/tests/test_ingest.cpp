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


#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "dfpe/ingest.hpp"
#include "test_common.hpp"

namespace dfpe {
namespace {

using testing::expect_input_error;
using testing::prediction;
using testing::question;

std::string manifest_text(const std::vector<QuestionRecord>& qs) {
  std::ostringstream out;
  for (const auto& q : qs)
    out << nlohmann::json{{"question_id", q.question_id},
                          {"subject_id", q.subject_id},
                          {"split", to_string(q.split)},
                          {"choices", q.choices},
                          {"correct_choice", q.correct_choice}}
               .dump()
        << '\n';
  return out.str();
}

std::vector<QuestionRecord> two_subjects() {
  std::vector<QuestionRecord> qs;
  for (std::string s : {"algebra", "law"}) {
    for (int i = 0; i < 3; ++i) qs.push_back(question(s, "v" + std::to_string(i), Split::kValidation, "A"));
    for (int i = 0; i < 10; ++i) qs.push_back(question(s, "t" + std::to_string(i), Split::kTest, "B"));
  }
  return qs;
}

TEST(Dataset, CountsPerSubjectAndSplit) {
  std::istringstream in(manifest_text(two_subjects()));
  const Dataset ds = parse_dataset(in, "manifest");
  EXPECT_EQ(ds.subject_ids(), (std::vector<std::string>{"algebra", "law"}));
  EXPECT_EQ(ds.count(Split::kValidation), 6u);
  EXPECT_EQ(ds.count(Split::kTest), 20u);
  EXPECT_EQ(ds.subject("law").validation.size(), 3u);
  EXPECT_EQ(ds.subject("law").test.size(), 10u);
}

TEST(Dataset, CorrectChoiceOutsideChoicesNamesRecord) {
  auto qs = two_subjects();
  qs[4].correct_choice = "E";
  std::istringstream in(manifest_text(qs));
  expect_input_error([&] { parse_dataset(in, "manifest"); },
                     {"manifest:5", qs[4].question_id, "'E'"});
}

TEST(Dataset, MalformedLineReportsLineNumber) {
  std::istringstream in(manifest_text(two_subjects()).substr(0, 300) + "\n{not json\n");
  expect_input_error([&] { parse_dataset(in, "m.jsonl"); }, {"m.jsonl:3"});
}

TEST(Dataset, RejectsDuplicatesAndBadChoiceLists) {
  auto qs = two_subjects();
  qs.push_back(qs[0]);
  expect_input_error([&] { Dataset::from_records(qs); }, {"duplicate question"});

  expect_input_error(
      [] { Dataset::from_records({question("s", "q", Split::kTest, "A", {"A", "A", "B"})}); },
      {"duplicate choice"});
  expect_input_error([] { Dataset::from_records({question("s", "q", Split::kTest, "A", {"A"})}); },
                     {"fewer than two"});
}

TEST(Dataset, SameQuestionIdInDifferentSubjectsIsFine) {
  const Dataset ds = Dataset::from_records(
      {question("a", "q1", Split::kTest, "A"), question("b", "q1", Split::kTest, "B")});
  EXPECT_EQ(ds.find("b", "q1")->correct_choice, "B");
  EXPECT_EQ(ds.find("c", "q1"), nullptr);
}

TEST(Dataset, SplitsAreSortedByQuestionId) {
  const Dataset ds = Dataset::from_records({question("s", "q2", Split::kValidation, "A"),
                                            question("s", "q0", Split::kValidation, "A"),
                                            question("s", "q1", Split::kValidation, "A")});
  const auto& v = ds.subject("s").validation;
  EXPECT_EQ(v[0].question_id, "q0");
  EXPECT_EQ(v[2].question_id, "q2");
}

Dataset full_dataset() {
  std::vector<QuestionRecord> qs;
  for (int i = 0; i < 10; ++i) qs.push_back(question("s", "v" + std::to_string(i), Split::kValidation, "A"));
  for (int i = 0; i < 10; ++i) qs.push_back(question("s", "t" + std::to_string(i), Split::kTest, "A"));
  return Dataset::from_records(qs);
}

TEST(Predictions, FullCoverageGivesUnitCompleteness) {
  const Dataset ds = full_dataset();
  std::vector<PredictionRecord> recs;
  for (std::string m : {"m1", "m2"})
    for (const auto& split : {ds.subject("s").validation, ds.subject("s").test})
      for (const auto& q : split) recs.push_back(prediction(m, "s", q.question_id, "B"));
  const auto set = PredictionSet::from_records(ds, recs);
  EXPECT_EQ(set.pool().model_ids, (std::vector<std::string>{"m1", "m2"}));
  for (std::string m : {"m1", "m2"}) EXPECT_DOUBLE_EQ(set.completeness(m, "s").fraction(), 1.0);
  EXPECT_TRUE(set.warnings().empty());
}

TEST(Predictions, MissingTestAnswersWarn) {
  const Dataset ds = full_dataset();
  std::vector<PredictionRecord> recs;
  for (const auto& q : ds.subject("s").validation) recs.push_back(prediction("m", "s", q.question_id, "A"));
  for (const auto& q : ds.subject("s").test)
    if (q.question_id != "t3" && q.question_id != "t7") recs.push_back(prediction("m", "s", q.question_id, "A"));
  const auto set = PredictionSet::from_records(ds, recs);
  EXPECT_DOUBLE_EQ(set.completeness("m", "s").fraction(Split::kTest), 0.8);
  EXPECT_DOUBLE_EQ(set.completeness("m", "s").fraction(Split::kValidation), 1.0);
  EXPECT_DOUBLE_EQ(set.completeness("m", "s").fraction(), 0.9);
  ASSERT_EQ(set.warnings().size(), 1u);
  EXPECT_THAT(set.warnings()[0], ::testing::HasSubstr("'m'"));
  EXPECT_EQ(set.answer(0, "s", Split::kTest, 3), kNoAnswer);
}

TEST(Predictions, CrossValidationErrors) {
  const Dataset ds = full_dataset();
  expect_input_error([&] { PredictionSet::from_records(ds, {prediction("gpt", "s", "nope", "A")}); },
                     {"unknown question", "gpt", "nope"});
  expect_input_error([&] { PredictionSet::from_records(ds, {prediction("gpt", "s", "t1", "Z")}); },
                     {"'Z'", "gpt", "t1"});
  expect_input_error(
      [&] {
        PredictionSet::from_records(ds, {prediction("gpt", "s", "t1", "A"), prediction("gpt", "s", "t1", "B")});
      },
      {"duplicate prediction", "gpt"});
}

TEST(Predictions, ParseReportsSourceAndLine) {
  const Dataset ds = full_dataset();
  std::istringstream in(R"({"model_id":"m","subject_id":"s","question_id":"t1"})");
  expect_input_error([&] { parse_predictions(in, "log.jsonl", ds); },
                     {"log.jsonl:1", "predicted_choice"});
}

TEST(ValidationAccuracy, CountsCorrectOverAllValidationQuestions) {
  std::vector<QuestionRecord> qs;
  for (int i = 0; i < 4; ++i) qs.push_back(question("s", "v" + std::to_string(i), Split::kValidation, "C"));
  qs.push_back(question("empty", "t0", Split::kTest, "A"));
  const Dataset ds = Dataset::from_records(qs);
  const auto set = PredictionSet::from_records(
      ds, {prediction("m", "s", "v0", "C"), prediction("m", "s", "v1", "C"), prediction("m", "s", "v2", "C"),
           prediction("m", "s", "v3", "D"), prediction("other", "empty", "t0", "A")});
  EXPECT_DOUBLE_EQ(validation_accuracy(set, ds, "m", "s"), 0.75);
  EXPECT_DOUBLE_EQ(validation_accuracy(set, ds, "other", "s"), 0.0);
  expect_input_error([&] { validation_accuracy(set, ds, "m", "empty"); }, {"no validation questions"});
}

TEST(ValidationAccuracy, MatchesBruteForceCountOnFixture) {
  const auto f = testing::load_fixture("small");
  const auto& expected = f.expected.at("alphas");
  std::size_t checked = 0;
  for (const auto& [subject, models] : expected.items())
    for (const auto& [model, alpha] : models.items()) {
      EXPECT_DOUBLE_EQ(validation_accuracy(f.predictions, f.dataset, model, subject), alpha.get<double>())
          << model << " / " << subject;
      ++checked;
    }
  EXPECT_EQ(checked, 15u);
}

TEST(ValidationAccuracy, BoundedAndOneOnlyWhenPerfect) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<QuestionRecord> qs;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i)
      qs.push_back(question("s", "v" + std::to_string(i), Split::kValidation, std::string(1, "ABCD"[rng() % 4])));
    const Dataset ds = Dataset::from_records(qs);
    std::vector<PredictionRecord> recs;
    bool perfect = true;
    for (const auto& q : qs) {
      if (q.question_id != "v0" && rng() % 5 == 0) {
        perfect = false;
        continue;
      }
      const std::string c(1, "ABCD"[rng() % 4]);
      perfect = perfect && c == q.correct_choice;
      recs.push_back(prediction("m", "s", q.question_id, c));
    }
    const auto set = PredictionSet::from_records(ds, recs);
    const double a = validation_accuracy(set, ds, "m", "s");
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
    EXPECT_EQ(a == 1.0, perfect);
  }
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

TEST(Loading, LinePermutationYieldsIdenticalIndex) {
  const auto dir = testing::fixture_dir("small");
  auto manifest = lines_of(testing::slurp(dir / "manifest.jsonl"));
  auto log = lines_of(testing::slurp(dir / "predictions.jsonl"));
  auto disc = lines_of(testing::slurp(dir / "disciplines.jsonl"));
  const auto reference = testing::load_fixture("small");
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(manifest.begin(), manifest.end(), rng);
    std::shuffle(log.begin(), log.end(), rng);
    std::shuffle(disc.begin(), disc.end(), rng);
    std::istringstream m(join(manifest)), p(join(log)), d(join(disc));
    const Dataset ds = parse_dataset(m, "m");
    const PredictionSet set = parse_predictions(p, "p", ds);
    const DisciplineMap dm = parse_discipline_map(d, "d", ds);
    EXPECT_EQ(ds.subject_ids(), reference.dataset.subject_ids());
    EXPECT_EQ(set.pool().model_ids, reference.predictions.pool().model_ids);
    EXPECT_EQ(dm.entries, reference.disciplines.entries);
    for (const auto& s : ds.subject_ids()) {
      const auto& a = ds.subject(s);
      const auto& b = reference.dataset.subject(s);
      ASSERT_EQ(a.validation.size(), b.validation.size());
      for (std::size_t i = 0; i < a.validation.size(); ++i)
        EXPECT_EQ(a.validation[i].question_id, b.validation[i].question_id);
      EXPECT_EQ(set.answers(s).validation, reference.predictions.answers(s).validation);
      EXPECT_EQ(set.answers(s).test, reference.predictions.answers(s).test);
    }
  }
}

TEST(DisciplineMap, EveryDatasetSubjectMustBeMapped) {
  const Dataset ds = Dataset::from_records(
      {question("a", "q", Split::kTest, "A"), question("b", "q", Split::kTest, "A")});
  std::istringstream partial(R"({"subject_id":"a","discipline_id":"x"})");
  expect_input_error([&] { parse_discipline_map(partial, "d", ds); }, {"'b'"});

  std::istringstream extra(
      "{\"subject_id\":\"a\",\"discipline_id\":\"x\"}\n{\"subject_id\":\"b\",\"discipline_id\":\"y\"}\n"
      "{\"subject_id\":\"zzz\",\"discipline_id\":\"y\"}\n");
  const auto dm = parse_discipline_map(extra, "d", ds);
  EXPECT_EQ(dm.discipline_of("b"), "y");
}

TEST(DisciplineMap, ShippedBenchmarkMapCoversTwentyDisciplines) {
  std::vector<QuestionRecord> qs;
  std::ifstream in(std::filesystem::path(DFPE_DATA_DIR) / "mmlu_disciplines.jsonl");
  std::set<std::string> disciplines;
  std::size_t subjects = 0;
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line);
    qs.push_back(question(j.at("subject_id"), "q", Split::kTest, "A"));
    disciplines.insert(j.at("discipline_id").get<std::string>());
    ++subjects;
  }
  EXPECT_EQ(subjects, 57u);
  EXPECT_EQ(disciplines.size(), 20u);
  const Dataset ds = Dataset::from_records(qs);
  EXPECT_NO_THROW(load_discipline_map(std::filesystem::path(DFPE_DATA_DIR) / "mmlu_disciplines.jsonl", ds));
}

}  // namespace
}  // namespace dfpe
