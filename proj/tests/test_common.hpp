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


// Shared helpers for the unit tests.

#pragma once

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfpe/error.hpp"
#include "dfpe/ingest.hpp"

namespace dfpe::testing {

inline std::filesystem::path fixture_dir(const std::string& name) {
  return std::filesystem::path(DFPE_FIXTURE_DIR) / name;
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct Fixture {
  Dataset dataset;
  PredictionSet predictions;
  DisciplineMap disciplines;
  nlohmann::json expected;
};

inline Fixture load_fixture(const std::string& name) {
  Fixture f;
  const auto dir = fixture_dir(name);
  f.dataset = load_dataset(dir / "manifest.jsonl");
  f.predictions = load_predictions(dir / "predictions.jsonl", f.dataset);
  if (std::filesystem::exists(dir / "disciplines.jsonl"))
    f.disciplines = load_discipline_map(dir / "disciplines.jsonl", f.dataset);
  if (std::filesystem::exists(dir / "expected.json")) f.expected = read_json(dir / "expected.json");
  return f;
}

// Fresh, empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dfpe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline QuestionRecord question(const std::string& subject, const std::string& id, Split split,
                               const std::string& correct,
                               std::vector<std::string> choices = {"A", "B", "C", "D"}) {
  QuestionRecord q;
  q.subject_id = subject;
  q.question_id = id;
  q.split = split;
  q.choices = std::move(choices);
  q.correct_choice = correct;
  return q;
}

inline PredictionRecord prediction(const std::string& model, const std::string& subject,
                                   const std::string& id, const std::string& choice) {
  return {model, subject, id, choice, std::nullopt};
}

// Runs `fn` and checks that it throws InputError whose message contains
// every fragment.
template <typename Fn>
void expect_input_error(Fn&& fn, std::initializer_list<std::string> fragments) {
  try {
    fn();
    ADD_FAILURE() << "expected InputError";
  } catch (const InputError& e) {
    for (const auto& f : fragments) EXPECT_THAT(e.what(), ::testing::HasSubstr(f));
  }
}

inline std::vector<double> random_unit_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<double> v(dim);
  double sq = 0;
  for (auto& x : v) {
    x = normal(rng);
    sq += x * x;
  }
  for (auto& x : v) x /= std::sqrt(sq);
  return v;
}

}  // namespace dfpe::testing
