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


#include "dfpe/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dfpe/error.hpp"
#include "jsonl.hpp"

namespace dfpe {

void normalize_in_place(std::vector<double>& values) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  if (sq == 0.0) return;
  const double norm = std::sqrt(sq);
  for (double& v : values) v /= norm;
}

FingerprintVector answer_pattern_fingerprint(const PredictionSet& predictions,
                                             const Dataset& dataset,
                                             const std::string& model_id,
                                             const std::string& subject_id) {
  const auto& questions = dataset.subject(subject_id).validation;
  std::size_t dim = 0;
  for (const auto& q : questions) dim += q.choices.size();

  FingerprintVector fp{model_id, subject_id, std::vector<double>(dim, 0.0),
                       FingerprintStrategy::kAnswerPattern};
  const int model = predictions.pool().index_of(model_id);
  if (model >= 0) {
    const auto& sheet = predictions.answers(subject_id).validation[static_cast<std::size_t>(model)];
    std::size_t offset = 0;
    for (std::size_t i = 0; i < questions.size(); ++i) {
      if (sheet[i] != kNoAnswer) fp.values[offset + static_cast<std::size_t>(sheet[i])] = 1.0;
      offset += questions[i].choices.size();
    }
  }
  normalize_in_place(fp.values);
  return fp;
}

EmbeddingSet EmbeddingSet::parse(std::istream& in, const std::string& source_name,
                                 const Dataset& dataset) {
  EmbeddingSet set;
  bool have_dimension = false;
  detail::for_each_record(in, source_name, [&](const nlohmann::json& j, const detail::LineContext& ctx) {
    auto model = detail::require_string(j, "model_id", ctx);
    auto subject = detail::require_string(j, "subject_id", ctx);
    auto question = detail::require_string(j, "question_id", ctx);
    auto vec = detail::require_number_list(j, "vector", ctx);
    if (vec.empty()) throw InputError(ctx.where("empty vector"));
    for (double v : vec)
      if (!std::isfinite(v)) throw InputError(ctx.where("non-finite vector component"));
    if (!have_dimension) {
      set.dimension_ = vec.size();
      have_dimension = true;
    } else if (vec.size() != set.dimension_) {
      throw InputError(ctx.where("inconsistent dimension " + std::to_string(vec.size()) +
                                 " (expected " + std::to_string(set.dimension_) + ")"));
    }
    auto loc = dataset.locate(subject, question);
    if (!loc) throw InputError(ctx.where("unknown question " + subject + "/" + question));
    if (loc->split != Split::kValidation) return;
    auto& slot = set.by_key_[{model, subject}];
    if (!slot.emplace(question, std::move(vec)).second)
      throw InputError(ctx.where("duplicate embedding for model '" + model + "', question " +
                                 subject + "/" + question));
  });
  for (const auto& [key, rows] : set.by_key_) {
    auto& ordered = set.ordered_[key];
    for (const auto& [_, vec] : rows) ordered.push_back(vec);
  }
  return set;
}

EmbeddingSet EmbeddingSet::load(const std::filesystem::path& path, const Dataset& dataset) {
  auto in = detail::open_input(path);
  return parse(in, path.string(), dataset);
}

bool EmbeddingSet::contains(const std::string& model_id, const std::string& subject_id) const {
  return ordered_.count({model_id, subject_id}) != 0;
}

const std::vector<std::vector<double>>& EmbeddingSet::responses(
    const std::string& model_id, const std::string& subject_id) const {
  auto it = ordered_.find({model_id, subject_id});
  if (it == ordered_.end())
    throw InputError("no embeddings for model '" + model_id + "' in subject '" + subject_id + "'");
  return it->second;
}

FingerprintVector external_embedding_fingerprint(const EmbeddingSet& embeddings,
                                                 const std::string& model_id,
                                                 const std::string& subject_id) {
  const auto& rows = embeddings.responses(model_id, subject_id);
  std::vector<double> mean(embeddings.dimension(), 0.0);
  for (const auto& row : rows)
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += row[d];
  for (double& v : mean) v /= static_cast<double>(rows.size());
  normalize_in_place(mean);
  return {model_id, subject_id, std::move(mean), FingerprintStrategy::kExternalEmbedding};
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw InputError("fingerprint dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 1.0;
  const double d = 1.0 - dot / (std::sqrt(aa) * std::sqrt(bb));
  return std::clamp(d, 0.0, 2.0);
}

double cosine_distance(const FingerprintVector& a, const FingerprintVector& b) {
  return cosine_distance(std::span<const double>(a.values), std::span<const double>(b.values));
}

FingerprintTable compute_fingerprints(const Dataset& dataset, const PredictionSet& predictions,
                                      FingerprintStrategy strategy,
                                      const EmbeddingSet* embeddings) {
  if (strategy == FingerprintStrategy::kExternalEmbedding && embeddings == nullptr)
    throw InputError("the external_embedding strategy needs an embedding file");
  FingerprintTable table;
  for (const auto& subject : dataset.subject_ids()) {
    auto& row = table[subject];
    for (const auto& model : predictions.pool().model_ids) {
      row.push_back(strategy == FingerprintStrategy::kAnswerPattern
                        ? answer_pattern_fingerprint(predictions, dataset, model, subject)
                        : external_embedding_fingerprint(*embeddings, model, subject));
    }
  }
  return table;
}

std::string fingerprints_to_jsonl(const FingerprintTable& table) {
  std::ostringstream out;
  for (const auto& [subject, row] : table) {
    for (const auto& fp : row) {
      nlohmann::json j{{"model_id", fp.model_id},
                       {"subject_id", fp.subject_id},
                       {"strategy", to_string(fp.strategy)},
                       {"vector", fp.values}};
      out << j.dump() << '\n';
    }
  }
  return out.str();
}

}  // namespace dfpe
