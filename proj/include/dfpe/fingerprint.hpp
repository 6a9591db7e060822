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


// Per (model, subject) fingerprint vectors summarizing validation responses,
// and the cosine geometry used to cluster them.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dfpe/config.hpp"
#include "dfpe/ingest.hpp"

namespace dfpe {

struct FingerprintVector {
  std::string model_id;
  std::string subject_id;
  // L2-normalized, or all zeros when the raw aggregate is zero.
  std::vector<double> values;
  FingerprintStrategy strategy = FingerprintStrategy::kAnswerPattern;
};

// Concatenated one-hot blocks of the predicted choice over the subject's
// validation questions in question_id order. A missing answer contributes a
// zero block.
FingerprintVector answer_pattern_fingerprint(const PredictionSet& predictions,
                                             const Dataset& dataset,
                                             const std::string& model_id,
                                             const std::string& subject_id);

// Per-response embedding vectors for the validation split, as written by the
// embedding sidecar. Records for test questions are ignored.
class EmbeddingSet {
 public:
  // Throws InputError on inconsistent dimensions, unknown questions and
  // duplicate records.
  static EmbeddingSet parse(std::istream& in, const std::string& source_name,
                            const Dataset& dataset);
  static EmbeddingSet load(const std::filesystem::path& path, const Dataset& dataset);

  std::size_t dimension() const { return dimension_; }
  bool contains(const std::string& model_id, const std::string& subject_id) const;

  // Response vectors in question_id order. Throws InputError when the
  // (model, subject) pair has no entry.
  const std::vector<std::vector<double>>& responses(const std::string& model_id,
                                                    const std::string& subject_id) const;

 private:
  std::size_t dimension_ = 0;
  // (model, subject) -> question_id -> vector
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>> by_key_;
  std::map<std::pair<std::string, std::string>, std::vector<std::vector<double>>> ordered_;
};

// Arithmetic mean of the response embeddings, then L2-normalized.
FingerprintVector external_embedding_fingerprint(const EmbeddingSet& embeddings,
                                                 const std::string& model_id,
                                                 const std::string& subject_id);

// 1 - cos(a, b), clamped to [0, 2]. Distance involving a zero vector is 1.
// Throws InputError on dimension mismatch.
double cosine_distance(std::span<const double> a, std::span<const double> b);
double cosine_distance(const FingerprintVector& a, const FingerprintVector& b);

void normalize_in_place(std::vector<double>& values);

// subject -> fingerprints of every pool model, in pool order.
using FingerprintTable = std::map<std::string, std::vector<FingerprintVector>>;

// `embeddings` is required for the external_embedding strategy.
FingerprintTable compute_fingerprints(const Dataset& dataset, const PredictionSet& predictions,
                                      FingerprintStrategy strategy,
                                      const EmbeddingSet* embeddings);

// One record per line: {model_id, subject_id, strategy, vector}.
std::string fingerprints_to_jsonl(const FingerprintTable& table);

}  // namespace dfpe
