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


// Per-subject quantile filtering, cluster representative selection and
// exponential accuracy weighting.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfpe/cluster.hpp"
#include "dfpe/config.hpp"
#include "dfpe/fingerprint.hpp"
#include "dfpe/ingest.hpp"

namespace dfpe {

struct EnsembleMember {
  std::string model_id;
  double alpha = 0.0;       // validation accuracy on the subject
  double weight_raw = 0.0;  // exp(gamma * alpha)
  double weight = 0.0;      // normalized over the members
  int cluster = 0;
};

struct SubjectEnsemble {
  std::string subject_id;
  std::vector<EnsembleMember> members;  // canonical model order
  double threshold = 0.0;
  // Cluster label of every clustered model (after noise promotion). With
  // filter_then_cluster only the survivors are clustered.
  std::map<std::string, int> cluster_of;
  // Validation accuracy of every pool model.
  std::map<std::string, double> alphas;

  const EnsembleMember* find(const std::string& model_id) const;
};

using EnsembleSet = std::map<std::string, SubjectEnsemble>;

// Lower empirical quantile: the element at index floor(q * (n - 1)) of the
// ascending sort. Throws InputError on an empty list or q outside [0, 1].
double quantile_threshold(std::span<const double> alphas, double q);

struct FilterResult {
  std::vector<std::string> survivors;  // canonical order, never empty
  double threshold = 0.0;
};

FilterResult filter_models(const std::map<std::string, double>& alphas, double q);

// For each cluster with a surviving member, the survivor with the highest
// alpha; ties go to the lexicographically smallest model id. Throws
// InputError when no cluster has a surviving member.
std::map<int, std::string> select_representatives(const Clustering& clustering,
                                                  const std::map<std::string, double>& alphas,
                                                  const std::vector<std::string>& survivors);

struct ModelWeight {
  double raw = 0.0;
  double normalized = 0.0;
};

// raw = exp(gamma * alpha); normalized = raw / sum(raw), evaluated with the
// maximum exponent factored out.
std::map<std::string, ModelWeight> exp_weights(const std::map<int, std::string>& representatives,
                                               const std::map<std::string, double>& alphas,
                                               double gamma);

// Validation accuracy of every pool model on `subject_id`.
std::map<std::string, double> subject_alphas(const PredictionSet& predictions,
                                             const Dataset& dataset,
                                             const std::string& subject_id);

// Filters, clusters, picks representatives and weights them, in the order
// given by config.filter_order. `fingerprints` must cover every model in
// `alphas`.
SubjectEnsemble build_subject_ensemble(const std::string& subject_id,
                                       const std::map<std::string, double>& alphas,
                                       std::span<const FingerprintVector> fingerprints,
                                       const RunConfig& config);

SubjectEnsemble build_subject_ensemble(const std::string& subject_id,
                                       const PredictionSet& predictions, const Dataset& dataset,
                                       std::span<const FingerprintVector> fingerprints,
                                       const RunConfig& config);

// All subjects, built in parallel.
EnsembleSet build_ensembles(const Dataset& dataset, const PredictionSet& predictions,
                            const FingerprintTable& fingerprints, const RunConfig& config);

nlohmann::json ensembles_to_json(const EnsembleSet& ensembles, const RunConfig& config);
EnsembleSet ensembles_from_json(const nlohmann::json& document);

}  // namespace dfpe
