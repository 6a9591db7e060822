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


#include "dfpe/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dfpe/error.hpp"
#include "parallel.hpp"

namespace dfpe {

const EnsembleMember* SubjectEnsemble::find(const std::string& model_id) const {
  for (const auto& m : members)
    if (m.model_id == model_id) return &m;
  return nullptr;
}

double quantile_threshold(std::span<const double> alphas, double q) {
  if (alphas.empty()) throw InputError("quantile of an empty accuracy list");
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("quantile q must lie in [0, 1]");
  std::vector<double> sorted(alphas.begin(), alphas.end());
  std::sort(sorted.begin(), sorted.end());
  const auto index = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
  return sorted[std::min(index, sorted.size() - 1)];
}

FilterResult filter_models(const std::map<std::string, double>& alphas, double q) {
  std::vector<double> values;
  values.reserve(alphas.size());
  for (const auto& [_, a] : alphas) values.push_back(a);
  FilterResult result;
  result.threshold = quantile_threshold(values, q);
  for (const auto& [model, a] : alphas)
    if (a >= result.threshold) result.survivors.push_back(model);
  return result;
}

std::map<int, std::string> select_representatives(const Clustering& clustering,
                                                  const std::map<std::string, double>& alphas,
                                                  const std::vector<std::string>& survivors) {
  const std::set<std::string> alive(survivors.begin(), survivors.end());
  std::map<int, std::string> reps;
  // Members arrive in canonical order, so strict '>' keeps the smallest id on ties.
  for (const auto& [label, members] : clustering.clusters()) {
    const std::string* best = nullptr;
    double best_alpha = 0.0;
    for (const auto& model : members) {
      if (!alive.count(model)) continue;
      auto it = alphas.find(model);
      if (it == alphas.end()) throw InputError("no validation accuracy for model '" + model + "'");
      if (best == nullptr || it->second > best_alpha) {
        best = &model;
        best_alpha = it->second;
      }
    }
    if (best != nullptr) reps.emplace(label, *best);
  }
  if (reps.empty())
    throw InputError("subject '" + clustering.subject_id + "': no cluster has a surviving model");
  return reps;
}

std::map<std::string, ModelWeight> exp_weights(const std::map<int, std::string>& representatives,
                                               const std::map<std::string, double>& alphas,
                                               double gamma) {
  if (representatives.empty()) throw InputError("cannot weight an empty representative set");
  if (!(gamma >= 0.0)) throw InputError("gamma must be >= 0");
  std::map<std::string, ModelWeight> out;
  double top = -INFINITY;
  for (const auto& [_, model] : representatives) {
    auto it = alphas.find(model);
    if (it == alphas.end()) throw InputError("no validation accuracy for model '" + model + "'");
    out[model].raw = std::exp(gamma * it->second);
    top = std::max(top, gamma * it->second);
  }
  double total = 0.0;
  for (auto& [model, w] : out) {
    w.normalized = std::exp(gamma * alphas.at(model) - top);
    total += w.normalized;
  }
  for (auto& [_, w] : out) w.normalized /= total;
  return out;
}

std::map<std::string, double> subject_alphas(const PredictionSet& predictions,
                                             const Dataset& dataset,
                                             const std::string& subject_id) {
  std::map<std::string, double> alphas;
  for (const auto& model : predictions.pool().model_ids)
    alphas[model] = validation_accuracy(predictions, dataset, model, subject_id);
  return alphas;
}

SubjectEnsemble build_subject_ensemble(const std::string& subject_id,
                                       const std::map<std::string, double>& alphas,
                                       std::span<const FingerprintVector> fingerprints,
                                       const RunConfig& config) {
  config.validate();
  if (alphas.empty()) throw InputError("subject '" + subject_id + "': empty model pool");
  std::map<std::string, const FingerprintVector*> by_model;
  for (const auto& fp : fingerprints) by_model[fp.model_id] = &fp;

  auto fingerprints_of = [&](const std::vector<std::string>& models) {
    std::vector<FingerprintVector> out;
    out.reserve(models.size());
    for (const auto& m : models) {
      auto it = by_model.find(m);
      if (it == by_model.end())
        throw InputError("subject '" + subject_id + "': no fingerprint for model '" + m + "'");
      out.push_back(*it->second);
      out.back().subject_id = subject_id;
    }
    return out;
  };

  const FilterResult filtered = filter_models(alphas, config.quantile_q);
  std::vector<std::string> to_cluster;
  if (config.filter_order == FilterOrder::kFilterThenCluster) {
    to_cluster = filtered.survivors;
  } else {
    for (const auto& [model, _] : alphas) to_cluster.push_back(model);
  }
  const auto fps = fingerprints_of(to_cluster);
  Clustering clustering =
      promote_noise_to_singletons(dbscan(fps, config.dbscan_eps, config.dbscan_min_pts));
  clustering.subject_id = subject_id;

  const auto reps = select_representatives(clustering, alphas, filtered.survivors);
  const auto weights = exp_weights(reps, alphas, config.gamma);

  SubjectEnsemble ens;
  ens.subject_id = subject_id;
  ens.threshold = filtered.threshold;
  ens.cluster_of = clustering.labels;
  ens.alphas = alphas;
  for (const auto& [model, w] : weights)
    ens.members.push_back({model, alphas.at(model), w.raw, w.normalized, clustering.labels.at(model)});
  return ens;
}

SubjectEnsemble build_subject_ensemble(const std::string& subject_id,
                                       const PredictionSet& predictions, const Dataset& dataset,
                                       std::span<const FingerprintVector> fingerprints,
                                       const RunConfig& config) {
  return build_subject_ensemble(subject_id, subject_alphas(predictions, dataset, subject_id),
                                fingerprints, config);
}

EnsembleSet build_ensembles(const Dataset& dataset, const PredictionSet& predictions,
                            const FingerprintTable& fingerprints, const RunConfig& config) {
  config.validate();
  const auto subjects = dataset.subject_ids();
  std::vector<SubjectEnsemble> built(subjects.size());
  detail::parallel_for(subjects.size(), [&](std::size_t i) {
    auto it = fingerprints.find(subjects[i]);
    if (it == fingerprints.end())
      throw InputError("no fingerprints for subject '" + subjects[i] + "'");
    built[i] = build_subject_ensemble(subjects[i], predictions, dataset, it->second, config);
  });
  EnsembleSet out;
  for (auto& e : built) out.emplace(e.subject_id, std::move(e));
  return out;
}

nlohmann::json ensembles_to_json(const EnsembleSet& ensembles, const RunConfig& config) {
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& [subject, ens] : ensembles) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : ens.members)
      members.push_back({{"model_id", m.model_id},
                         {"alpha", m.alpha},
                         {"weight_raw", m.weight_raw},
                         {"weight", m.weight},
                         {"cluster", m.cluster}});
    nlohmann::json clusters = nlohmann::json::object();
    std::map<int, std::vector<std::string>> grouped;
    for (const auto& [model, label] : ens.cluster_of) grouped[label].push_back(model);
    for (const auto& [label, models] : grouped) clusters[std::to_string(label)] = models;
    subjects.push_back({{"subject_id", subject},
                        {"threshold", ens.threshold},
                        {"alphas", ens.alphas},
                        {"cluster_of", ens.cluster_of},
                        {"clusters", clusters},
                        {"members", members}});
  }
  return {{"config", to_json(config)}, {"subjects", subjects}};
}

EnsembleSet ensembles_from_json(const nlohmann::json& document) {
  EnsembleSet out;
  try {
    for (const auto& s : document.at("subjects")) {
      SubjectEnsemble ens;
      ens.subject_id = s.at("subject_id").get<std::string>();
      ens.threshold = s.at("threshold").get<double>();
      ens.alphas = s.at("alphas").get<std::map<std::string, double>>();
      ens.cluster_of = s.at("cluster_of").get<std::map<std::string, int>>();
      for (const auto& m : s.at("members"))
        ens.members.push_back({m.at("model_id").get<std::string>(), m.at("alpha").get<double>(),
                               m.at("weight_raw").get<double>(), m.at("weight").get<double>(),
                               m.at("cluster").get<int>()});
      if (ens.members.empty())
        throw InputError("ensemble for subject '" + ens.subject_id + "' has no members");
      std::sort(ens.members.begin(), ens.members.end(),
                [](const auto& a, const auto& b) { return a.model_id < b.model_id; });
      const std::string id = ens.subject_id;
      if (!out.emplace(id, std::move(ens)).second)
        throw InputError("duplicate ensemble for subject '" + id + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed ensemble file: ") + e.what());
  }
  return out;
}

}  // namespace dfpe
