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


#include "dfpe/cluster.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "dfpe/error.hpp"

namespace dfpe {

std::map<int, std::vector<std::string>> Clustering::clusters() const {
  std::map<int, std::vector<std::string>> out;
  for (const auto& [model, label] : labels)
    if (label != kNoise) out[label].push_back(model);
  return out;
}

std::vector<std::string> Clustering::noise() const {
  std::vector<std::string> out;
  for (const auto& [model, label] : labels)
    if (label == kNoise) out.push_back(model);
  return out;
}

DistanceMatrix pairwise_distances(std::span<const FingerprintVector> fingerprints) {
  if (fingerprints.empty()) throw InputError("clustering needs at least one fingerprint");
  std::vector<std::size_t> order(fingerprints.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fingerprints[a].model_id < fingerprints[b].model_id;
  });
  const std::size_t dim = fingerprints[order[0]].values.size();
  DistanceMatrix dm;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& fp = fingerprints[order[k]];
    if (k > 0 && fp.model_id == dm.model_ids.back())
      throw InputError("duplicate fingerprint for model '" + fp.model_id + "'");
    if (fp.values.size() != dim)
      throw InputError("fingerprint dimension mismatch for model '" + fp.model_id + "'");
    dm.model_ids.push_back(fp.model_id);
  }
  const std::size_t n = order.size();
  dm.values.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = cosine_distance(fingerprints[order[i]], fingerprints[order[j]]);
      dm.values[i][j] = d;
      dm.values[j][i] = d;
    }
  return dm;
}

Clustering dbscan(const DistanceMatrix& distances, double eps, int min_pts) {
  if (!(eps > 0.0)) throw InputError("dbscan eps must be > 0");
  if (min_pts < 1) throw InputError("dbscan min_pts must be >= 1");
  const std::size_t n = distances.model_ids.size();
  if (n == 0) throw InputError("clustering needs at least one fingerprint");

  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  auto neighbours = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q)
      if (q == p || distances.values[p][q] <= eps) out.push_back(q);
    return out;
  };

  int next_label = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (labels[p] != kUnvisited) continue;
    auto seeds = neighbours(p);
    if (seeds.size() < static_cast<std::size_t>(min_pts)) {
      labels[p] = kNoise;
      continue;
    }
    const int label = next_label++;
    labels[p] = label;
    std::deque<std::size_t> frontier(seeds.begin(), seeds.end());
    while (!frontier.empty()) {
      const std::size_t q = frontier.front();
      frontier.pop_front();
      if (labels[q] == kNoise) labels[q] = label;  // border point
      if (labels[q] != kUnvisited) continue;
      labels[q] = label;
      auto reach = neighbours(q);
      if (reach.size() >= static_cast<std::size_t>(min_pts))
        frontier.insert(frontier.end(), reach.begin(), reach.end());
    }
  }

  Clustering out;
  for (std::size_t i = 0; i < n; ++i) out.labels[distances.model_ids[i]] = labels[i];
  return out;
}

Clustering dbscan(std::span<const FingerprintVector> fingerprints, double eps, int min_pts) {
  auto distances = pairwise_distances(fingerprints);
  Clustering out = dbscan(distances, eps, min_pts);
  out.subject_id = fingerprints.front().subject_id;
  for (const auto& fp : fingerprints)
    if (fp.subject_id != out.subject_id)
      throw InputError("fingerprints from different subjects cannot be clustered together");
  return out;
}

Clustering promote_noise_to_singletons(Clustering clustering) {
  int next_label = 0;
  for (const auto& [_, label] : clustering.labels) next_label = std::max(next_label, label + 1);
  for (auto& [_, label] : clustering.labels)
    if (label == kNoise) label = next_label++;
  return clustering;
}

nlohmann::json clustering_debug_json(const DistanceMatrix& distances, const Clustering& raw,
                                     const Clustering& promoted) {
  nlohmann::json raw_labels = nlohmann::json::object();
  for (const auto& [model, label] : raw.labels) raw_labels[model] = label;
  nlohmann::json clusters = nlohmann::json::object();
  for (const auto& [label, members] : promoted.clusters()) clusters[std::to_string(label)] = members;
  return {
      {"subject_id", raw.subject_id},
      {"models", distances.model_ids},
      {"distances", distances.values},
      {"dbscan_labels", raw_labels},
      {"clusters", clusters},
  };
}

}  // namespace dfpe
