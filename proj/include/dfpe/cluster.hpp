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


// DBSCAN over fingerprint vectors under cosine distance.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfpe/fingerprint.hpp"

namespace dfpe {

inline constexpr int kNoise = -1;

struct Clustering {
  std::string subject_id;
  // model_id -> non-negative cluster label, or kNoise.
  std::map<std::string, int> labels;

  // label -> members in canonical order. Noise is excluded.
  std::map<int, std::vector<std::string>> clusters() const;
  std::vector<std::string> noise() const;
};

// Symmetric pairwise cosine distances with models in canonical order.
struct DistanceMatrix {
  std::vector<std::string> model_ids;
  std::vector<std::vector<double>> values;
};

DistanceMatrix pairwise_distances(std::span<const FingerprintVector> fingerprints);

// Standard DBSCAN. A point is core when at least `min_pts` points, itself
// included, lie within `eps`. Points are visited in lexicographic model_id
// order and clusters are labelled 0, 1, ... in creation order, so a border
// point reachable from several clusters joins the first one created.
Clustering dbscan(std::span<const FingerprintVector> fingerprints, double eps, int min_pts);
Clustering dbscan(const DistanceMatrix& distances, double eps, int min_pts);

// Every noise model becomes its own cluster, labelled after the existing
// ones in canonical order.
Clustering promote_noise_to_singletons(Clustering clustering);

// Distance matrix plus raw and promoted labels, for auditing one subject.
nlohmann::json clustering_debug_json(const DistanceMatrix& distances, const Clustering& raw,
                                     const Clustering& promoted);

}  // namespace dfpe
