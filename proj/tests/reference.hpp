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


// Brute-force reference implementations used as test oracles. They share no
// code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dfpe::reference {

inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  if (aa == 0 || bb == 0) return 1.0;
  const double d = static_cast<double>(1.0L - ab / std::sqrt(aa * bb));
  return std::clamp(d, 0.0, 2.0);
}

// DBSCAN by graph reasoning: core points are those with at least min_pts
// points (self included) within eps; clusters are connected components of
// cores under the eps relation, numbered by their smallest core index; a
// non-core point with a core neighbour joins the lowest-numbered adjacent
// component; everything else is noise (-1).
inline std::vector<int> dbscan(const std::vector<std::vector<double>>& distances, double eps,
                               int min_pts) {
  const std::size_t n = distances.size();
  std::vector<std::vector<bool>> near(n, std::vector<bool>(n));
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      near[i][j] = i == j || distances[i][j] <= eps;
      count += near[i][j];
    }
    core[i] = count >= min_pts;
  }
  // Union-find over core points.
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (core[i] && core[j] && near[i][j]) parent[std::max(find(i), find(j))] = std::min(find(i), find(j));
  // Component ids by smallest core index.
  std::map<std::size_t, int> component;
  for (std::size_t i = 0; i < n; ++i)
    if (core[i] && !component.count(find(i))) component.emplace(find(i), static_cast<int>(component.size()));
  std::vector<int> labels(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      labels[i] = component.at(find(i));
      continue;
    }
    for (std::size_t j = 0; j < n; ++j)
      if (core[j] && near[i][j]) {
        const int c = component.at(find(j));
        if (labels[i] < 0 || c < labels[i]) labels[i] = c;
      }
  }
  return labels;
}

// Partition of indices induced by labels; noise points are singletons.
inline std::set<std::set<std::size_t>> partition(const std::vector<int>& labels) {
  std::map<int, std::set<std::size_t>> groups;
  std::set<std::set<std::size_t>> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0)
      out.insert({i});
    else
      groups[labels[i]].insert(i);
  }
  for (auto& [_, g] : groups) out.insert(g);
  return out;
}

struct TallyResult {
  std::vector<double> scores;
  std::optional<int> winner;
};

// Score of each choice computed independently by scanning every ballot, then
// the first choice whose score no other choice exceeds.
inline TallyResult tally(int n_choices, const std::vector<std::pair<double, int>>& ballots) {
  TallyResult r;
  for (int c = 0; c < n_choices; ++c) {
    double s = 0;
    for (const auto& [w, choice] : ballots)
      if (choice == c) s += w;
    r.scores.push_back(s);
  }
  if (ballots.empty()) return r;
  double mass = 0;
  for (const auto& [w, choice] : ballots) mass += std::fabs(w);
  for (int c = 0; c < n_choices; ++c) {
    bool beaten = false;
    for (int d = 0; d < n_choices; ++d) beaten = beaten || r.scores[d] - r.scores[c] > 1e-12 * mass;
    if (!beaten) {
      r.winner = c;
      break;
    }
  }
  return r;
}

// Lower empirical quantile by counting: the smallest value v such that more
// than floor(q (n - 1)) values are <= v.
inline double quantile(const std::vector<double>& values, double q) {
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  double best = INFINITY;
  for (double v : values) {
    std::size_t at_most = 0;
    for (double w : values) at_most += w <= v;
    if (at_most > k) best = std::min(best, v);
  }
  return best;
}

}  // namespace dfpe::reference
