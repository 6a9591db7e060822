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


// One-axis sensitivity sweeps over quantile_q, gamma or dbscan_eps.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dfpe/config.hpp"
#include "dfpe/evaluate.hpp"
#include "dfpe/fingerprint.hpp"
#include "dfpe/ingest.hpp"

namespace dfpe {

enum class SweepAxis { kQuantile, kGamma, kEps };

const char* to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& text);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kQuantile;
  std::vector<double> values;  // non-empty, strictly increasing
  RunConfig fixed;
  std::filesystem::path outputs;

  void validate() const;
};

// Grid covering the visible range of the published sensitivity plots.
std::vector<double> default_grid(SweepAxis axis);

struct SweepRow {
  double value = 0.0;
  double overall_accuracy = 0.0;
  double discipline_mean = 0.0;
  double mean_members = 0.0;

  bool operator==(const SweepRow&) const = default;
};

// `fixed` with the swept field replaced by `value`.
RunConfig sweep_point_config(const SweepSpec& spec, double value);

// One pipeline run per value, evaluated on the test split. Points run in
// parallel; rows come back in value order.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const Dataset& dataset,
                                const PredictionSet& predictions,
                                const FingerprintTable& fingerprints,
                                const DisciplineMap& disciplines,
                                DisciplineAggregation aggregation = DisciplineAggregation::kPooled);

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows);
// Line chart of both accuracies against the swept value; log-scaled x axis
// for eps.
std::string sweep_to_svg(SweepAxis axis, const std::vector<SweepRow>& rows);

// Writes sweep_<axis>.csv and sweep_<axis>.svg under spec.outputs.
void write_sweep(const SweepSpec& spec, const std::vector<SweepRow>& rows);

}  // namespace dfpe
