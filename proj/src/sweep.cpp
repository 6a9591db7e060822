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


#include "dfpe/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "dfpe/ensemble.hpp"
#include "dfpe/error.hpp"
#include "jsonl.hpp"
#include "parallel.hpp"

namespace dfpe {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

const char* axis_label(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kQuantile: return "Quantile threshold";
    case SweepAxis::kGamma: return "AccuracyFactor";
    case SweepAxis::kEps: return "DBSCAN epsilon (log scale)";
  }
  return "";
}

}  // namespace

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kQuantile: return "quantile";
    case SweepAxis::kGamma: return "gamma";
    case SweepAxis::kEps: return "eps";
  }
  return "";
}

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "quantile") return SweepAxis::kQuantile;
  if (text == "gamma") return SweepAxis::kGamma;
  if (text == "eps") return SweepAxis::kEps;
  throw InputError("sweep axis must be quantile, gamma or eps, got '" + text + "'");
}

void SweepSpec::validate() const {
  if (values.empty()) throw InputError("sweep needs at least one value");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1])) throw InputError("sweep values must be strictly increasing");
  for (double v : values) sweep_point_config(*this, v).validate();
}

std::vector<double> default_grid(SweepAxis axis) {
  std::vector<double> grid;
  switch (axis) {
    case SweepAxis::kQuantile:
      for (int i = 1; i <= 10; ++i) grid.push_back(0.05 * i);
      break;
    case SweepAxis::kGamma:
      for (int i = 1; i <= 10; ++i) grid.push_back(i);
      break;
    case SweepAxis::kEps:
      for (int i = 0; i <= 6; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.5 * i));
      break;
  }
  return grid;
}

RunConfig sweep_point_config(const SweepSpec& spec, double value) {
  RunConfig c = spec.fixed;
  switch (spec.axis) {
    case SweepAxis::kQuantile: c.quantile_q = value; break;
    case SweepAxis::kGamma: c.gamma = value; break;
    case SweepAxis::kEps: c.dbscan_eps = value; break;
  }
  return c;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const Dataset& dataset,
                                const PredictionSet& predictions,
                                const FingerprintTable& fingerprints,
                                const DisciplineMap& disciplines,
                                DisciplineAggregation aggregation) {
  spec.validate();
  std::vector<SweepRow> rows(spec.values.size());
  detail::parallel_for(spec.values.size(), [&](std::size_t i) {
    const RunConfig config = sweep_point_config(spec, spec.values[i]);
    const auto ensembles = build_ensembles(dataset, predictions, fingerprints, config);
    const auto dfpe = score_predictions("DFPE", predict_all(ensembles, predictions, dataset),
                                        dataset, disciplines, aggregation);
    rows[i] = {spec.values[i], dfpe.overall_accuracy(), dfpe.discipline_accuracy_mean,
               participation_stats(ensembles).mean};
  });
  return rows;
}

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << to_string(axis) << ",overall_accuracy,discipline_accuracy_mean,mean_members_per_subject\n";
  for (const auto& r : rows)
    out << shortest(r.value) << ',' << shortest(r.overall_accuracy) << ','
        << shortest(r.discipline_mean) << ',' << shortest(r.mean_members) << '\n';
  return out.str();
}

std::string sweep_to_svg(SweepAxis axis, const std::vector<SweepRow>& rows) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 20, kTop = 30, kBottom = 60;
  const bool log_x = axis == SweepAxis::kEps;
  auto xform = [&](double v) { return log_x ? std::log10(v) : v; };

  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (!rows.empty()) {
    x_lo = xform(rows.front().value);
    x_hi = xform(rows.back().value);
    y_lo = 1.0;
    y_hi = 0.0;
    for (const auto& r : rows) {
      y_lo = std::min({y_lo, r.overall_accuracy, r.discipline_mean});
      y_hi = std::max({y_hi, r.overall_accuracy, r.discipline_mean});
    }
  }
  if (x_hi - x_lo < 1e-12) { x_lo -= 0.5; x_hi += 0.5; }
  y_lo = std::max(0.0, y_lo - 0.01);
  y_hi = std::min(1.0, y_hi + 0.01);
  if (y_hi - y_lo < 1e-6) { y_lo = std::max(0.0, y_lo - 0.05); y_hi = std::min(1.0, y_hi + 0.05); }

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (xform(v) - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double a) { return kTop + (1.0 - (a - y_lo) / (y_hi - y_lo)) * plot_h; };
  auto num = [](double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << v;
    return s.str();
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
      << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double a = y_lo + (y_hi - y_lo) * t / 4.0;
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(a) + 4) << "\" text-anchor=\"end\">"
        << num(a * 100.0) << "</text>\n";
  }
  for (const auto& r : rows)
    svg << "<text x=\"" << num(px(r.value)) << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << shortest(r.value) << "</text>\n";
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">" << axis_label(axis) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << kTop + plot_h / 2 << ")\">Accuracy (%)</text>\n";

  auto series = [&](auto field, const char* colour, const char* name, int legend_row) {
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : rows) svg << num(px(r.value)) << ',' << num(py(r.*field)) << ' ';
    svg << "\"/>\n";
    for (const auto& r : rows)
      svg << "<circle cx=\"" << num(px(r.value)) << "\" cy=\"" << num(py(r.*field))
          << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w - 150 << "\" y=\"" << kTop + 14 * legend_row
        << "\" fill=\"" << colour << "\">" << name << "</text>\n";
  };
  series(&SweepRow::overall_accuracy, "#1f77b4", "Accuracy", 1);
  series(&SweepRow::discipline_mean, "#d62728", "Discipline-Accuracy", 2);
  svg << "</svg>\n";
  return svg.str();
}

void write_sweep(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  const std::string stem = std::string("sweep_") + to_string(spec.axis);
  detail::write_file_atomic(spec.outputs / (stem + ".csv"), sweep_to_csv(spec.axis, rows));
  detail::write_file_atomic(spec.outputs / (stem + ".svg"), sweep_to_svg(spec.axis, rows));
}

}  // namespace dfpe
