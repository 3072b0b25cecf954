// Copyright 2026 The miniresnet Authors
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

#include "miniresnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "miniresnet/errors.hpp"

namespace miniresnet {

namespace {

void require_nonempty(const PredictionSet& set, const char* what) {
  if (set.size() == 0) {
    throw ContractError(std::string(what) + " requires a non-empty prediction set");
  }
}

int clamp_category(int category, int min_category, int max_category, int& clamped) {
  if (category < min_category) {
    ++clamped;
    return min_category;
  }
  if (category > max_category) {
    ++clamped;
    return max_category;
  }
  return category;
}

}  // namespace

int bin_category(double degrees) {
  return static_cast<int>(std::ceil((degrees - 7.5) / 15.0));
}

double mae(const PredictionSet& set) {
  require_nonempty(set, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    total += std::abs(set.predicted_deg[i] - set.true_deg[i]);
  }
  return total / static_cast<double>(set.size());
}

double abs_error_std(const PredictionSet& set) {
  if (set.size() < 2) {
    throw ContractError("abs_error_std requires at least two predictions");
  }
  const double mean = mae(set);
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double deviation = std::abs(set.predicted_deg[i] - set.true_deg[i]) - mean;
    total += deviation * deviation;
  }
  return std::sqrt(total / static_cast<double>(set.size()));
}

double category_accuracy(const PredictionSet& set) {
  require_nonempty(set, "category_accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (bin_category(set.predicted_deg[i]) == bin_category(set.true_deg[i])) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(set.size());
}

double tolerant_accuracy(const PredictionSet& set) {
  require_nonempty(set, "tolerant_accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int delta = bin_category(set.predicted_deg[i]) - bin_category(set.true_deg[i]);
    if (std::abs(delta) <= 1) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(set.size());
}

double Heatmap::at(int true_cat, int predicted_cat) const {
  if (true_cat < min_category || true_cat > max_category || predicted_cat < min_category ||
      predicted_cat > max_category) {
    throw ContractError("heatmap category out of range");
  }
  const int n = categories();
  return cells[static_cast<std::size_t>(true_cat - min_category) * n +
               static_cast<std::size_t>(predicted_cat - min_category)];
}

Heatmap confusion_heatmap(const PredictionSet& set, int min_category, int max_category) {
  require_nonempty(set, "confusion_heatmap");
  if (min_category > max_category) {
    throw ContractError("confusion_heatmap category range is empty");
  }
  Heatmap map;
  map.min_category = min_category;
  map.max_category = max_category;
  const int n = map.categories();
  std::vector<int> counts(static_cast<std::size_t>(n) * n, 0);
  map.row_population.assign(n, 0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int t = clamp_category(bin_category(set.true_deg[i]), min_category, max_category,
                                 map.clamped_true);
    const int p = clamp_category(bin_category(set.predicted_deg[i]), min_category, max_category,
                                 map.clamped_predicted);
    ++counts[static_cast<std::size_t>(t - min_category) * n +
             static_cast<std::size_t>(p - min_category)];
    ++map.row_population[t - min_category];
  }
  map.cells.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int row = 0; row < n; ++row) {
    const int total = map.row_population[row];
    if (total == 0) {
      continue;
    }
    for (int col = 0; col < n; ++col) {
      const std::size_t index = static_cast<std::size_t>(row) * n + col;
      map.cells[index] = 100.0 * counts[index] / static_cast<double>(total);
    }
  }
  return map;
}

EvaluationReport evaluate(const PredictionSet& set) {
  require_nonempty(set, "evaluate");
  EvaluationReport report;
  report.angle = set.angle;
  report.mae_deg = mae(set);
  report.std_dev_deg = set.size() >= 2 ? abs_error_std(set) : 0.0;
  report.category_accuracy = category_accuracy(set);
  report.tolerant_accuracy = tolerant_accuracy(set);
  report.heatmap = confusion_heatmap(set);
  RunMetrics metrics;
  metrics.run_id = set.run_id;
  metrics.n = static_cast<int>(set.size());
  metrics.mae_deg = report.mae_deg;
  metrics.std_dev_deg = report.std_dev_deg;
  metrics.category_accuracy = report.category_accuracy;
  metrics.tolerant_accuracy = report.tolerant_accuracy;
  report.runs.push_back(std::move(metrics));
  return report;
}

EvaluationReport aggregate_runs(const std::vector<EvaluationReport>& reports) {
  if (reports.empty()) {
    throw ContractError("aggregate_runs requires at least one report");
  }
  EvaluationReport aggregate;
  aggregate.angle = reports.front().angle;
  aggregate.heatmap = reports.front().heatmap;
  std::fill(aggregate.heatmap.cells.begin(), aggregate.heatmap.cells.end(), 0.0);
  std::fill(aggregate.heatmap.row_population.begin(), aggregate.heatmap.row_population.end(), 0);
  aggregate.heatmap.clamped_true = 0;
  aggregate.heatmap.clamped_predicted = 0;
  for (const EvaluationReport& report : reports) {
    if (report.angle != aggregate.angle) {
      throw ContractError("aggregate_runs cannot mix angles '" + aggregate.angle + "' and '" +
                          report.angle + "'");
    }
    if (report.heatmap.min_category != aggregate.heatmap.min_category ||
        report.heatmap.max_category != aggregate.heatmap.max_category) {
      throw ContractError("aggregate_runs requires a common heatmap category range");
    }
    aggregate.mae_deg += report.mae_deg;
    aggregate.std_dev_deg += report.std_dev_deg;
    aggregate.category_accuracy += report.category_accuracy;
    aggregate.tolerant_accuracy += report.tolerant_accuracy;
    for (std::size_t i = 0; i < aggregate.heatmap.cells.size(); ++i) {
      aggregate.heatmap.cells[i] += report.heatmap.cells[i];
    }
    for (std::size_t i = 0; i < aggregate.heatmap.row_population.size(); ++i) {
      aggregate.heatmap.row_population[i] += report.heatmap.row_population[i];
    }
    aggregate.heatmap.clamped_true += report.heatmap.clamped_true;
    aggregate.heatmap.clamped_predicted += report.heatmap.clamped_predicted;
    for (const RunMetrics& metrics : report.runs) {
      aggregate.runs.push_back(metrics);
    }
  }
  const double count = static_cast<double>(reports.size());
  aggregate.mae_deg /= count;
  aggregate.std_dev_deg /= count;
  aggregate.category_accuracy /= count;
  aggregate.tolerant_accuracy /= count;
  for (double& cell : aggregate.heatmap.cells) {
    cell /= count;
  }
  return aggregate;
}

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::json doc;
  doc["format"] = "miniresnet-report";
  doc["version"] = 1;
  doc["angle"] = report.angle;
  doc["mae_deg"] = report.mae_deg;
  doc["std_dev_deg"] = report.std_dev_deg;
  doc["category_accuracy"] = report.category_accuracy;
  doc["tolerant_accuracy"] = report.tolerant_accuracy;
  nlohmann::json runs = nlohmann::json::array();
  for (const RunMetrics& metrics : report.runs) {
    nlohmann::json run;
    run["run_id"] = metrics.run_id;
    run["n"] = metrics.n;
    run["mae_deg"] = metrics.mae_deg;
    run["std_dev_deg"] = metrics.std_dev_deg;
    run["category_accuracy"] = metrics.category_accuracy;
    run["tolerant_accuracy"] = metrics.tolerant_accuracy;
    runs.push_back(std::move(run));
  }
  doc["runs"] = std::move(runs);
  nlohmann::json heatmap;
  heatmap["min_category"] = report.heatmap.min_category;
  heatmap["max_category"] = report.heatmap.max_category;
  heatmap["cells"] = report.heatmap.cells;
  heatmap["row_population"] = report.heatmap.row_population;
  heatmap["clamped_true"] = report.heatmap.clamped_true;
  heatmap["clamped_predicted"] = report.heatmap.clamped_predicted;
  doc["heatmap"] = std::move(heatmap);
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "run_id,n,mae_deg,std_dev_deg,category_accuracy,tolerant_accuracy\n";
  char line[256];
  for (const RunMetrics& metrics : report.runs) {
    std::snprintf(line, sizeof(line), "%s,%d,%.9g,%.9g,%.9g,%.9g\n", metrics.run_id.c_str(),
                  metrics.n, metrics.mae_deg, metrics.std_dev_deg, metrics.category_accuracy,
                  metrics.tolerant_accuracy);
    out << line;
  }
  int total_n = 0;
  for (const RunMetrics& metrics : report.runs) {
    total_n += metrics.n;
  }
  std::snprintf(line, sizeof(line), "mean,%d,%.9g,%.9g,%.9g,%.9g\n", total_n, report.mae_deg,
                report.std_dev_deg, report.category_accuracy, report.tolerant_accuracy);
  out << line;
  return out.str();
}

std::string heatmap_to_text(const Heatmap& heatmap) {
  std::ostringstream out;
  const int n = heatmap.categories();
  out << "true\\pred";
  for (int col = 0; col < n; ++col) {
    char cell[16];
    std::snprintf(cell, sizeof(cell), "%7d", heatmap.min_category + col);
    out << cell;
  }
  out << '\n';
  for (int row = 0; row < n; ++row) {
    char label[16];
    std::snprintf(label, sizeof(label), "%9d", heatmap.min_category + row);
    out << label;
    for (int col = 0; col < n; ++col) {
      char cell[16];
      std::snprintf(cell, sizeof(cell), "%7.1f", heatmap.cells[static_cast<std::size_t>(row) * n + col]);
      out << cell;
    }
    out << "  (n=" << heatmap.row_population[row] << ")\n";
  }
  if (heatmap.clamped_true > 0 || heatmap.clamped_predicted > 0) {
    out << "clamped: true=" << heatmap.clamped_true << " predicted=" << heatmap.clamped_predicted
        << '\n';
  }
  return out.str();
}

}  // namespace miniresnet
