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

#pragma once

#include <string>
#include <vector>

#include "miniresnet/predictions.hpp"

namespace miniresnet {

/// 15-degree-wide angle category of a degree value. Intervals are left-open,
/// right-closed: category k covers (15k - 7.5, 15k + 7.5], so 7.5 -> 0 and
/// -7.5 -> -1.
int bin_category(double degrees);

/// Mean absolute prediction error in degrees; ContractError on empty sets.
double mae(const PredictionSet& set);

/// Population standard deviation of the absolute errors; needs n >= 2.
double abs_error_std(const PredictionSet& set);

/// Fraction of predictions in the true value's category.
double category_accuracy(const PredictionSet& set);

/// Fraction within one category of the truth (a 45-degree-wide acceptance
/// band); always >= category_accuracy.
double tolerant_accuracy(const PredictionSet& set);

/// Row-normalized confusion matrix over categories min_category..max_category.
/// cell(t, p) = 100 * count(true category t, predicted category p) /
/// count(true category t); rows with no samples stay zero and are reported
/// via row_population. Categories outside the range are clamped to the
/// outermost rows/columns and counted.
struct Heatmap {
  int min_category = -7;
  int max_category = 7;
  std::vector<double> cells;  // (max-min+1)^2, row-major, true x predicted
  std::vector<int> row_population;
  int clamped_true = 0;
  int clamped_predicted = 0;

  int categories() const { return max_category - min_category + 1; }
  double at(int true_cat, int predicted_cat) const;
};

Heatmap confusion_heatmap(const PredictionSet& set, int min_category = -7, int max_category = 7);

struct RunMetrics {
  std::string run_id;
  int n = 0;
  double mae_deg = 0.0;
  double std_dev_deg = 0.0;
  double category_accuracy = 0.0;
  double tolerant_accuracy = 0.0;
};

/// Metrics of one or more runs over a single angle; aggregate values are
/// unweighted means across runs, the heatmap the element-wise mean.
struct EvaluationReport {
  std::string angle;
  double mae_deg = 0.0;
  double std_dev_deg = 0.0;
  double category_accuracy = 0.0;
  double tolerant_accuracy = 0.0;
  Heatmap heatmap;
  std::vector<RunMetrics> runs;
};

/// Report of a single run.
EvaluationReport evaluate(const PredictionSet& set);

/// Unweighted cross-run mean; ContractError when empty or angles are mixed.
EvaluationReport aggregate_runs(const std::vector<EvaluationReport>& reports);

std::string report_to_json(const EvaluationReport& report);
std::string report_to_csv(const EvaluationReport& report);
std::string heatmap_to_text(const Heatmap& heatmap);

}  // namespace miniresnet
