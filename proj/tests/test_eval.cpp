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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "miniresnet/errors.hpp"
#include "miniresnet/evaluation.hpp"
#include "miniresnet/predictions.hpp"
#include "miniresnet/svg.hpp"
#include "miniresnet/training.hpp"
#include "support/reference_ops.hpp"
#include "support/test_util.hpp"

using namespace miniresnet;
using testutil::TempDir;

namespace {

PredictionSet make_set(std::vector<double> predicted, std::vector<double> truth,
                       const std::string& run_id = "t") {
  PredictionSet set;
  set.angle = "yaw";
  set.run_id = run_id;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    set.sample_index.push_back(static_cast<int>(i));
  }
  set.predicted_deg = std::move(predicted);
  set.true_deg = std::move(truth);
  return set;
}

}  // namespace

TEST_CASE("bin boundaries follow left-open right-closed intervals") {
  CHECK(bin_category(0.0) == 0);
  CHECK(bin_category(7.5) == 0);      // right edge belongs to the bin
  CHECK(bin_category(7.5001) == 1);   // just past the edge
  CHECK(bin_category(-7.5) == -1);    // left edge belongs to the bin below
  CHECK(bin_category(-7.4999) == 0);
  CHECK(bin_category(100.0) == 7);    // inside (97.5, 112.5]
  CHECK(bin_category(22.5) == 1);
  CHECK(bin_category(-22.5) == -2);
  for (double a = -110.0; a <= 110.0; a += 0.37) {
    CHECK(bin_category(a) == refops::naive_bin(a));
  }
}

TEST_CASE("mae examples") {
  CHECK(mae(make_set({3, -4, 5}, {3, -4, 5})) == 0.0);
  CHECK(mae(make_set({10, -10}, {0, 0})) == 10.0);
  CHECK_THROWS_AS(mae(make_set({}, {})), ContractError);
}

TEST_CASE("absolute-error standard deviation is the population form") {
  CHECK(abs_error_std(make_set({4, -4}, {0, 0})) == 0.0);  // equal errors
  CHECK(abs_error_std(make_set({0, 10}, {0, 0})) == 5.0);  // errors {0, 10}
  CHECK_THROWS_AS(abs_error_std(make_set({1}, {0})), ContractError);
}

TEST_CASE("category accuracies and their examples") {
  CHECK(category_accuracy(make_set({3, -4}, {3, -4})) == 1.0);
  CHECK(category_accuracy(make_set({8}, {0})) == 0.0);  // bins 1 vs 0
  CHECK(category_accuracy(make_set({7}, {0})) == 1.0);  // both bin 0
  CHECK(tolerant_accuracy(make_set({8}, {0})) == 1.0);  // adjacent bin accepted
  CHECK(tolerant_accuracy(make_set({31}, {0})) == 0.0);  // bins 2 vs 0
}

TEST_CASE("tolerant accuracy dominates strict accuracy") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> angle(-120.0, 120.0);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<double> p, t;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      p.push_back(angle(rng));
      t.push_back(angle(rng));
    }
    const PredictionSet set = make_set(p, t);
    CHECK(tolerant_accuracy(set) >= category_accuracy(set));
  }
}

TEST_CASE("metrics agree with the naive oracles on random sets") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> angle(-110.0, 110.0);
  for (int iter = 0; iter < 200; ++iter) {
    const int n = 2 + static_cast<int>(rng() % 50);
    std::vector<double> p, t;
    for (int i = 0; i < n; ++i) {
      p.push_back(angle(rng));
      t.push_back(angle(rng));
    }
    const PredictionSet set = make_set(p, t);
    CHECK(std::abs(mae(set) - refops::naive_mae(p, t)) < 1e-9);
    CHECK(std::abs(abs_error_std(set) - refops::naive_abs_error_std(p, t)) < 1e-9);
    CHECK(std::abs(category_accuracy(set) - refops::naive_category_accuracy(p, t)) < 1e-9);
    CHECK(std::abs(tolerant_accuracy(set) - refops::naive_tolerant_accuracy(p, t)) < 1e-9);
    const Heatmap map = confusion_heatmap(set);
    const std::vector<double> want = refops::naive_heatmap(p, t, -7, 7);
    REQUIRE(map.cells.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(std::abs(map.cells[i] - want[i]) < 1e-9);
    }
  }
}

TEST_CASE("heatmap structure, normalization and clamping") {
  SUBCASE("perfect predictions produce a 100-diagonal") {
    std::vector<double> angles;
    for (int k = -7; k <= 7; ++k) {
      angles.push_back(15.0 * k);
    }
    const Heatmap map = confusion_heatmap(make_set(angles, angles));
    for (int t = -7; t <= 7; ++t) {
      for (int p = -7; p <= 7; ++p) {
        CHECK(map.at(t, p) == (t == p ? 100.0 : 0.0));
      }
    }
    CHECK(map.clamped_true == 0);
    CHECK(map.clamped_predicted == 0);
  }
  SUBCASE("single off-diagonal sample") {
    const Heatmap map = confusion_heatmap(make_set({16.0}, {0.0}));
    CHECK(map.at(0, 1) == 100.0);
    CHECK(map.at(0, 0) == 0.0);
    CHECK(map.row_population[7] == 1);  // row of category 0
  }
  SUBCASE("populated rows sum to 100 within 1e-9") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> angle(-120.0, 120.0);
    std::vector<double> p, t;
    for (int i = 0; i < 500; ++i) {
      p.push_back(angle(rng));
      t.push_back(angle(rng));
    }
    const Heatmap map = confusion_heatmap(make_set(p, t));
    const int n = map.categories();
    for (int row = 0; row < n; ++row) {
      if (map.row_population[row] == 0) {
        continue;
      }
      double sum = 0.0;
      for (int col = 0; col < n; ++col) {
        sum += map.cells[static_cast<std::size_t>(row) * n + col];
      }
      CHECK(std::abs(sum - 100.0) < 1e-9);
    }
  }
  SUBCASE("out-of-range categories clamp to the outermost bins and are counted") {
    const Heatmap map = confusion_heatmap(make_set({130.0, -130.0}, {130.0, 0.0}));
    CHECK(map.clamped_true == 1);       // 130 true
    CHECK(map.clamped_predicted == 2);  // 130 and -130 predicted
    CHECK(map.at(7, 7) == 100.0);
    CHECK(map.at(0, -7) == 100.0);
  }
  SUBCASE("narrow custom ranges work") {
    const Heatmap map = confusion_heatmap(make_set({0.0, 16.0}, {0.0, 16.0}), -2, 2);
    CHECK(map.categories() == 5);
    CHECK(map.at(0, 0) == 100.0);
    CHECK(map.at(1, 1) == 100.0);
  }
}

TEST_CASE("evaluate and aggregate_runs") {
  const EvaluationReport single = evaluate(make_set({4, 8}, {0, 0}, "fold0"));
  CHECK(single.angle == "yaw");
  CHECK(single.mae_deg == 6.0);
  CHECK(single.runs.size() == 1);
  CHECK(single.runs[0].run_id == "fold0");
  CHECK(single.runs[0].n == 2);

  // A single report aggregates to itself.
  const EvaluationReport self = aggregate_runs({single});
  CHECK(self.mae_deg == single.mae_deg);
  CHECK(self.category_accuracy == single.category_accuracy);

  // Two runs with MAE 4 and 6 average to 5, and aggregation is order-free.
  const EvaluationReport a = evaluate(make_set({4.0}, {0.0}, "fold0"));
  const EvaluationReport b = evaluate(make_set({6.0}, {0.0}, "fold1"));
  CHECK(a.mae_deg == 4.0);
  CHECK(b.mae_deg == 6.0);
  const EvaluationReport ab = aggregate_runs({a, b});
  const EvaluationReport ba = aggregate_runs({b, a});
  CHECK(ab.mae_deg == 5.0);
  CHECK(ba.mae_deg == 5.0);
  CHECK(ab.runs.size() == 2);
  CHECK(ab.heatmap.row_population[7] == 2);  // pooled populations

  CHECK_THROWS_AS(aggregate_runs({}), ContractError);
  EvaluationReport pitch = a;
  pitch.angle = "pitch";
  CHECK_THROWS_AS(aggregate_runs({a, pitch}), ContractError);
}

TEST_CASE("reports serialize to JSON and CSV") {
  const EvaluationReport report =
      aggregate_runs({evaluate(make_set({4.0, 2.0}, {0.0, 1.0}, "fold0")),
                      evaluate(make_set({6.0, -3.0}, {0.0, -1.0}, "fold1"))});
  const std::string json_text = report_to_json(report);
  const nlohmann::json doc = nlohmann::json::parse(json_text);
  CHECK(doc["format"] == "miniresnet-report");
  CHECK(doc["angle"] == "yaw");
  CHECK(doc["runs"].size() == 2);
  CHECK(doc["heatmap"]["min_category"] == -7);
  CHECK(std::abs(doc["mae_deg"].get<double>() - report.mae_deg) < 1e-12);

  const std::string csv = report_to_csv(report);
  CHECK(csv.rfind("run_id,n,mae_deg,std_dev_deg,category_accuracy,tolerant_accuracy\n", 0) == 0);
  CHECK(csv.find("fold0,") != std::string::npos);
  CHECK(csv.find("fold1,") != std::string::npos);
  CHECK(csv.find("mean,") != std::string::npos);

  const std::string text = heatmap_to_text(report.heatmap);
  CHECK(text.find("true\\pred") != std::string::npos);
  CHECK(text.find("(n=") != std::string::npos);
}

TEST_CASE("prediction sets round-trip through JSON files") {
  TempDir dir;
  PredictionSet set = make_set({1.25, -33.75, 99.5}, {0.5, -30.0, 97.25}, "fold2");
  const std::string path = dir.str("p.json");
  save_prediction_set(path, set);
  const PredictionSet back = load_prediction_set(path);
  CHECK(back.angle == "yaw");
  CHECK(back.run_id == "fold2");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.predicted_deg[i] == set.predicted_deg[i]);  // exact double round-trip
    CHECK(back.true_deg[i] == set.true_deg[i]);
    CHECK(back.sample_index[i] == set.sample_index[i]);
  }

  testutil::write_file(path, "{\"format\":\"miniresnet-predictions\"}");
  CHECK_THROWS_AS(load_prediction_set(path), FormatError);
  PredictionSet ragged = set;
  ragged.true_deg.pop_back();
  CHECK_THROWS_AS(save_prediction_set(dir.str("bad.json"), ragged), ContractError);
}

TEST_CASE("svg renderers emit deterministic well-formed documents") {
  std::vector<EpochRecord> history;
  for (int e = 0; e < 10; ++e) {
    EpochRecord record;
    record.epoch = e;
    record.mean_loss = 0.5 / (1.0 + e);
    record.lr = 0.1;
    record.seconds = 0.01;
    history.push_back(record);
  }
  const std::vector<std::pair<std::string, std::vector<EpochRecord>>> curves = {
      {"fold0", history}, {"fold1", history}};
  const std::string svg = loss_curves_svg(curves, "training loss");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("fold1") != std::string::npos);
  CHECK(svg == loss_curves_svg(curves, "training loss"));

  const Heatmap map = confusion_heatmap(make_set({0.0, 15.0}, {0.0, 15.0}));
  const std::string hm = heatmap_svg(map, "yaw confusion");
  CHECK(hm.rfind("<svg", 0) == 0);
  CHECK(hm.find("</svg>") != std::string::npos);
  CHECK(hm.find("yaw confusion") != std::string::npos);
  CHECK(hm.find("predicted") != std::string::npos);
  CHECK(hm == heatmap_svg(map, "yaw confusion"));
}
