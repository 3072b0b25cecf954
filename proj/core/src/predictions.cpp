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

#include "miniresnet/predictions.hpp"

#include <fstream>

#include <json.hpp>

#include "miniresnet/errors.hpp"

namespace miniresnet {

using json = nlohmann::json;

void save_prediction_set(const std::string& path, const PredictionSet& set) {
  if (set.true_deg.size() != set.predicted_deg.size() ||
      (!set.sample_index.empty() && set.sample_index.size() != set.true_deg.size())) {
    throw ContractError("prediction set has mismatched column lengths");
  }
  json doc;
  doc["format"] = "miniresnet-predictions";
  doc["version"] = 1;
  doc["angle"] = set.angle;
  doc["run_id"] = set.run_id;
  doc["sample_index"] = set.sample_index;
  doc["true_deg"] = set.true_deg;
  doc["predicted_deg"] = set.predicted_deg;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << doc.dump(2) << '\n';
  out.close();
  if (!out) throw IoError("failed to write: " + path);
}

PredictionSet load_prediction_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prediction set: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid prediction set " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "miniresnet-predictions" || doc.value("version", 0) != 1) {
    throw FormatError("not a prediction-set file: " + path);
  }
  PredictionSet set;
  try {
    set.angle = doc.value("angle", "");
    set.run_id = doc.value("run_id", "");
    set.sample_index = doc.value("sample_index", std::vector<int>{});
    set.true_deg = doc.at("true_deg").get<std::vector<double>>();
    set.predicted_deg = doc.at("predicted_deg").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw FormatError("malformed prediction set " + path + ": " + e.what());
  }
  if (set.true_deg.size() != set.predicted_deg.size() ||
      (!set.sample_index.empty() && set.sample_index.size() != set.true_deg.size())) {
    throw FormatError("prediction set has mismatched column lengths: " + path);
  }
  return set;
}

}  // namespace miniresnet
