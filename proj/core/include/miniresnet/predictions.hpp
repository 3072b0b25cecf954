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

namespace miniresnet {

/// Held-out predictions of one run, in degrees. `sample_index` back-references
/// the evaluated dataset (position in the prepared dataset), so protocol
/// coverage is auditable.
struct PredictionSet {
  std::string angle;   // "yaw" | "pitch" | "roll"
  std::string run_id;  // e.g. "fold0", "seed3"
  std::vector<int> sample_index;
  std::vector<double> true_deg;
  std::vector<double> predicted_deg;

  std::size_t size() const { return true_deg.size(); }
};

/// JSON on disk; doubles round-trip exactly (shortest-representation dump).
void save_prediction_set(const std::string& path, const PredictionSet& set);
PredictionSet load_prediction_set(const std::string& path);

}  // namespace miniresnet
