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
#include <utility>
#include <vector>

#include "miniresnet/evaluation.hpp"
#include "miniresnet/training.hpp"

namespace miniresnet {

/// One polyline per run of mean loss against epoch, log-scaled vertically.
/// Output is deterministic for identical inputs.
std::string loss_curves_svg(
    const std::vector<std::pair<std::string, std::vector<EpochRecord>>>& curves,
    const std::string& title = "training loss");

/// Row-normalized confusion matrix as a shaded grid; cell intensity follows
/// the percentage value.
std::string heatmap_svg(const Heatmap& heatmap, const std::string& title = "confusion");

}  // namespace miniresnet
