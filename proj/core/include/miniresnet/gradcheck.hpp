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

#include <cstdint>
#include <functional>
#include <vector>

#include "miniresnet/tape.hpp"
#include "miniresnet/tensor.hpp"

namespace miniresnet {

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;  // scalar parameters compared
};

/// Compares analytic gradients against central finite differences.
///
/// `forward` must rebuild the scalar loss from the current parameter values;
/// it records on the given tape, or runs untracked when the tape is null.
/// Each listed parameter is marked requires_grad, one analytic backward pass
/// populates the gradients, and then up to `samples_per_tensor` randomly
/// chosen entries per parameter (all entries when <= 0) are perturbed by
/// +-epsilon. The reported error is the maximum over checked entries of
///   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
/// with the numeric quotient accumulated in double.
template <typename T>
GradCheckResult finite_difference_check(const std::function<Tensor<T>(Tape<T>*)>& forward,
                                        const std::vector<Tensor<T>>& parameters, T epsilon,
                                        int samples_per_tensor = 0, std::uint64_t seed = 0);

}  // namespace miniresnet
