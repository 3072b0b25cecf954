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

#include "miniresnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>

namespace miniresnet {

template <typename T>
GradCheckResult finite_difference_check(const std::function<Tensor<T>(Tape<T>*)>& forward,
                                        const std::vector<Tensor<T>>& parameters, T epsilon,
                                        int samples_per_tensor, std::uint64_t seed) {
  std::vector<Tensor<T>> params = parameters;  // shallow handles
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }

  Tape<T> tape;
  Tensor<T> loss = forward(&tape);
  tape.backward(loss);

  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (auto& p : params) {
    std::vector<std::size_t> indices(p.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (samples_per_tensor > 0 && indices.size() > static_cast<std::size_t>(samples_per_tensor)) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(static_cast<std::size_t>(samples_per_tensor));
    }
    auto values = p.mutable_values();
    const auto analytic = p.grad();
    for (std::size_t i : indices) {
      const T saved = values[i];
      values[i] = saved + epsilon;
      const double plus = static_cast<double>(forward(nullptr).values()[0]);
      values[i] = saved - epsilon;
      const double minus = static_cast<double>(forward(nullptr).values()[0]);
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * static_cast<double>(epsilon));
      const double a = analytic.empty() ? 0.0 : static_cast<double>(analytic[i]);
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.checked;
    }
  }
  return result;
}

template GradCheckResult finite_difference_check(
    const std::function<Tensor<float>(Tape<float>*)>&, const std::vector<Tensor<float>>&, float,
    int, std::uint64_t);
template GradCheckResult finite_difference_check(
    const std::function<Tensor<double>(Tape<double>*)>&, const std::vector<Tensor<double>>&,
    double, int, std::uint64_t);

}  // namespace miniresnet
