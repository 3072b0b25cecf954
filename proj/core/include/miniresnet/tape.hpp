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

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "miniresnet/errors.hpp"
#include "miniresnet/tensor.hpp"

namespace miniresnet {

/// Records one backward rule per executed forward operation, in execution
/// order. Forward execution order is a topological order of the graph, so
/// replaying the rules in reverse propagates gradients correctly and visits
/// each operation exactly once. A tape is single-writer and single-use;
/// independent tapes may run on different threads.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::string name, std::function<void()> backward) {
    steps_.push_back({std::move(name), std::move(backward)});
  }

  std::size_t size() const { return steps_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and replays the recorded rules in reverse,
  /// accumulating into the gradient buffers of every tensor the rules
  /// captured. Leaves never reached by the replay keep all-zero gradients.
  void backward(Tensor<T> loss) {
    if (!loss.defined() || loss.size() != 1) {
      throw ContractError("backward requires a scalar loss, got shape " +
                          (loss.defined() ? loss.shape().str() : std::string("<empty>")));
    }
    if (consumed_) {
      throw ContractError("tape already replayed; gradients would double-accumulate");
    }
    consumed_ = true;
    loss.mutable_grad()[0] = T(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) it->fn();
  }

 private:
  struct Step {
    std::string name;
    std::function<void()> fn;
  };

  std::vector<Step> steps_;
  bool consumed_ = false;
};

using Tapef = Tape<float>;
using Taped = Tape<double>;

}  // namespace miniresnet
