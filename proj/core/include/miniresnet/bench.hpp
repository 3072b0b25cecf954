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
#include <string>
#include <vector>

#include "miniresnet/model.hpp"

namespace miniresnet {

struct BenchmarkResult {
  std::string model_name;
  std::int64_t parameter_count = 0;
  int input_size = 0;
  int warmup = 0;
  int iters = 0;
  int threads = 1;
  std::vector<double> latencies_ms;  // one wall-clock time per measured pass
  double median_latency_ms = 0.0;
  double fps = 0.0;  // 1000 / median_latency_ms
  std::string hardware;
  bool untrained = true;  // randomly initialized weights, not a trained model
};

/// CPU model string and logical core count, e.g. "... @ 2.20GHz (8 threads)".
std::string hardware_descriptor();

/// Times single-image inference (batch 1, inference-mode statistics) over a
/// fixed random input. Runs `warmup` untimed passes, then `iters` timed ones;
/// throughput is 1000 / median latency. `threads` sets the operator thread
/// count for the duration of the measurement.
BenchmarkResult measure_fps(Network<float>& network, int warmup, int iters, int threads = 1);

std::string bench_table_text(const std::vector<BenchmarkResult>& results);
std::string bench_csv(const std::vector<BenchmarkResult>& results);

}  // namespace miniresnet
