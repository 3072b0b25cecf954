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

#include "miniresnet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "miniresnet/errors.hpp"
#include "miniresnet/ops.hpp"

namespace miniresnet {

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) {
    return 0.0;
  }
  if (n % 2 == 1) {
    return values[n / 2];
  }
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

std::string hardware_descriptor() {
  std::string model = "unknown CPU";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    const std::string key = "model name";
    if (line.compare(0, key.size(), key) == 0) {
      const std::size_t colon = line.find(':');
      if (colon != std::string::npos) {
        std::size_t begin = colon + 1;
        while (begin < line.size() && line[begin] == ' ') {
          ++begin;
        }
        model = line.substr(begin);
      }
      break;
    }
  }
  std::ostringstream out;
  out << model << " (" << std::thread::hardware_concurrency() << " threads)";
  return out.str();
}

BenchmarkResult measure_fps(Network<float>& network, int warmup, int iters, int threads) {
  if (warmup < 0 || iters < 1) {
    throw ConfigError("benchmark needs warmup >= 0 and iters >= 1");
  }
  if (threads < 1) {
    throw ConfigError("benchmark needs threads >= 1");
  }
  const ModelConfig& config = network.config();
  Tensor<float> input =
      Tensor<float>::zeros({1, config.input_channels, config.input_size, config.input_size});
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (float& v : input.mutable_values()) {
    v = dist(rng);
  }

  const int previous_threads = op_threads();
  set_op_threads(threads);
  BenchmarkResult result;
  try {
    for (int i = 0; i < warmup; ++i) {
      network.forward(input, BnMode::kInfer, nullptr);
    }
    result.latencies_ms.reserve(iters);
    for (int i = 0; i < iters; ++i) {
      const auto start = std::chrono::steady_clock::now();
      Tensor<float> out = network.forward(input, BnMode::kInfer, nullptr);
      const auto stop = std::chrono::steady_clock::now();
      // Touch the output so the pass cannot be elided.
      volatile float sink = out.values()[0];
      (void)sink;
      result.latencies_ms.push_back(
          std::chrono::duration<double, std::milli>(stop - start).count());
    }
  } catch (...) {
    set_op_threads(previous_threads);
    throw;
  }
  set_op_threads(previous_threads);

  result.model_name = config.name;
  result.parameter_count = network.parameter_count();
  result.input_size = config.input_size;
  result.warmup = warmup;
  result.iters = iters;
  result.threads = threads;
  result.median_latency_ms = median(result.latencies_ms);
  result.fps = result.median_latency_ms > 0.0 ? 1000.0 / result.median_latency_ms : 0.0;
  result.hardware = hardware_descriptor() + ", op threads: " + std::to_string(threads);
  return result;
}

std::string bench_table_text(const std::vector<BenchmarkResult>& results) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %12s %6s %8s %12s %10s\n", "model", "params", "input",
                "threads", "latency_ms", "fps");
  out << line;
  for (const BenchmarkResult& result : results) {
    std::snprintf(line, sizeof(line), "%-14s %12lld %6d %8d %12.3f %10.2f\n",
                  result.model_name.c_str(), static_cast<long long>(result.parameter_count),
                  result.input_size, result.threads, result.median_latency_ms, result.fps);
    out << line;
  }
  if (!results.empty()) {
    out << "hardware: " << results.front().hardware << '\n';
  }
  return out.str();
}

std::string bench_csv(const std::vector<BenchmarkResult>& results) {
  std::ostringstream out;
  out << "model,parameter_count,input_size,warmup,iters,threads,median_latency_ms,fps,untrained,"
         "hardware\n";
  for (const BenchmarkResult& result : results) {
    char line[512];
    std::snprintf(line, sizeof(line), "%s,%lld,%d,%d,%d,%d,%.6f,%.3f,%d,\"%s\"\n",
                  result.model_name.c_str(), static_cast<long long>(result.parameter_count),
                  result.input_size, result.warmup, result.iters, result.threads,
                  result.median_latency_ms, result.fps, result.untrained ? 1 : 0,
                  result.hardware.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace miniresnet
