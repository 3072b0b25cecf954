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

#include <algorithm>
#include <string>
#include <vector>

#include "miniresnet/bench.hpp"
#include "miniresnet/errors.hpp"
#include "miniresnet/model.hpp"
#include "miniresnet/ops.hpp"

using namespace miniresnet;

namespace {

Network<float> bench_net() {
  ModelConfig config;
  config.name = "bench-tiny";
  config.input_size = 16;
  config.stacks = {1};
  config.stack_widths = {8};
  config.validate();
  Network<float> net(config);
  init_weights(net, 5);
  return net;
}

}  // namespace

TEST_CASE("measure_fps validates its arguments") {
  Network<float> net = bench_net();
  CHECK_THROWS_AS(measure_fps(net, -1, 3), ConfigError);
  CHECK_THROWS_AS(measure_fps(net, 0, 0), ConfigError);
  CHECK_THROWS_AS(measure_fps(net, 0, 3, 0), ConfigError);
}

TEST_CASE("single-iteration run pins fps to the one latency") {
  Network<float> net = bench_net();
  const BenchmarkResult result = measure_fps(net, 0, 1);
  REQUIRE(result.latencies_ms.size() == 1);
  CHECK(result.median_latency_ms == result.latencies_ms[0]);
  CHECK(result.fps == 1000.0 / result.latencies_ms[0]);
  CHECK(result.fps > 0.0);
}

TEST_CASE("measurement records its configuration and excludes warmup") {
  Network<float> net = bench_net();
  const BenchmarkResult result = measure_fps(net, 2, 5);
  CHECK(result.model_name == "bench-tiny");
  CHECK(result.parameter_count == net.parameter_count());
  CHECK(result.input_size == 16);
  CHECK(result.warmup == 2);
  CHECK(result.iters == 5);
  CHECK(result.threads == 1);
  CHECK(result.untrained);
  REQUIRE(result.latencies_ms.size() == 5);  // warmup passes are not timed
  std::vector<double> sorted = result.latencies_ms;
  std::sort(sorted.begin(), sorted.end());
  CHECK(result.median_latency_ms == sorted[2]);
  CHECK(result.fps == 1000.0 / result.median_latency_ms);
}

TEST_CASE("thread count is applied, recorded and restored") {
  Network<float> net = bench_net();
  set_op_threads(1);
  const BenchmarkResult result = measure_fps(net, 0, 2, 2);
  CHECK(result.threads == 2);
  CHECK(result.hardware.find("op threads: 2") != std::string::npos);
  CHECK(result.hardware.rfind(hardware_descriptor(), 0) == 0);
  CHECK(op_threads() == 1);  // restored after the run
}

TEST_CASE("text table lists every model and the hardware line") {
  Network<float> net = bench_net();
  std::vector<BenchmarkResult> results = {measure_fps(net, 0, 1), measure_fps(net, 0, 1)};
  results[1].model_name = "bench-other";
  const std::string table = bench_table_text(results);
  CHECK(table.find("model") != std::string::npos);
  CHECK(table.find("fps") != std::string::npos);
  CHECK(table.find("bench-tiny") != std::string::npos);
  CHECK(table.find("bench-other") != std::string::npos);
  CHECK(table.find("hardware: ") != std::string::npos);
}

TEST_CASE("csv export carries the untrained flag and quoted hardware") {
  Network<float> net = bench_net();
  BenchmarkResult untrained = measure_fps(net, 0, 1);
  BenchmarkResult trained = untrained;
  trained.untrained = false;
  const std::string csv = bench_csv({untrained, trained});
  CHECK(csv.rfind("model,parameter_count,input_size,warmup,iters,threads,median_latency_ms,fps,"
                  "untrained,hardware\n",
                  0) == 0);
  CHECK(csv.find(",1,\"") != std::string::npos);  // untrained run
  CHECK(csv.find(",0,\"") != std::string::npos);  // trained run
  CHECK(csv.find("bench-tiny,") != std::string::npos);
  // Exactly two data rows.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
