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

// Microbenchmarks for the hot paths: the convolution kernel, one residual
// block, and a full single-image forward pass.

#include <benchmark/benchmark.h>

#include <random>

#include "miniresnet/model.hpp"
#include "miniresnet/ops.hpp"
#include "miniresnet/tensor.hpp"

using namespace miniresnet;

namespace {

Tensor<float> random_tensor(const Shape& shape, std::uint64_t seed) {
  Tensor<float> t = Tensor<float>::zeros(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (float& v : t.mutable_values()) {
    v = dist(rng);
  }
  return t;
}

void BM_conv2d(benchmark::State& state) {
  const int channels = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const Tensor<float> input = random_tensor({1, channels, side, side}, 1);
  const Tensor<float> kernel = random_tensor({channels, channels, 3, 3}, 2);
  for (auto _ : state) {
    Tensor<float> out = conv2d(input, kernel, 1, Padding::kSame);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_residual_block(benchmark::State& state) {
  ModelConfig config;
  config.name = "block-bench";
  config.input_size = 32;
  config.stacks = {1};
  config.stack_widths = {static_cast<int>(state.range(0))};
  config.validate();
  Network<float> net(config);
  init_weights(net, 3);
  const int side = static_cast<int>(state.range(1));
  const Tensor<float> x = random_tensor({1, net.stacks()[0][0].in_channels, side, side}, 4);
  for (auto _ : state) {
    Tensor<float> out = net.block_forward(0, 0, x, BnMode::kInfer);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_resnet18_64_forward(benchmark::State& state) {
  Network<float> net(ModelConfig::preset("resnet18-64"));
  init_weights(net, 5);
  const Tensor<float> input = random_tensor({1, 1, 64, 64}, 6);
  for (auto _ : state) {
    Tensor<float> out = net.forward(input, BnMode::kInfer);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(BM_conv2d)->Args({16, 32})->Args({64, 16})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_residual_block)->Args({16, 32})->Args({64, 16})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_resnet18_64_forward)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
