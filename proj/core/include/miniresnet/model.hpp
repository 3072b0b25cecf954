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
#include <utility>
#include <vector>

#include "miniresnet/ops.hpp"
#include "miniresnet/tape.hpp"
#include "miniresnet/tensor.hpp"

namespace miniresnet {

struct StemConfig {
  int kernel = 7;
  int stride = 1;
  bool pool = true;  // 3x3 stride-2 max pool after the stem convolution
};

/// Declarative architecture description. `stacks` lists residual-block counts
/// per stack and `stack_widths` the channel count of each; a zero block count
/// truncates the list (a three-stack network is written [2,3,3,0]).
struct ModelConfig {
  std::string name = "custom";
  int input_size = 112;
  int input_channels = 1;
  std::vector<int> stacks;
  std::vector<int> stack_widths;
  StemConfig stem;
  int head_outputs = 1;
  float bn_epsilon = 1e-5f;
  float bn_momentum = 0.99f;

  /// Stack plan up to (excluding) the first zero entry.
  std::vector<int> effective_stacks() const;
  std::vector<int> effective_widths() const;

  /// Same topology with every stack width divided by `width_divisor`
  /// (minimum 8); the reduced preset used for laptop-scale runs.
  ModelConfig desk_scaled(int width_divisor = 8) const;

  /// Throws ConfigError on inconsistent plans or spatial underflow.
  void validate() const;

  static ModelConfig resnet34_112();
  static ModelConfig resnet18_112();
  static ModelConfig resnet18_64();
  /// Preset by name ("resnet34-112", "resnet18-112", "resnet18-64");
  /// ConfigError for unknown names.
  static ModelConfig preset(const std::string& name);

  static ModelConfig from_json_string(const std::string& text);
  static ModelConfig from_json_file(const std::string& path);
  std::string to_json_string() const;
};

/// A learnable tensor with its serialization name; `decay` marks parameters
/// subject to L2 weight decay (convolution kernels and dense weights only —
/// never batch-norm scales/shifts or biases).
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T> tensor;
  bool decay = false;
};

/// Pre-activated residual block: norm -> tanh -> conv, twice; the shortcut is
/// the identity, or a 1x1 projection convolution (applied to the first
/// normalized activation) when width or resolution changes.
template <typename T>
struct ResidualBlockVars {
  Tensor<T> bn1_gamma, bn1_beta;
  BnStats<T> bn1_stats;
  Tensor<T> conv1;  // [out, in, 3, 3], stride = block stride
  Tensor<T> bn2_gamma, bn2_beta;
  BnStats<T> bn2_stats;
  Tensor<T> conv2;  // [out, out, 3, 3], stride 1
  Tensor<T> proj;   // [out, in, 1, 1]; undefined for identity shortcuts
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;

  bool identity() const { return !proj.defined(); }
};

struct LayerInfo {
  std::string name;
  std::string kind;
  std::string output;  // per-sample output extents
  std::int64_t params = 0;
};

/// A realized network: stem convolution (+ optional pool), residual stacks,
/// global average pool, dense head, tanh output. Each per-sample output is a
/// single value strictly inside (-1, 1). Movable, not copyable (parameters
/// are shared handles).
template <typename T>
class Network {
 public:
  explicit Network(const ModelConfig& config);
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  const ModelConfig& config() const { return config_; }

  /// Learnable parameters in serialization order.
  std::vector<ParamRef<T>>& parameters() { return params_; }
  const std::vector<ParamRef<T>>& parameters() const { return params_; }

  /// Learnable parameters plus batch-norm running statistics, the full
  /// serializable state.
  std::vector<std::pair<std::string, Tensor<T>>> state() const;

  /// Number of learnable scalars (running statistics excluded).
  std::int64_t parameter_count() const;

  /// Number of weighted layers: stem conv + two main-path convs per block +
  /// dense head. Projection convolutions are not counted.
  int weighted_layer_count() const;

  const std::vector<std::vector<ResidualBlockVars<T>>>& stacks() const { return stacks_; }

  /// Full forward pass over an NCHW batch of config input size.
  Tensor<T> forward(const Tensor<T>& batch, BnMode mode, Tape<T>* tape = nullptr);

  /// One residual block: shortcut(x) + residual(x).
  Tensor<T> block_forward(int stack, int block, const Tensor<T>& x, BnMode mode,
                          Tape<T>* tape = nullptr);

  /// The residual path F(x) of one block, without the shortcut.
  Tensor<T> block_residual(int stack, int block, const Tensor<T>& x, BnMode mode);

  std::vector<LayerInfo> layers() const;
  std::string describe() const;

  void zero_grad();
  void set_parameters_trainable(bool on);

 private:
  ModelConfig config_;
  Tensor<T> stem_kernel_;
  std::vector<std::vector<ResidualBlockVars<T>>> stacks_;
  Tensor<T> head_weight_;
  Tensor<T> head_bias_;
  std::vector<ParamRef<T>> params_;
};

/// Variance-scaling initialization: conv/dense weights from a truncated
/// normal with variance 2/fan_in, biases zero, batch-norm scale 1 / shift 0,
/// running statistics reset to mean 0 / variance 1. Deterministic per seed.
template <typename T>
void init_weights(Network<T>& network, std::uint64_t seed);

/// Weight files: tensor blob of state() plus a sidecar carrying the model
/// config, so a file is loadable without external configuration.
void save_weights(const Network<float>& network, const std::string& path);
Network<float> load_weights(const std::string& path);
/// Loads into an existing network; FormatError names the first missing,
/// extra, or shape-mismatched parameter.
void load_weights_into(Network<float>& network, const std::string& path);

using Networkf = Network<float>;
using Networkd = Network<double>;

}  // namespace miniresnet
