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

#include <utility>

#include "miniresnet/tape.hpp"
#include "miniresnet/tensor.hpp"

namespace miniresnet {

enum class Padding { kSame, kValid };

enum class BnMode { kTrain, kInfer };

/// Running batch-norm statistics, one value per channel. Train-mode forwards
/// update them in place with exponential momentum.
template <typename T>
struct BnStats {
  Tensor<T> mean;
  Tensor<T> variance;

  static BnStats unit(int channels) {
    return {Tensor<T>::zeros(Shape{channels}), Tensor<T>::full(Shape{channels}, T(1))};
  }
};

/// Worker threads conv2d may split its matrix product across. Default 1;
/// results are independent of the setting.
void set_op_threads(int threads);
int op_threads();

// Shape rules, pure functions of extents and op parameters.
// "same" pads by kernel-1 in total, the extra cell on the trailing side.
std::pair<int, int> same_padding_split(int kernel);
int conv_output_extent(int input, int kernel, int stride, int pad_total);
Shape conv2d_output_shape(const Shape& input, const Shape& kernel, int stride, Padding padding);
Shape max_pool_output_shape(const Shape& input, int window_h, int window_w, int stride, int padding);

/// 2-d cross-correlation of an NCHW batch with an [out_ch, in_ch, kh, kw]
/// kernel. With kSame padding and stride 1 the spatial size is preserved.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, int stride, Padding padding,
                 Tape<T>* tape = nullptr);

/// Per-channel batch normalization. Train mode normalizes with batch
/// statistics (batch >= 2) and updates `running`; infer mode is a
/// deterministic function of the running statistics.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BnStats<T>& running, BnMode mode, T epsilon, T momentum,
                     Tape<T>* tape = nullptr);

/// Elementwise tanh; outputs are clamped to stay strictly inside (-1, 1)
/// where the rounded math-library value would land exactly on +-1.
template <typename T>
Tensor<T> tanh_activation(const Tensor<T>& input, Tape<T>* tape = nullptr);

/// Max pooling with symmetric zero-padding cells excluded from the max.
template <typename T>
Tensor<T> max_pool(const Tensor<T>& input, int window_h, int window_w, int stride, int padding = 0,
                   Tape<T>* tape = nullptr);

/// [N,C,H,W] -> [N,C] spatial mean per channel.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input, Tape<T>* tape = nullptr);

/// Affine map of an [N,F] batch: out = input * weights^T + bias, with
/// weights [O,F] and bias [O].
template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                Tape<T>* tape = nullptr);

/// Elementwise sum of two same-shape tensors. Backward hands the incoming
/// gradient to both addends unchanged.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr);

/// Sum of all elements, as a [1] scalar.
template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& input, Tape<T>* tape = nullptr);

/// Mean squared error between two equal-length tensors, as a [1] scalar.
/// Gradient flows to `predictions` only.
template <typename T>
Tensor<T> mean_squared_error(const Tensor<T>& predictions, const Tensor<T>& targets,
                             Tape<T>* tape = nullptr);

}  // namespace miniresnet
