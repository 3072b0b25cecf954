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

#include "miniresnet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

namespace miniresnet {

namespace {

std::atomic<int> g_op_threads{1};

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const MatRM<T>>;
template <typename T>
using MutMap = Eigen::Map<MatRM<T>>;

void require(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

// Patch matrix in [C*KH*KW, OH*OW] layout; out-of-image cells are zero.
template <typename T>
void im2col(const T* src, int C, int H, int W, int KH, int KW, int stride, int pad_top,
            int pad_left, int OH, int OW, T* col) {
  for (int c = 0; c < C; ++c) {
    const T* plane = src + static_cast<std::ptrdiff_t>(c) * H * W;
    for (int kh = 0; kh < KH; ++kh) {
      for (int kw = 0; kw < KW; ++kw) {
        T* row = col + static_cast<std::ptrdiff_t>((c * KH + kh) * KW + kw) * OH * OW;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride - pad_top + kh;
          T* dst = row + static_cast<std::ptrdiff_t>(oh) * OW;
          if (ih < 0 || ih >= H) {
            std::fill(dst, dst + OW, T(0));
            continue;
          }
          const T* in_row = plane + static_cast<std::ptrdiff_t>(ih) * W;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * stride - pad_left + kw;
            dst[ow] = (iw >= 0 && iw < W) ? in_row[iw] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-accumulate of a patch matrix back onto the image.
template <typename T>
void col2im_accumulate(const T* col, int C, int H, int W, int KH, int KW, int stride, int pad_top,
                       int pad_left, int OH, int OW, T* dst) {
  for (int c = 0; c < C; ++c) {
    T* plane = dst + static_cast<std::ptrdiff_t>(c) * H * W;
    for (int kh = 0; kh < KH; ++kh) {
      for (int kw = 0; kw < KW; ++kw) {
        const T* row = col + static_cast<std::ptrdiff_t>((c * KH + kh) * KW + kw) * OH * OW;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride - pad_top + kh;
          if (ih < 0 || ih >= H) continue;
          T* out_row = plane + static_cast<std::ptrdiff_t>(ih) * W;
          const T* src_row = row + static_cast<std::ptrdiff_t>(oh) * OW;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * stride - pad_left + kw;
            if (iw >= 0 && iw < W) out_row[iw] += src_row[ow];
          }
        }
      }
    }
  }
}

// out [M, N] = weights [M, K] x col [K, N], optionally split over columns.
// Each output cell is produced by exactly one thread, so the result is
// bit-identical for every thread count.
template <typename T>
void forward_gemm(const T* weights, const T* col, T* out, int m, int k, int n) {
  const int threads = std::min(g_op_threads.load(), n);
  if (threads <= 1 || n < 64) {
    MutMap<T>(out, m, n).noalias() = ConstMap<T>(weights, m, k) * ConstMap<T>(col, k, n);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int c0 = t * chunk;
    const int c1 = std::min(n, c0 + chunk);
    if (c0 >= c1) break;
    pool.emplace_back([=]() {
      MutMap<T> out_m(out, m, n);
      out_m.middleCols(c0, c1 - c0).noalias() =
          ConstMap<T>(weights, m, k) * ConstMap<T>(col, k, n).middleCols(c0, c1 - c0);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

void set_op_threads(int threads) { g_op_threads.store(std::max(1, threads)); }

int op_threads() { return g_op_threads.load(); }

std::pair<int, int> same_padding_split(int kernel) {
  const int total = kernel - 1;
  return {total / 2, total - total / 2};
}

int conv_output_extent(int input, int kernel, int stride, int pad_total) {
  return (input + pad_total - kernel) / stride + 1;
}

Shape conv2d_output_shape(const Shape& input, const Shape& kernel, int stride, Padding padding) {
  require(input.rank() == 4, "conv2d input must be NCHW, got " + input.str());
  require(kernel.rank() == 4, "conv2d kernel must be [out_ch,in_ch,kh,kw], got " + kernel.str());
  require(input[1] == kernel[1], "conv2d channel mismatch: input " + input.str() + " vs kernel " +
                                     kernel.str());
  if (stride < 1) throw ConfigError("conv2d stride must be >= 1, got " + std::to_string(stride));
  const int pad_h = padding == Padding::kSame ? kernel[2] - 1 : 0;
  const int pad_w = padding == Padding::kSame ? kernel[3] - 1 : 0;
  const int oh = conv_output_extent(input[2], kernel[2], stride, pad_h);
  const int ow = conv_output_extent(input[3], kernel[3], stride, pad_w);
  require(oh >= 1 && ow >= 1,
          "conv2d output would be empty for input " + input.str() + ", kernel " + kernel.str());
  return Shape{input[0], kernel[0], oh, ow};
}

Shape max_pool_output_shape(const Shape& input, int window_h, int window_w, int stride,
                            int padding) {
  require(input.rank() == 4, "max_pool input must be NCHW, got " + input.str());
  if (stride < 1 || window_h < 1 || window_w < 1 || padding < 0) {
    throw ConfigError("max_pool window/stride must be positive, padding non-negative");
  }
  require(window_h <= input[2] + 2 * padding && window_w <= input[3] + 2 * padding,
          "max_pool window " + std::to_string(window_h) + "x" + std::to_string(window_w) +
              " larger than padded input " + input.str());
  const int oh = conv_output_extent(input[2], window_h, stride, 2 * padding);
  const int ow = conv_output_extent(input[3], window_w, stride, 2 * padding);
  return Shape{input[0], input[1], oh, ow};
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, int stride, Padding padding,
                 Tape<T>* tape) {
  const Shape out_shape = conv2d_output_shape(input.shape(), kernel.shape(), stride, padding);
  const int batch = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
            W = input.shape()[3];
  const int OC = kernel.shape()[0], KH = kernel.shape()[2], KW = kernel.shape()[3];
  const int OH = out_shape[2], OW = out_shape[3];
  const auto [pad_top, pad_bottom] =
      padding == Padding::kSame ? same_padding_split(KH) : std::pair<int, int>{0, 0};
  const auto [pad_left, pad_right] =
      padding == Padding::kSame ? same_padding_split(KW) : std::pair<int, int>{0, 0};
  (void)pad_bottom;
  (void)pad_right;

  Tensor<T> out = Tensor<T>::zeros(out_shape);
  const std::ptrdiff_t ckk = static_cast<std::ptrdiff_t>(C) * KH * KW;
  const std::ptrdiff_t ohw = static_cast<std::ptrdiff_t>(OH) * OW;
  std::vector<T> col(static_cast<std::size_t>(ckk * ohw));
  const T* in_ptr = input.values().data();
  T* out_ptr = out.mutable_values().data();
  for (int n = 0; n < batch; ++n) {
    im2col(in_ptr + static_cast<std::ptrdiff_t>(n) * C * H * W, C, H, W, KH, KW, stride, pad_top,
           pad_left, OH, OW, col.data());
    forward_gemm(kernel.values().data(), col.data(), out_ptr + n * OC * ohw, OC,
                 static_cast<int>(ckk), static_cast<int>(ohw));
  }

  if (tape && (input.requires_grad() || kernel.requires_grad())) {
    out.set_requires_grad(true);
    const int pt = pad_top, pl = pad_left;
    // By-value captures of const references stay const; take fresh handles.
    Tensor<T> input_h = input;
    Tensor<T> kernel_h = kernel;
    tape->record("conv2d", [input = input_h, kernel = kernel_h, out, stride, pt, pl]() mutable {
      if (!out.has_grad()) return;
      const int batch = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
                W = input.shape()[3];
      const int OC = kernel.shape()[0], KH = kernel.shape()[2], KW = kernel.shape()[3];
      const int OH = out.shape()[2], OW = out.shape()[3];
      const std::ptrdiff_t ckk = static_cast<std::ptrdiff_t>(C) * KH * KW;
      const std::ptrdiff_t ohw = static_cast<std::ptrdiff_t>(OH) * OW;
      const bool need_dw = kernel.requires_grad();
      const bool need_dx = input.requires_grad();
      const T* g_out = out.grad().data();
      const T* in_ptr = input.values().data();
      std::vector<T> col(static_cast<std::size_t>(ckk * ohw));
      std::vector<T> dcol(need_dx ? static_cast<std::size_t>(ckk * ohw) : 0);
      for (int n = 0; n < batch; ++n) {
        ConstMap<T> g_m(g_out + n * OC * ohw, OC, ohw);
        if (need_dw) {
          im2col(in_ptr + static_cast<std::ptrdiff_t>(n) * C * H * W, C, H, W, KH, KW, stride, pt,
                 pl, OH, OW, col.data());
          MutMap<T> dw_m(kernel.mutable_grad().data(), OC, ckk);
          dw_m.noalias() += g_m * ConstMap<T>(col.data(), ckk, ohw).transpose();
        }
        if (need_dx) {
          MutMap<T> dcol_m(dcol.data(), ckk, ohw);
          dcol_m.noalias() = ConstMap<T>(kernel.values().data(), OC, ckk).transpose() * g_m;
          col2im_accumulate(dcol.data(), C, H, W, KH, KW, stride, pt, pl, OH, OW,
                            input.mutable_grad().data() +
                                static_cast<std::ptrdiff_t>(n) * C * H * W);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BnStats<T>& running, BnMode mode, T epsilon, T momentum, Tape<T>* tape) {
  require(input.shape().rank() == 4, "batch_norm input must be NCHW, got " + input.shape().str());
  const int batch = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
            W = input.shape()[3];
  require(gamma.shape() == Shape{C} && beta.shape() == Shape{C},
          "batch_norm gamma/beta must have one entry per channel (" + std::to_string(C) + ")");
  require(running.mean.shape() == Shape{C} && running.variance.shape() == Shape{C},
          "batch_norm running statistics must have one entry per channel");
  if (mode == BnMode::kTrain && batch < 2) {
    throw DegenerateBatchError("batch_norm needs a batch of >= 2 samples in train mode, got " +
                               std::to_string(batch));
  }

  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(H) * W;
  const std::ptrdiff_t per_sample = static_cast<std::ptrdiff_t>(C) * plane;
  const double m = static_cast<double>(batch) * static_cast<double>(plane);
  const T* x = input.values().data();

  std::vector<double> mean(C), inv_std(C);
  if (mode == BnMode::kTrain) {
    std::vector<double> var(C);
    for (int c = 0; c < C; ++c) {
      double sum = 0.0, sum_sq = 0.0;
      for (int n = 0; n < batch; ++n) {
        const T* p = x + n * per_sample + c * plane;
        for (std::ptrdiff_t i = 0; i < plane; ++i) {
          const double v = static_cast<double>(p[i]);
          sum += v;
          sum_sq += v * v;
        }
      }
      mean[c] = sum / m;
      var[c] = std::max(0.0, sum_sq / m - mean[c] * mean[c]);
      inv_std[c] = 1.0 / std::sqrt(var[c] + static_cast<double>(epsilon));
    }
    auto r_mean = running.mean.mutable_values();
    auto r_var = running.variance.mutable_values();
    for (int c = 0; c < C; ++c) {
      r_mean[c] = momentum * r_mean[c] + (T(1) - momentum) * static_cast<T>(mean[c]);
      r_var[c] = momentum * r_var[c] + (T(1) - momentum) * static_cast<T>(var[c]);
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = static_cast<double>(running.mean.values()[c]);
      inv_std[c] =
          1.0 / std::sqrt(static_cast<double>(running.variance.values()[c]) +
                          static_cast<double>(epsilon));
    }
  }

  Tensor<T> out = Tensor<T>::zeros(input.shape());
  T* y = out.mutable_values().data();
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < C; ++c) {
      const double g = static_cast<double>(gamma.values()[c]);
      const double b = static_cast<double>(beta.values()[c]);
      const T* xp = x + n * per_sample + c * plane;
      T* yp = y + n * per_sample + c * plane;
      for (std::ptrdiff_t i = 0; i < plane; ++i) {
        yp[i] = static_cast<T>(g * ((static_cast<double>(xp[i]) - mean[c]) * inv_std[c]) + b);
      }
    }
  }

  if (tape && (input.requires_grad() || gamma.requires_grad() || beta.requires_grad())) {
    out.set_requires_grad(true);
    const bool batch_stats = mode == BnMode::kTrain;
    Tensor<T> input_h = input;
    Tensor<T> gamma_h = gamma;
    Tensor<T> beta_h = beta;
    tape->record("batch_norm", [input = input_h, gamma = gamma_h, beta = beta_h, out, mean,
                                inv_std, m, batch_stats]() mutable {
      if (!out.has_grad()) return;
      const int batch = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
                W = input.shape()[3];
      const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(H) * W;
      const std::ptrdiff_t per_sample = static_cast<std::ptrdiff_t>(C) * plane;
      const T* x = input.values().data();
      const T* g_out = out.grad().data();
      auto d_gamma = gamma.requires_grad() ? gamma.mutable_grad() : std::span<T>{};
      auto d_beta = beta.requires_grad() ? beta.mutable_grad() : std::span<T>{};
      const bool need_dx = input.requires_grad();
      T* dx = need_dx ? input.mutable_grad().data() : nullptr;
      for (int c = 0; c < C; ++c) {
        double sum_g = 0.0, sum_g_xhat = 0.0;
        for (int n = 0; n < batch; ++n) {
          const T* xp = x + n * per_sample + c * plane;
          const T* gp = g_out + n * per_sample + c * plane;
          for (std::ptrdiff_t i = 0; i < plane; ++i) {
            const double xhat = (static_cast<double>(xp[i]) - mean[c]) * inv_std[c];
            sum_g += static_cast<double>(gp[i]);
            sum_g_xhat += static_cast<double>(gp[i]) * xhat;
          }
        }
        if (!d_gamma.empty()) d_gamma[c] += static_cast<T>(sum_g_xhat);
        if (!d_beta.empty()) d_beta[c] += static_cast<T>(sum_g);
        if (need_dx) {
          const double scale = static_cast<double>(gamma.values()[c]) * inv_std[c];
          for (int n = 0; n < batch; ++n) {
            const T* xp = x + n * per_sample + c * plane;
            const T* gp = g_out + n * per_sample + c * plane;
            T* dp = dx + n * per_sample + c * plane;
            for (std::ptrdiff_t i = 0; i < plane; ++i) {
              double d = static_cast<double>(gp[i]);
              if (batch_stats) {
                const double xhat = (static_cast<double>(xp[i]) - mean[c]) * inv_std[c];
                d -= sum_g / m + xhat * sum_g_xhat / m;
              }
              dp[i] += static_cast<T>(scale * d);
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> tanh_activation(const Tensor<T>& input, Tape<T>* tape) {
  Tensor<T> out = Tensor<T>::zeros(input.shape());
  // Keep outputs strictly inside (-1, 1); std::tanh rounds to exactly 1 for
  // moderately large finite arguments.
  const T limit = std::nextafter(T(1), T(0));
  const T* x = input.values().data();
  T* y = out.mutable_values().data();
  for (std::size_t i = 0; i < input.size(); ++i) {
    y[i] = std::clamp(std::tanh(x[i]), -limit, limit);
  }
  if (tape && input.requires_grad()) {
    out.set_requires_grad(true);
    Tensor<T> input_h = input;
    tape->record("tanh", [input = input_h, out]() mutable {
      if (!out.has_grad()) return;
      const T* y = out.values().data();
      const T* g = out.grad().data();
      auto dx = input.mutable_grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * (T(1) - y[i] * y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> max_pool(const Tensor<T>& input, int window_h, int window_w, int stride, int padding,
                   Tape<T>* tape) {
  const Shape out_shape = max_pool_output_shape(input.shape(), window_h, window_w, stride, padding);
  const int batch = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
            W = input.shape()[3];
  const int OH = out_shape[2], OW = out_shape[3];
  Tensor<T> out = Tensor<T>::zeros(out_shape);
  // Flat input index of each selected maximum; -1 when a window covers only
  // padding cells.
  std::vector<std::int64_t> argmax(out.size(), -1);
  const T* x = input.values().data();
  T* y = out.mutable_values().data();
  std::size_t oi = 0;
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::ptrdiff_t base = (static_cast<std::ptrdiff_t>(n) * C + c) * H * W;
      for (int oh = 0; oh < OH; ++oh) {
        for (int ow = 0; ow < OW; ++ow, ++oi) {
          T best = T(0);
          std::int64_t best_idx = -1;
          for (int kh = 0; kh < window_h; ++kh) {
            const int ih = oh * stride - padding + kh;
            if (ih < 0 || ih >= H) continue;
            for (int kw = 0; kw < window_w; ++kw) {
              const int iw = ow * stride - padding + kw;
              if (iw < 0 || iw >= W) continue;
              const std::int64_t idx = base + static_cast<std::ptrdiff_t>(ih) * W + iw;
              if (best_idx < 0 || x[idx] > best) {
                best = x[idx];
                best_idx = idx;
              }
            }
          }
          y[oi] = best_idx >= 0 ? best : T(0);
          argmax[oi] = best_idx;
        }
      }
    }
  }
  if (tape && input.requires_grad()) {
    out.set_requires_grad(true);
    Tensor<T> input_h = input;
    tape->record("max_pool", [input = input_h, out, argmax = std::move(argmax)]() mutable {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      auto dx = input.mutable_grad();
      for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] >= 0) dx[static_cast<std::size_t>(argmax[i])] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input, Tape<T>* tape) {
  require(input.shape().rank() == 4,
          "global_avg_pool input must be NCHW, got " + input.shape().str());
  const int batch = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
            W = input.shape()[3];
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(H) * W;
  Tensor<T> out = Tensor<T>::zeros(Shape{batch, C});
  const T* x = input.values().data();
  T* y = out.mutable_values().data();
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* p = x + (static_cast<std::ptrdiff_t>(n) * C + c) * plane;
      double sum = 0.0;
      for (std::ptrdiff_t i = 0; i < plane; ++i) sum += static_cast<double>(p[i]);
      y[n * C + c] = static_cast<T>(sum / static_cast<double>(plane));
    }
  }
  if (tape && input.requires_grad()) {
    out.set_requires_grad(true);
    Tensor<T> input_h = input;
    tape->record("global_avg_pool", [input = input_h, out]() mutable {
      if (!out.has_grad()) return;
      const int batch = input.shape()[0], C = input.shape()[1], H = input.shape()[2],
                W = input.shape()[3];
      const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(H) * W;
      const T* g = out.grad().data();
      auto dx = input.mutable_grad();
      for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < C; ++c) {
          const T share = g[n * C + c] / static_cast<T>(plane);
          T* p = dx.data() + (static_cast<std::ptrdiff_t>(n) * C + c) * plane;
          for (std::ptrdiff_t i = 0; i < plane; ++i) p[i] += share;
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                Tape<T>* tape) {
  require(input.shape().rank() == 2, "dense input must be [batch, features], got " +
                                         input.shape().str());
  require(weights.shape().rank() == 2,
          "dense weights must be [outputs, features], got " + weights.shape().str());
  const int batch = input.shape()[0], F = input.shape()[1], O = weights.shape()[0];
  require(weights.shape()[1] == F, "dense weight columns (" + std::to_string(weights.shape()[1]) +
                                       ") must equal input length (" + std::to_string(F) + ")");
  require(bias.shape() == Shape{O}, "dense bias must have " + std::to_string(O) + " entries");

  Tensor<T> out = Tensor<T>::zeros(Shape{batch, O});
  {
    MutMap<T> y(out.mutable_values().data(), batch, O);
    y.noalias() = ConstMap<T>(input.values().data(), batch, F) *
                  ConstMap<T>(weights.values().data(), O, F).transpose();
    y.rowwise() += Eigen::Map<const Eigen::RowVectorX<T>>(bias.values().data(), O);
  }
  if (tape && (input.requires_grad() || weights.requires_grad() || bias.requires_grad())) {
    out.set_requires_grad(true);
    Tensor<T> input_h = input;
    Tensor<T> weights_h = weights;
    Tensor<T> bias_h = bias;
    tape->record("dense", [input = input_h, weights = weights_h, bias = bias_h, out]() mutable {
      if (!out.has_grad()) return;
      const int batch = input.shape()[0], F = input.shape()[1], O = weights.shape()[0];
      ConstMap<T> g(out.grad().data(), batch, O);
      if (weights.requires_grad()) {
        MutMap<T> dw(weights.mutable_grad().data(), O, F);
        dw.noalias() += g.transpose() * ConstMap<T>(input.values().data(), batch, F);
      }
      if (bias.requires_grad()) {
        Eigen::Map<Eigen::RowVectorX<T>> db(bias.mutable_grad().data(), O);
        db += g.colwise().sum();
      }
      if (input.requires_grad()) {
        MutMap<T> dx(input.mutable_grad().data(), batch, F);
        dx.noalias() += g * ConstMap<T>(weights.values().data(), O, F);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape) {
  require(a.shape() == b.shape(),
          "add shape mismatch: " + a.shape().str() + " vs " + b.shape().str());
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.values().data();
  const T* pb = b.values().data();
  T* py = out.mutable_values().data();
  for (std::size_t i = 0; i < out.size(); ++i) py[i] = pa[i] + pb[i];
  if (tape && (a.requires_grad() || b.requires_grad())) {
    out.set_requires_grad(true);
    Tensor<T> a_h = a;
    Tensor<T> b_h = b;
    tape->record("add", [a = a_h, b = b_h, out]() mutable {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      if (a.requires_grad()) {
        auto da = a.mutable_grad();
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i];
      }
      if (b.requires_grad()) {
        auto db = b.mutable_grad();
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& input, Tape<T>* tape) {
  double sum = 0.0;
  for (T v : input.values()) sum += static_cast<double>(v);
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(sum));
  if (tape && input.requires_grad()) {
    out.set_requires_grad(true);
    Tensor<T> input_h = input;
    tape->record("reduce_sum", [input = input_h, out]() mutable {
      if (!out.has_grad()) return;
      const T g = out.grad()[0];
      auto dx = input.mutable_grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean_squared_error(const Tensor<T>& predictions, const Tensor<T>& targets,
                             Tape<T>* tape) {
  require(predictions.size() == targets.size(),
          "mean_squared_error length mismatch: " + predictions.shape().str() + " vs " +
              targets.shape().str());
  const std::size_t n = predictions.size();
  if (n == 0) throw ContractError("mean_squared_error over an empty batch");
  const T* p = predictions.values().data();
  const T* t = targets.values().data();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    sum += d * d;
  }
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(sum / static_cast<double>(n)));
  if (tape && predictions.requires_grad()) {
    out.set_requires_grad(true);
    Tensor<T> predictions_h = predictions;
    Tensor<T> targets_h = targets;
    tape->record("mean_squared_error",
                 [predictions = predictions_h, targets = targets_h, out]() mutable {
      if (!out.has_grad()) return;
      const T g = out.grad()[0];
      const std::size_t n = predictions.size();
      const T* p = predictions.values().data();
      const T* t = targets.values().data();
      const T scale = g * T(2) / static_cast<T>(n);
      auto dp = predictions.mutable_grad();
      for (std::size_t i = 0; i < n; ++i) dp[i] += scale * (p[i] - t[i]);
    });
  }
  return out;
}

template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&, int, Padding,
                              Tape<float>*);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&, int, Padding,
                               Tape<double>*);
template Tensor<float> batch_norm(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                  BnStats<float>&, BnMode, float, float, Tape<float>*);
template Tensor<double> batch_norm(const Tensor<double>&, const Tensor<double>&,
                                   const Tensor<double>&, BnStats<double>&, BnMode, double, double,
                                   Tape<double>*);
template Tensor<float> tanh_activation(const Tensor<float>&, Tape<float>*);
template Tensor<double> tanh_activation(const Tensor<double>&, Tape<double>*);
template Tensor<float> max_pool(const Tensor<float>&, int, int, int, int, Tape<float>*);
template Tensor<double> max_pool(const Tensor<double>&, int, int, int, int, Tape<double>*);
template Tensor<float> global_avg_pool(const Tensor<float>&, Tape<float>*);
template Tensor<double> global_avg_pool(const Tensor<double>&, Tape<double>*);
template Tensor<float> dense(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                             Tape<float>*);
template Tensor<double> dense(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                              Tape<double>*);
template Tensor<float> add(const Tensor<float>&, const Tensor<float>&, Tape<float>*);
template Tensor<double> add(const Tensor<double>&, const Tensor<double>&, Tape<double>*);
template Tensor<float> reduce_sum(const Tensor<float>&, Tape<float>*);
template Tensor<double> reduce_sum(const Tensor<double>&, Tape<double>*);
template Tensor<float> mean_squared_error(const Tensor<float>&, const Tensor<float>&,
                                          Tape<float>*);
template Tensor<double> mean_squared_error(const Tensor<double>&, const Tensor<double>&,
                                           Tape<double>*);

}  // namespace miniresnet
