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
#include <string>
#include <vector>

#include "miniresnet/data.hpp"
#include "miniresnet/model.hpp"
#include "miniresnet/predictions.hpp"
#include "miniresnet/tensor.hpp"

namespace miniresnet {

/// SGD hyperparameters: step schedule (rate divided by `lr_drop_factor` from
/// each drop epoch onward, 0-based), L2 weight decay applied to conv/dense
/// weights only, seeded shuffling. Loss is mean squared error on normalized
/// labels.
struct TrainingConfig {
  double initial_lr = 0.1;
  std::vector<int> lr_drop_epochs = {30, 60, 80, 90};
  double lr_drop_factor = 10.0;
  double weight_decay = 0.0002;
  int batch_size = 256;
  int epochs = 120;
  std::uint64_t seed = 0;
  AngleName target_angle = AngleName::kYaw;
  int checkpoint_every = 0;  // epochs between checkpoint callbacks; 0 = off

  void validate() const;

  /// Laptop preset: batch 32, 60 epochs, drop epochs rescaled onto the
  /// shorter horizon (the default pattern spans 100 epochs, so each drop
  /// moves to round(drop * epochs / 100)).
  TrainingConfig desk_scaled() const;

  static TrainingConfig from_json_string(const std::string& text);
  static TrainingConfig from_json_file(const std::string& path);
  std::string to_json_string() const;
};

/// initial_lr / factor^(number of drop epochs <= epoch).
double lr_at_epoch(const TrainingConfig& config, int epoch);

/// w <- w - lr*(g + decay*w) for decay-flagged parameters, w <- w - lr*g for
/// the rest (batch-norm scales/shifts and biases are never decayed). The
/// decay enters as a single scale by (1 - lr*decay), so a zero-gradient step
/// shrinks weights by exactly that factor. DivergedError on non-finite
/// gradients, message prefixed with `context`.
void sgd_step(std::vector<ParamRef<float>>& params, double lr, double weight_decay,
              const std::string& context = "");

/// Mean squared error between equal-length prediction/label tensors.
Tensor<float> compute_loss(const Tensor<float>& predictions, const Tensor<float>& labels,
                           Tape<float>* tape = nullptr);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainingRun {
  std::string run_id;
  TrainingConfig config;
  std::vector<EpochRecord> history;
  Network<float> network;

  explicit TrainingRun(Network<float>&& net) : network(std::move(net)) {}
};

/// Called after each epoch when config.checkpoint_every divides epoch+1.
using CheckpointFn = std::function<void(const Network<float>&, int epoch)>;

/// Builds + initializes a network from `model` with config.seed and runs the
/// full schedule over data[indices] (per-epoch seeded shuffling, train-mode
/// batch passes, final partial batch kept only when >= 2 samples). The
/// returned network has frozen running statistics, ready for inference.
TrainingRun train(const ModelConfig& model, const PreparedDataset& data,
                  const std::vector<int>& indices, const TrainingConfig& config,
                  const std::string& run_id, const CheckpointFn& checkpoint = nullptr);

/// Batched infer-mode forward over data[indices]; outputs in degrees.
std::vector<double> predict_degrees(Network<float>& network, const PreparedDataset& data,
                                    const std::vector<int>& indices, int batch_size = 64);

struct ProtocolRun {
  TrainingRun run;
  PredictionSet held_out;
};

struct ProtocolResult {
  std::vector<ProtocolRun> runs;
};

/// k-fold cross-validation: run f trains on all folds but f (seed = base
/// seed + f) and predicts fold f, so every sample is predicted exactly once.
/// `jobs` runs folds concurrently; results are independent of job count.
ProtocolResult run_protocol_cv5(const ModelConfig& model, const PreparedDataset& data,
                                const TrainingConfig& config, int folds = 5, int jobs = 1);

/// Repeated train/test cycles: `repeats` runs with seeds base..base+repeats-1,
/// each trained on the full train set and predicting the identical test set.
ProtocolResult run_protocol_train_test_x5(const ModelConfig& model,
                                          const PreparedDataset& train_data,
                                          const PreparedDataset& test_data,
                                          const TrainingConfig& config, int repeats = 5,
                                          int jobs = 1);

/// Loss history as CSV: epoch, mean_loss, lr, seconds.
void write_loss_csv(const std::string& path, const TrainingRun& run);

}  // namespace miniresnet
