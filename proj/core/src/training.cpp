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

#include "miniresnet/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "miniresnet/errors.hpp"

namespace miniresnet {

namespace {

using json = nlohmann::json;

// Copies data[indices[begin..end)] into a [B,1,S,S] batch plus [B,1] labels.
void fill_batch(const PreparedDataset& data, const std::vector<float>& labels,
                const std::vector<int>& indices, std::size_t begin, std::size_t end,
                Tensor<float>& batch, Tensor<float>& targets) {
  const int s = data.target_size;
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  const std::size_t count = end - begin;
  batch = Tensor<float>::zeros(Shape{static_cast<int>(count), 1, s, s});
  targets = Tensor<float>::zeros(Shape{static_cast<int>(count), 1});
  auto pixels = batch.mutable_values();
  auto target_values = targets.mutable_values();
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t i = static_cast<std::size_t>(indices[begin + b]);
    std::copy(data.images.values().begin() + static_cast<std::ptrdiff_t>(i * plane),
              data.images.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * plane),
              pixels.begin() + static_cast<std::ptrdiff_t>(b * plane));
    target_values[b] = labels[i];
  }
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(initial_lr > 0.0)) throw ConfigError("initial learning rate must be positive");
  if (!(lr_drop_factor > 1.0)) throw ConfigError("learning-rate drop factor must exceed 1");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2 (batch normalization)");
  if (epochs < 0) throw ConfigError("epoch count must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("checkpoint interval must be non-negative");
  for (std::size_t i = 0; i < lr_drop_epochs.size(); ++i) {
    if (lr_drop_epochs[i] < 0 || (i > 0 && lr_drop_epochs[i] <= lr_drop_epochs[i - 1])) {
      throw ConfigError("learning-rate drop epochs must be strictly increasing and non-negative");
    }
  }
}

TrainingConfig TrainingConfig::desk_scaled() const {
  TrainingConfig d = *this;
  d.batch_size = 32;
  d.epochs = 60;
  d.lr_drop_epochs.clear();
  for (int drop : lr_drop_epochs) {
    const int scaled = static_cast<int>(std::lround(drop * d.epochs / 100.0));
    if (scaled > 0 && (d.lr_drop_epochs.empty() || scaled > d.lr_drop_epochs.back())) {
      d.lr_drop_epochs.push_back(scaled);
    }
  }
  return d;
}

TrainingConfig TrainingConfig::from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid training config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("training config must be a JSON object");
  TrainingConfig c;
  try {
    c.initial_lr = doc.value("initial_lr", c.initial_lr);
    c.lr_drop_epochs = doc.value("lr_drop_epochs", c.lr_drop_epochs);
    c.lr_drop_factor = doc.value("lr_drop_factor", c.lr_drop_factor);
    c.weight_decay = doc.value("weight_decay", c.weight_decay);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.epochs = doc.value("epochs", c.epochs);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("target_angle")) {
      c.target_angle = parse_angle(doc["target_angle"].get<std::string>());
    }
    c.checkpoint_every = doc.value("checkpoint_every", c.checkpoint_every);
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("training config field has wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

TrainingConfig TrainingConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open training config: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_string(buffer.str());
}

std::string TrainingConfig::to_json_string() const {
  json doc;
  doc["initial_lr"] = initial_lr;
  doc["lr_drop_epochs"] = lr_drop_epochs;
  doc["lr_drop_factor"] = lr_drop_factor;
  doc["weight_decay"] = weight_decay;
  doc["batch_size"] = batch_size;
  doc["epochs"] = epochs;
  doc["seed"] = seed;
  doc["target_angle"] = angle_name(target_angle);
  doc["checkpoint_every"] = checkpoint_every;
  return doc.dump(2);
}

double lr_at_epoch(const TrainingConfig& config, int epoch) {
  double lr = config.initial_lr;
  for (int drop : config.lr_drop_epochs) {
    if (drop <= epoch) lr /= config.lr_drop_factor;
  }
  return lr;
}

void sgd_step(std::vector<ParamRef<float>>& params, double lr, double weight_decay,
              const std::string& context) {
  const float step = static_cast<float>(lr);
  const float decay_scale = static_cast<float>(1.0 - lr * weight_decay);
  for (auto& p : params) {
    const auto g = p.tensor.grad();
    for (float v : g) {
      if (!std::isfinite(v)) {
        throw DivergedError("non-finite gradient in parameter '" + p.name + "'" +
                            (context.empty() ? "" : " at " + context));
      }
    }
    auto w = p.tensor.mutable_values();
    if (p.decay && weight_decay != 0.0) {
      for (float& x : w) x *= decay_scale;
    }
    if (!g.empty()) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * g[i];
    }
  }
}

Tensor<float> compute_loss(const Tensor<float>& predictions, const Tensor<float>& labels,
                           Tape<float>* tape) {
  return mean_squared_error(predictions, labels, tape);
}

TrainingRun train(const ModelConfig& model, const PreparedDataset& data,
                  const std::vector<int>& indices, const TrainingConfig& config,
                  const std::string& run_id, const CheckpointFn& checkpoint) {
  config.validate();
  if (indices.size() < 2) {
    throw ContractError("training needs at least 2 samples, got " +
                        std::to_string(indices.size()));
  }
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= data.size()) {
      throw ContractError("training index " + std::to_string(i) + " outside dataset of " +
                          std::to_string(data.size()) + " samples");
    }
  }
  if (data.target_size != model.input_size) {
    throw ShapeError("dataset prepared at " + std::to_string(data.target_size) +
                     " px but model expects " + std::to_string(model.input_size) + " px");
  }

  Network<float> network(model);
  init_weights(network, config.seed);
  network.set_parameters_trainable(true);
  const std::vector<float>& labels = data.labels(config.target_angle);

  TrainingRun result(std::move(network));
  result.run_id = run_id;
  result.config = config;

  std::vector<int> order(indices);
  std::mt19937_64 shuffle_rng(config.seed);
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const double lr = lr_at_epoch(config, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    int step = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size, ++step) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      if (end - begin < 2) break;  // batch norm needs >= 2 samples
      Tensor<float> batch, targets;
      fill_batch(data, labels, order, begin, end, batch, targets);
      result.network.zero_grad();
      Tape<float> tape;
      Tensor<float> predictions = result.network.forward(batch, BnMode::kTrain, &tape);
      Tensor<float> loss = compute_loss(predictions, targets, &tape);
      const double loss_value = static_cast<double>(loss.values()[0]);
      const std::string context =
          "epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
          (run_id.empty() ? "" : ", run " + run_id);
      if (!std::isfinite(loss_value)) {
        throw DivergedError("non-finite training loss at " + context);
      }
      tape.backward(loss);
      sgd_step(result.network.parameters(), lr, config.weight_decay, context);
      loss_sum += loss_value * static_cast<double>(end - begin);
      seen += end - begin;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = seen > 0 ? loss_sum / static_cast<double>(seen)
                                : std::numeric_limits<double>::quiet_NaN();
    record.lr = lr;
    record.seconds = seconds;
    result.history.push_back(record);
    if (checkpoint && config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
      checkpoint(result.network, epoch);
    }
  }
  return result;
}

std::vector<double> predict_degrees(Network<float>& network, const PreparedDataset& data,
                                    const std::vector<int>& indices, int batch_size) {
  if (batch_size < 1) throw ConfigError("prediction batch size must be positive");
  std::vector<double> out;
  out.reserve(indices.size());
  const int s = data.target_size;
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  for (std::size_t begin = 0; begin < indices.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(indices.size(), begin + static_cast<std::size_t>(batch_size));
    const int count = static_cast<int>(end - begin);
    Tensor<float> batch = Tensor<float>::zeros(Shape{count, 1, s, s});
    auto pixels = batch.mutable_values();
    for (int b = 0; b < count; ++b) {
      const std::size_t i = static_cast<std::size_t>(indices[begin + static_cast<std::size_t>(b)]);
      std::copy(data.images.values().begin() + static_cast<std::ptrdiff_t>(i * plane),
                data.images.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * plane),
                pixels.begin() + static_cast<std::ptrdiff_t>(b) * static_cast<std::ptrdiff_t>(plane));
    }
    Tensor<float> predictions = network.forward(batch, BnMode::kInfer);
    for (float v : predictions.values()) {
      out.push_back(denormalize_label(static_cast<double>(v)));
    }
  }
  return out;
}

namespace {

// Runs `total` independently seeded jobs on up to `jobs` threads, storing
// each result in its slot; rethrows the first failure.
void run_jobs(int total, int jobs, const std::function<void(int)>& body) {
  const int workers = std::clamp(jobs, 1, total);
  if (workers <= 1) {
    for (int i = 0; i < total; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

ProtocolResult run_protocol_cv5(const ModelConfig& model, const PreparedDataset& data,
                                const TrainingConfig& config, int folds, int jobs) {
  const auto fold_indices = split_kfold(data.size(), folds, config.seed);
  std::vector<std::optional<ProtocolRun>> slots(static_cast<std::size_t>(folds));
  run_jobs(folds, jobs, [&](int f) {
    std::vector<int> train_indices;
    for (int g = 0; g < folds; ++g) {
      if (g == f) continue;
      train_indices.insert(train_indices.end(), fold_indices[static_cast<std::size_t>(g)].begin(),
                           fold_indices[static_cast<std::size_t>(g)].end());
    }
    TrainingConfig fold_config = config;
    fold_config.seed = config.seed + static_cast<std::uint64_t>(f);
    const std::string run_id = "fold" + std::to_string(f);
    TrainingRun run = train(model, data, train_indices, fold_config, run_id);

    const std::vector<int>& test_indices = fold_indices[static_cast<std::size_t>(f)];
    PredictionSet set;
    set.angle = angle_name(config.target_angle);
    set.run_id = run_id;
    set.sample_index = test_indices;
    set.predicted_deg = predict_degrees(run.network, data, test_indices);
    for (int i : test_indices) {
      set.true_deg.push_back(
          data.provenance[static_cast<std::size_t>(i)].angle(config.target_angle));
    }
    slots[static_cast<std::size_t>(f)].emplace(ProtocolRun{std::move(run), std::move(set)});
  });
  ProtocolResult result;
  for (auto& slot : slots) result.runs.push_back(std::move(*slot));
  return result;
}

ProtocolResult run_protocol_train_test_x5(const ModelConfig& model,
                                          const PreparedDataset& train_data,
                                          const PreparedDataset& test_data,
                                          const TrainingConfig& config, int repeats, int jobs) {
  if (repeats < 1) throw ConfigError("repeat count must be >= 1");
  if (test_data.size() == 0) throw ContractError("test set is empty");
  std::vector<int> train_indices(train_data.size());
  std::iota(train_indices.begin(), train_indices.end(), 0);
  std::vector<int> test_indices(test_data.size());
  std::iota(test_indices.begin(), test_indices.end(), 0);

  std::vector<std::optional<ProtocolRun>> slots(static_cast<std::size_t>(repeats));
  run_jobs(repeats, jobs, [&](int r) {
    TrainingConfig run_config = config;
    run_config.seed = config.seed + static_cast<std::uint64_t>(r);
    const std::string run_id = "seed" + std::to_string(r);
    TrainingRun run = train(model, train_data, train_indices, run_config, run_id);

    PredictionSet set;
    set.angle = angle_name(config.target_angle);
    set.run_id = run_id;
    set.sample_index = test_indices;
    set.predicted_deg = predict_degrees(run.network, test_data, test_indices);
    for (int i : test_indices) {
      set.true_deg.push_back(
          test_data.provenance[static_cast<std::size_t>(i)].angle(config.target_angle));
    }
    slots[static_cast<std::size_t>(r)].emplace(ProtocolRun{std::move(run), std::move(set)});
  });
  ProtocolResult result;
  for (auto& slot : slots) result.runs.push_back(std::move(*slot));
  return result;
}

void write_loss_csv(const std::string& path, const TrainingRun& run) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "epoch,mean_loss,lr,seconds\n";
  char line[160];
  for (const EpochRecord& r : run.history) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.3f\n", r.epoch, r.mean_loss, r.lr,
                  r.seconds);
    out << line;
  }
  out.close();
  if (!out) throw IoError("failed to write: " + path);
}

}  // namespace miniresnet
