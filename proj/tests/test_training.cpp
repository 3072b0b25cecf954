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
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "miniresnet/data.hpp"
#include "miniresnet/errors.hpp"
#include "miniresnet/model.hpp"
#include "miniresnet/training.hpp"
#include "support/test_util.hpp"

using namespace miniresnet;
using testutil::TempDir;

namespace {

ModelConfig small_model(int input_size = 16) {
  ModelConfig config;
  config.name = "small";
  config.input_size = input_size;
  config.stacks = {1};
  config.stack_widths = {8};
  return config;
}

/// Dataset with `n` distinct samples whose yaw is a simple function of a
/// per-sample constant image, so a small net can fit it.
PreparedDataset constant_image_dataset(int n, int size) {
  PreparedDataset data;
  data.images = Tensor<float>::zeros({n, 1, size, size});
  data.target_size = size;
  auto pixels = data.images.mutable_values();
  for (int i = 0; i < n; ++i) {
    const float level = -0.8f + 1.6f * static_cast<float>(i) / std::max(1, n - 1);
    for (int p = 0; p < size * size; ++p) {
      pixels[static_cast<std::size_t>(i) * size * size + p] = level;
    }
    data.yaw.push_back(level * 0.5f);
    data.pitch.push_back(0.0f);
    data.roll.push_back(0.0f);
    PoseSample s;
    s.image_path = "mem";
    s.face_box = {0, 0, size, size};
    s.yaw = denormalize_label(level * 0.5f);
    s.source = Source::kSynthetic;
    data.provenance.push_back(s);
  }
  return data;
}

std::vector<int> all_indices(const PreparedDataset& data) {
  std::vector<int> indices(data.size());
  std::iota(indices.begin(), indices.end(), 0);
  return indices;
}

}  // namespace

TEST_CASE("training config validation, desk preset and JSON round-trip") {
  TrainingConfig config;
  CHECK_NOTHROW(config.validate());

  TrainingConfig bad = config;
  bad.batch_size = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = config;
  bad.lr_drop_epochs = {30, 30};
  CHECK_THROWS_AS(bad.validate(), ConfigError);  // strictly increasing required
  bad = config;
  bad.initial_lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  const TrainingConfig desk = config.desk_scaled();
  CHECK(desk.batch_size == 32);
  CHECK(desk.epochs == 60);
  CHECK((desk.lr_drop_epochs == std::vector<int>{18, 36, 48, 54}));
  CHECK(desk.initial_lr == config.initial_lr);

  TrainingConfig custom;
  custom.initial_lr = 0.05;
  custom.epochs = 40;
  custom.seed = 9;
  custom.target_angle = AngleName::kRoll;
  const TrainingConfig parsed = TrainingConfig::from_json_string(custom.to_json_string());
  CHECK(parsed.initial_lr == custom.initial_lr);
  CHECK(parsed.epochs == 40);
  CHECK(parsed.seed == 9);
  CHECK(parsed.target_angle == AngleName::kRoll);
  CHECK_THROWS_AS(TrainingConfig::from_json_string("{\"epochs\": \"many\"}"), ConfigError);
}

TEST_CASE("learning-rate schedule hits the published values") {
  TrainingConfig config;  // 0.1, drops {30, 60, 80, 90}, factor 10
  const auto close = [](double got, double want) {
    CHECK(std::abs(got - want) <= 1e-12 * std::max(std::abs(want), 1.0));
  };
  close(lr_at_epoch(config, 0), 0.1);
  close(lr_at_epoch(config, 29), 0.1);
  close(lr_at_epoch(config, 30), 0.01);  // the drop takes effect at its epoch
  close(lr_at_epoch(config, 59), 0.01);
  close(lr_at_epoch(config, 60), 0.001);
  close(lr_at_epoch(config, 80), 1e-4);
  close(lr_at_epoch(config, 90), 1e-5);
  close(lr_at_epoch(config, 95), 1e-5);

  // Non-increasing, piecewise constant, exactly four discontinuities.
  int discontinuities = 0;
  for (int epoch = 1; epoch < 120; ++epoch) {
    const double prev = lr_at_epoch(config, epoch - 1);
    const double curr = lr_at_epoch(config, epoch);
    CHECK(curr <= prev);
    if (curr != prev) {
      ++discontinuities;
    }
  }
  CHECK(discontinuities == 4);
}

TEST_CASE("sgd step: update rule, decay exclusion, divergence detection") {
  SUBCASE("scalar case w=1, g=2, lr=0.1, decay 0 gives 0.8") {
    Tensor<float> w = Tensor<float>::scalar(1.0f);
    w.mutable_grad()[0] = 2.0f;
    std::vector<ParamRef<float>> params = {{"w", w, true}};
    sgd_step(params, 0.1, 0.0);
    CHECK(w.values()[0] == doctest::Approx(0.8f));
  }
  SUBCASE("zero gradients with zero decay change nothing") {
    Tensor<float> w = Tensor<float>::from({2}, {0.25f, -1.5f});
    w.mutable_grad();
    std::vector<ParamRef<float>> params = {{"w", w, true}};
    sgd_step(params, 0.1, 0.0);
    CHECK(w.values()[0] == 0.25f);
    CHECK(w.values()[1] == -1.5f);
  }
  SUBCASE("zero gradients with decay shrink only decay-flagged parameters") {
    const double lr = 0.1, decay = 0.0002;
    Tensor<float> kernel = Tensor<float>::from({3}, {1.0f, -2.0f, 0.5f});
    Tensor<float> gamma = Tensor<float>::from({2}, {1.0f, 0.9f});
    Tensor<float> bias = Tensor<float>::from({2}, {0.125f, -0.75f});
    kernel.mutable_grad();
    gamma.mutable_grad();
    bias.mutable_grad();
    const std::vector<float> gamma_before(gamma.values().begin(), gamma.values().end());
    const std::vector<float> bias_before(bias.values().begin(), bias.values().end());
    std::vector<ParamRef<float>> params = {
        {"conv.kernel", kernel, true}, {"bn.gamma", gamma, false}, {"head.bias", bias, false}};
    sgd_step(params, lr, decay);

    const float scale = static_cast<float>(1.0 - lr * decay);
    CHECK(kernel.values()[0] == 1.0f * scale);  // bitwise: single multiply
    CHECK(kernel.values()[1] == -2.0f * scale);
    CHECK(kernel.values()[2] == 0.5f * scale);
    CHECK(std::memcmp(gamma.values().data(), gamma_before.data(), sizeof(float) * 2) == 0);
    CHECK(std::memcmp(bias.values().data(), bias_before.data(), sizeof(float) * 2) == 0);
  }
  SUBCASE("non-finite gradients raise DivergedError with context") {
    Tensor<float> w = Tensor<float>::scalar(1.0f);
    w.mutable_grad()[0] = std::numeric_limits<float>::quiet_NaN();
    std::vector<ParamRef<float>> params = {{"w", w, true}};
    try {
      sgd_step(params, 0.1, 0.0, "epoch 3, step 7");
      FAIL("expected DivergedError");
    } catch (const DivergedError& e) {
      const std::string what = e.what();
      CHECK(what.find("'w'") != std::string::npos);
      CHECK(what.find("epoch 3, step 7") != std::string::npos);
    }
  }
}

TEST_CASE("compute_loss examples") {
  Tensor<float> a = Tensor<float>::from({3}, {0.5f, -0.25f, 0.0f});
  CHECK(compute_loss(a, a).values()[0] == 0.0f);
  Tensor<float> preds = Tensor<float>::from({2}, {0, 0});
  Tensor<float> labels = Tensor<float>::from({2}, {1, -1});
  CHECK(compute_loss(preds, labels).values()[0] == doctest::Approx(1.0f));
}

TEST_CASE("overfit fixture: 32 copies of one sample") {
  // One distinct sample repeated 32 times; the net must drive the loss to
  // (nearly) zero and keep it monotone after the early settling epochs.
  PreparedDataset one = constant_image_dataset(1, 16);
  PreparedDataset data;
  data.images = Tensor<float>::zeros({32, 1, 16, 16});
  data.target_size = 16;
  for (int i = 0; i < 32; ++i) {
    std::copy(one.images.values().begin(), one.images.values().end(),
              data.images.mutable_values().begin() + static_cast<std::ptrdiff_t>(i) * 16 * 16);
    data.yaw.push_back(0.31f);
    data.pitch.push_back(0.0f);
    data.roll.push_back(0.0f);
    data.provenance.push_back(one.provenance[0]);
  }

  TrainingConfig config;
  config.initial_lr = 0.01;  // hotter rates overshoot the tanh head on this fixture
  config.lr_drop_epochs = {40};
  config.weight_decay = 0.0;
  config.batch_size = 32;
  config.epochs = 12;
  config.seed = 3;
  TrainingRun run = train(small_model(16), data, all_indices(data), config, "overfit");
  REQUIRE(run.history.size() == 12);
  for (std::size_t e = 4; e < run.history.size(); ++e) {
    CHECK(run.history[e].mean_loss < run.history[e - 1].mean_loss);
  }
  CHECK(run.history[9].mean_loss < run.history[0].mean_loss);  // epoch-10 < epoch-1
  CHECK(run.history.back().mean_loss < 1e-3);
}

TEST_CASE("zero epochs leave the initialized network untouched") {
  PreparedDataset data = constant_image_dataset(8, 16);
  TrainingConfig config;
  config.epochs = 0;
  config.batch_size = 4;
  config.seed = 11;
  TrainingRun run = train(small_model(16), data, all_indices(data), config, "noop");
  CHECK(run.history.empty());

  Network<float> reference(small_model(16));
  init_weights(reference, 11);
  const auto got = run.network.state();
  const auto want = reference.state();
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].first == want[i].first);
    const auto gv = got[i].second.values();
    const auto wv = want[i].second.values();
    REQUIRE(gv.size() == wv.size());
    CHECK(std::memcmp(gv.data(), wv.data(), gv.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("identical seed and config reproduce the loss history exactly") {
  PreparedDataset data = constant_image_dataset(12, 16);
  TrainingConfig config;
  config.batch_size = 4;
  config.epochs = 3;
  config.seed = 21;
  config.initial_lr = 0.02;
  TrainingRun a = train(small_model(16), data, all_indices(data), config, "a");
  TrainingRun b = train(small_model(16), data, all_indices(data), config, "b");
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].mean_loss == b.history[e].mean_loss);
    CHECK(a.history[e].lr == b.history[e].lr);
  }
}

TEST_CASE("training rejects unusable inputs") {
  PreparedDataset data = constant_image_dataset(8, 16);
  TrainingConfig config;
  config.batch_size = 4;
  config.epochs = 1;
  CHECK_THROWS_AS(train(small_model(16), data, {0}, config, "tiny"), ContractError);
  CHECK_THROWS_AS(train(small_model(16), data, {0, 99}, config, "oob"), ContractError);
  CHECK_THROWS_AS(train(small_model(32), data, all_indices(data), config, "size"), ShapeError);
}

TEST_CASE("checkpoint callback fires on the configured cadence") {
  PreparedDataset data = constant_image_dataset(8, 16);
  TrainingConfig config;
  config.batch_size = 4;
  config.epochs = 6;
  config.checkpoint_every = 2;
  std::vector<int> epochs;
  train(small_model(16), data, all_indices(data), config, "ckpt",
        [&](const Network<float>&, int epoch) { epochs.push_back(epoch); });
  CHECK((epochs == std::vector<int>{1, 3, 5}));  // after epochs 2, 4, 6 (0-based ids)
}

TEST_CASE("cv5 protocol predicts every sample exactly once") {
  PreparedDataset data = constant_image_dataset(10, 16);
  TrainingConfig config;
  config.batch_size = 4;
  config.epochs = 2;
  config.seed = 31;
  ProtocolResult result = run_protocol_cv5(small_model(16), data, config, 5, 1);
  REQUIRE(result.runs.size() == 5);
  std::set<int> predicted;
  for (const ProtocolRun& run : result.runs) {
    CHECK(run.held_out.angle == "yaw");
    for (int index : run.held_out.sample_index) {
      CHECK(predicted.insert(index).second);  // no duplicates
    }
  }
  CHECK(predicted.size() == 10);
  CHECK(*predicted.begin() == 0);
  CHECK(*predicted.rbegin() == 9);

  // Per-fold run ids and per-fold seeds.
  CHECK(result.runs[0].run.run_id == "fold0");
  CHECK(result.runs[4].run.run_id == "fold4");
  CHECK(result.runs[0].run.config.seed == 31);
  CHECK(result.runs[4].run.config.seed == 35);
}

TEST_CASE("cv5 results are independent of the job count") {
  PreparedDataset data = constant_image_dataset(10, 16);
  TrainingConfig config;
  config.batch_size = 4;
  config.epochs = 2;
  config.seed = 41;
  ProtocolResult serial = run_protocol_cv5(small_model(16), data, config, 5, 1);
  ProtocolResult parallel = run_protocol_cv5(small_model(16), data, config, 5, 4);
  REQUIRE(serial.runs.size() == parallel.runs.size());
  for (std::size_t f = 0; f < serial.runs.size(); ++f) {
    const PredictionSet& a = serial.runs[f].held_out;
    const PredictionSet& b = parallel.runs[f].held_out;
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.sample_index[i] == b.sample_index[i]);
      CHECK(a.predicted_deg[i] == b.predicted_deg[i]);
    }
  }
}

TEST_CASE("train/test cycles share the test set and vary by seed") {
  PreparedDataset train_data = constant_image_dataset(12, 16);
  PreparedDataset test_data = constant_image_dataset(6, 16);
  TrainingConfig config;
  config.batch_size = 4;
  config.epochs = 2;
  config.seed = 50;
  ProtocolResult result =
      run_protocol_train_test_x5(small_model(16), train_data, test_data, config, 5, 2);
  REQUIRE(result.runs.size() == 5);
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const PredictionSet& set = result.runs[r].held_out;
    CHECK(set.run_id == "seed" + std::to_string(r));
    CHECK(result.runs[r].run.config.seed == 50 + r);
    REQUIRE(set.size() == 6);
    for (std::size_t i = 0; i < set.size(); ++i) {
      CHECK(set.sample_index[i] == static_cast<int>(i));
      CHECK(set.true_deg[i] == result.runs[0].held_out.true_deg[i]);
    }
  }
  // Different seeds generally produce different predictions.
  bool any_difference = false;
  for (std::size_t i = 0; i < result.runs[0].held_out.size(); ++i) {
    if (result.runs[0].held_out.predicted_deg[i] != result.runs[1].held_out.predicted_deg[i]) {
      any_difference = true;
    }
  }
  CHECK(any_difference);
}

TEST_CASE("predictions come back in degrees") {
  PreparedDataset data = constant_image_dataset(6, 16);
  Network<float> net(small_model(16));
  init_weights(net, 61);
  const std::vector<double> degrees = predict_degrees(net, data, all_indices(data));
  REQUIRE(degrees.size() == 6);
  for (double d : degrees) {
    CHECK(std::abs(d) < 100.0);  // tanh output denormalized by x100
  }
}

TEST_CASE("loss CSV carries the documented columns") {
  TempDir dir;
  PreparedDataset data = constant_image_dataset(8, 16);
  TrainingConfig config;
  config.batch_size = 4;
  config.epochs = 2;
  TrainingRun run = train(small_model(16), data, all_indices(data), config, "csv");
  const std::string path = dir.str("loss.csv");
  write_loss_csv(path, run);
  const std::string text = testutil::read_file(path);
  CHECK(text.rfind("epoch,mean_loss,lr,seconds\n", 0) == 0);
  CHECK(text.find("\n0,") != std::string::npos);
  CHECK(text.find("\n1,") != std::string::npos);
}
