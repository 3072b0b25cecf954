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

#include "miniresnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "miniresnet/errors.hpp"
#include "miniresnet/serialize.hpp"

namespace miniresnet {

namespace {

using json = nlohmann::json;

// Standard deviation shortfall of a normal truncated at +-2 sigma; dividing
// the requested sigma by this restores the target variance after truncation.
constexpr double kTrunc2SigmaStd = 0.87962566103423978;

int stem_output_extent(const ModelConfig& config) {
  int s = conv_output_extent(config.input_size, config.stem.kernel, config.stem.stride,
                             config.stem.kernel - 1);
  if (config.stem.pool) s = conv_output_extent(s, 3, 2, 2);
  return s;
}

int downsampled_extent(int s) { return conv_output_extent(s, 3, 2, 2); }

}  // namespace

std::vector<int> ModelConfig::effective_stacks() const {
  std::vector<int> out;
  for (int count : stacks) {
    if (count == 0) break;
    out.push_back(count);
  }
  return out;
}

std::vector<int> ModelConfig::effective_widths() const {
  std::vector<int> out(stack_widths.begin(),
                       stack_widths.begin() + static_cast<std::ptrdiff_t>(effective_stacks().size()));
  return out;
}

ModelConfig ModelConfig::desk_scaled(int width_divisor) const {
  if (width_divisor < 1) throw ConfigError("width divisor must be >= 1");
  ModelConfig scaled = *this;
  for (int& w : scaled.stack_widths) w = std::max(8, w / width_divisor);
  scaled.name = name + "-desk";
  return scaled;
}

void ModelConfig::validate() const {
  if (input_size < 1) throw ConfigError("input_size must be positive");
  if (input_channels < 1) throw ConfigError("input_channels must be positive");
  if (head_outputs < 1) throw ConfigError("head_outputs must be positive");
  if (stem.kernel < 1 || stem.stride < 1) throw ConfigError("stem kernel/stride must be positive");
  if (bn_epsilon <= 0.0f) throw ConfigError("bn_epsilon must be positive");
  if (bn_momentum < 0.0f || bn_momentum >= 1.0f) throw ConfigError("bn_momentum must be in [0,1)");
  if (stacks.empty()) throw ConfigError("stack plan is empty");
  if (stacks.size() != stack_widths.size()) {
    throw ConfigError("stack plan has " + std::to_string(stacks.size()) + " entries but " +
                      std::to_string(stack_widths.size()) + " widths");
  }
  for (int count : stacks) {
    if (count < 0) throw ConfigError("negative block count in stack plan");
  }
  for (int w : stack_widths) {
    if (w < 1) throw ConfigError("non-positive stack width");
  }
  const std::vector<int> plan = effective_stacks();
  if (plan.empty()) throw ConfigError("stack plan has no blocks before the terminating zero");

  int s = stem_output_extent(*this);
  if (s < 1) throw ConfigError("stem reduces the input below one pixel");
  for (std::size_t i = 1; i < plan.size(); ++i) {
    if (s < 2) {
      throw ConfigError("spatial size underflow: stack " + std::to_string(i) +
                        " would downsample a " + std::to_string(s) + "-pixel feature map");
    }
    s = downsampled_extent(s);
  }
}

ModelConfig ModelConfig::resnet34_112() {
  ModelConfig c;
  c.name = "resnet34-112";
  c.input_size = 112;
  c.stacks = {3, 4, 6, 3};
  c.stack_widths = {64, 128, 256, 512};
  return c;
}

ModelConfig ModelConfig::resnet18_112() {
  ModelConfig c;
  c.name = "resnet18-112";
  c.input_size = 112;
  c.stacks = {2, 2, 2, 2};
  c.stack_widths = {64, 128, 256, 512};
  return c;
}

ModelConfig ModelConfig::resnet18_64() {
  ModelConfig c;
  c.name = "resnet18-64";
  c.input_size = 64;
  c.stacks = {2, 3, 3, 0};
  c.stack_widths = {64, 128, 256, 512};
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "resnet34-112") return resnet34_112();
  if (name == "resnet18-112") return resnet18_112();
  if (name == "resnet18-64") return resnet18_64();
  throw ConfigError("unknown model preset '" + name +
                    "' (known: resnet34-112, resnet18-112, resnet18-64)");
}

ModelConfig ModelConfig::from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid model config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  try {
    c.name = doc.value("name", c.name);
    c.input_size = doc.value("input_size", c.input_size);
    c.input_channels = doc.value("input_channels", c.input_channels);
    if (!doc.contains("stacks") || !doc.contains("stack_widths")) {
      throw ConfigError("model config needs 'stacks' and 'stack_widths'");
    }
    c.stacks = doc["stacks"].get<std::vector<int>>();
    c.stack_widths = doc["stack_widths"].get<std::vector<int>>();
    if (doc.contains("stem")) {
      const json& stem = doc["stem"];
      c.stem.kernel = stem.value("kernel", c.stem.kernel);
      c.stem.stride = stem.value("stride", c.stem.stride);
      c.stem.pool = stem.value("pool", c.stem.pool);
    }
    c.head_outputs = doc.value("head_outputs", c.head_outputs);
    c.bn_epsilon = doc.value("bn_epsilon", c.bn_epsilon);
    c.bn_momentum = doc.value("bn_momentum", c.bn_momentum);
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("model config field has wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model config: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_string(buffer.str());
}

std::string ModelConfig::to_json_string() const {
  json doc;
  doc["name"] = name;
  doc["input_size"] = input_size;
  doc["input_channels"] = input_channels;
  doc["stacks"] = stacks;
  doc["stack_widths"] = stack_widths;
  doc["stem"] = {{"kernel", stem.kernel}, {"stride", stem.stride}, {"pool", stem.pool}};
  doc["head_outputs"] = head_outputs;
  doc["bn_epsilon"] = bn_epsilon;
  doc["bn_momentum"] = bn_momentum;
  return doc.dump(2);
}

template <typename T>
Network<T>::Network(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::vector<int> plan = config_.effective_stacks();
  const std::vector<int> widths = config_.effective_widths();

  stem_kernel_ = Tensor<T>::zeros(
      Shape{widths[0], config_.input_channels, config_.stem.kernel, config_.stem.kernel});
  params_.push_back({"stem.conv.kernel", stem_kernel_, true});

  int in_ch = widths[0];
  for (std::size_t i = 0; i < plan.size(); ++i) {
    std::vector<ResidualBlockVars<T>> blocks;
    for (int j = 0; j < plan[i]; ++j) {
      ResidualBlockVars<T> b;
      b.in_channels = in_ch;
      b.out_channels = widths[i];
      b.stride = (i > 0 && j == 0) ? 2 : 1;
      b.bn1_gamma = Tensor<T>::full(Shape{b.in_channels}, T(1));
      b.bn1_beta = Tensor<T>::zeros(Shape{b.in_channels});
      b.bn1_stats = BnStats<T>::unit(b.in_channels);
      b.conv1 = Tensor<T>::zeros(Shape{b.out_channels, b.in_channels, 3, 3});
      b.bn2_gamma = Tensor<T>::full(Shape{b.out_channels}, T(1));
      b.bn2_beta = Tensor<T>::zeros(Shape{b.out_channels});
      b.bn2_stats = BnStats<T>::unit(b.out_channels);
      b.conv2 = Tensor<T>::zeros(Shape{b.out_channels, b.out_channels, 3, 3});
      if (b.stride != 1 || b.in_channels != b.out_channels) {
        b.proj = Tensor<T>::zeros(Shape{b.out_channels, b.in_channels, 1, 1});
      }
      const std::string prefix =
          "stack" + std::to_string(i) + ".block" + std::to_string(j) + ".";
      params_.push_back({prefix + "bn1.gamma", b.bn1_gamma, false});
      params_.push_back({prefix + "bn1.beta", b.bn1_beta, false});
      params_.push_back({prefix + "conv1.kernel", b.conv1, true});
      params_.push_back({prefix + "bn2.gamma", b.bn2_gamma, false});
      params_.push_back({prefix + "bn2.beta", b.bn2_beta, false});
      params_.push_back({prefix + "conv2.kernel", b.conv2, true});
      if (b.proj.defined()) params_.push_back({prefix + "proj.kernel", b.proj, true});
      in_ch = b.out_channels;
      blocks.push_back(std::move(b));
    }
    stacks_.push_back(std::move(blocks));
  }

  head_weight_ = Tensor<T>::zeros(Shape{config_.head_outputs, widths.back()});
  head_bias_ = Tensor<T>::zeros(Shape{config_.head_outputs});
  params_.push_back({"head.dense.weight", head_weight_, true});
  params_.push_back({"head.dense.bias", head_bias_, false});
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> Network<T>::state() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  out.emplace_back("stem.conv.kernel", stem_kernel_);
  for (std::size_t i = 0; i < stacks_.size(); ++i) {
    for (std::size_t j = 0; j < stacks_[i].size(); ++j) {
      const auto& b = stacks_[i][j];
      const std::string prefix =
          "stack" + std::to_string(i) + ".block" + std::to_string(j) + ".";
      out.emplace_back(prefix + "bn1.gamma", b.bn1_gamma);
      out.emplace_back(prefix + "bn1.beta", b.bn1_beta);
      out.emplace_back(prefix + "bn1.running_mean", b.bn1_stats.mean);
      out.emplace_back(prefix + "bn1.running_var", b.bn1_stats.variance);
      out.emplace_back(prefix + "conv1.kernel", b.conv1);
      out.emplace_back(prefix + "bn2.gamma", b.bn2_gamma);
      out.emplace_back(prefix + "bn2.beta", b.bn2_beta);
      out.emplace_back(prefix + "bn2.running_mean", b.bn2_stats.mean);
      out.emplace_back(prefix + "bn2.running_var", b.bn2_stats.variance);
      out.emplace_back(prefix + "conv2.kernel", b.conv2);
      if (b.proj.defined()) out.emplace_back(prefix + "proj.kernel", b.proj);
    }
  }
  out.emplace_back("head.dense.weight", head_weight_);
  out.emplace_back("head.dense.bias", head_bias_);
  return out;
}

template <typename T>
std::int64_t Network<T>::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& p : params_) total += static_cast<std::int64_t>(p.tensor.size());
  return total;
}

template <typename T>
int Network<T>::weighted_layer_count() const {
  int blocks = 0;
  for (const auto& stack : stacks_) blocks += static_cast<int>(stack.size());
  return 1 + 2 * blocks + 1;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, BnMode mode, Tape<T>* tape) {
  if (!batch.defined() || batch.shape().rank() != 4 ||
      batch.shape()[1] != config_.input_channels || batch.shape()[2] != config_.input_size ||
      batch.shape()[3] != config_.input_size) {
    throw ShapeError("network " + config_.name + " expects input [*x" +
                     std::to_string(config_.input_channels) + "x" +
                     std::to_string(config_.input_size) + "x" +
                     std::to_string(config_.input_size) + "], got " +
                     (batch.defined() ? batch.shape().str() : std::string("<empty>")));
  }
  Tensor<T> x = conv2d(batch, stem_kernel_, config_.stem.stride, Padding::kSame, tape);
  if (config_.stem.pool) x = max_pool(x, 3, 3, 2, 1, tape);
  for (std::size_t i = 0; i < stacks_.size(); ++i) {
    for (std::size_t j = 0; j < stacks_[i].size(); ++j) {
      x = block_forward(static_cast<int>(i), static_cast<int>(j), x, mode, tape);
    }
  }
  Tensor<T> v = global_avg_pool(x, tape);
  v = dense(v, head_weight_, head_bias_, tape);
  return tanh_activation(v, tape);
}

template <typename T>
Tensor<T> Network<T>::block_forward(int stack, int block, const Tensor<T>& x, BnMode mode,
                                    Tape<T>* tape) {
  auto& b = stacks_[static_cast<std::size_t>(stack)][static_cast<std::size_t>(block)];
  const T eps = static_cast<T>(config_.bn_epsilon);
  const T momentum = static_cast<T>(config_.bn_momentum);
  Tensor<T> a1 = tanh_activation(
      batch_norm(x, b.bn1_gamma, b.bn1_beta, b.bn1_stats, mode, eps, momentum, tape), tape);
  Tensor<T> shortcut = b.identity() ? x : conv2d(a1, b.proj, b.stride, Padding::kValid, tape);
  Tensor<T> h = conv2d(a1, b.conv1, b.stride, Padding::kSame, tape);
  h = tanh_activation(
      batch_norm(h, b.bn2_gamma, b.bn2_beta, b.bn2_stats, mode, eps, momentum, tape), tape);
  h = conv2d(h, b.conv2, 1, Padding::kSame, tape);
  return add(shortcut, h, tape);
}

template <typename T>
Tensor<T> Network<T>::block_residual(int stack, int block, const Tensor<T>& x, BnMode mode) {
  auto& b = stacks_[static_cast<std::size_t>(stack)][static_cast<std::size_t>(block)];
  const T eps = static_cast<T>(config_.bn_epsilon);
  const T momentum = static_cast<T>(config_.bn_momentum);
  Tensor<T> a1 =
      tanh_activation(batch_norm(x, b.bn1_gamma, b.bn1_beta, b.bn1_stats, mode, eps, momentum));
  Tensor<T> h = conv2d(a1, b.conv1, b.stride, Padding::kSame);
  h = tanh_activation(batch_norm(h, b.bn2_gamma, b.bn2_beta, b.bn2_stats, mode, eps, momentum));
  return conv2d(h, b.conv2, 1, Padding::kSame);
}

template <typename T>
std::vector<LayerInfo> Network<T>::layers() const {
  std::vector<LayerInfo> out;
  auto extents = [](int c, int s) {
    return "[" + std::to_string(c) + "x" + std::to_string(s) + "x" + std::to_string(s) + "]";
  };
  int s = conv_output_extent(config_.input_size, config_.stem.kernel, config_.stem.stride,
                             config_.stem.kernel - 1);
  const int stem_ch = stem_kernel_.shape()[0];
  out.push_back({"stem.conv",
                 "conv " + std::to_string(config_.stem.kernel) + "x" +
                     std::to_string(config_.stem.kernel) + "/" + std::to_string(config_.stem.stride),
                 extents(stem_ch, s), static_cast<std::int64_t>(stem_kernel_.size())});
  if (config_.stem.pool) {
    s = conv_output_extent(s, 3, 2, 2);
    out.push_back({"stem.pool", "maxpool 3x3/2", extents(stem_ch, s), 0});
  }
  for (std::size_t i = 0; i < stacks_.size(); ++i) {
    for (std::size_t j = 0; j < stacks_[i].size(); ++j) {
      const auto& b = stacks_[i][j];
      if (b.stride != 1) s = downsampled_extent(s);
      std::int64_t params = b.bn1_gamma.size() + b.bn1_beta.size() + b.conv1.size() +
                            b.bn2_gamma.size() + b.bn2_beta.size() + b.conv2.size() +
                            (b.proj.defined() ? b.proj.size() : 0);
      out.push_back({"stack" + std::to_string(i) + ".block" + std::to_string(j),
                     b.identity() ? "residual (identity)" : "residual (projection /2)",
                     extents(b.out_channels, s), params});
    }
  }
  const int last_ch = stacks_.back().back().out_channels;
  out.push_back({"head.pool", "global avg pool", "[" + std::to_string(last_ch) + "]", 0});
  out.push_back({"head.dense", "dense", "[" + std::to_string(config_.head_outputs) + "]",
                 static_cast<std::int64_t>(head_weight_.size() + head_bias_.size())});
  out.push_back({"head.tanh", "tanh", "[" + std::to_string(config_.head_outputs) + "]", 0});
  return out;
}

template <typename T>
std::string Network<T>::describe() const {
  std::ostringstream out;
  out << "model: " << config_.name << '\n';
  out << "input: " << config_.input_channels << 'x' << config_.input_size << 'x'
      << config_.input_size << '\n';
  out << '\n';
  out << std::left << std::setw(18) << "layer" << std::setw(26) << "kind" << std::setw(14)
      << "output" << std::right << std::setw(10) << "params" << '\n';
  for (const auto& layer : layers()) {
    out << std::left << std::setw(18) << layer.name << std::setw(26) << layer.kind << std::setw(14)
        << layer.output << std::right << std::setw(10) << layer.params << '\n';
  }
  out << '\n';
  out << "total parameters: " << parameter_count() << '\n';
  out << "weighted layers: " << weighted_layer_count() << '\n';
  return out.str();
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template <typename T>
void Network<T>::set_parameters_trainable(bool on) {
  for (auto& p : params_) p.tensor.set_requires_grad(on);
}

template <typename T>
void init_weights(Network<T>& network, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& p : network.parameters()) {
    auto values = p.tensor.mutable_values();
    if (p.decay) {
      const Shape& s = p.tensor.shape();
      const int fan_in = s.rank() == 4 ? s[1] * s[2] * s[3] : s[1];
      const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in)) / kTrunc2SigmaStd;
      std::normal_distribution<double> dist(0.0, sigma);
      for (T& v : values) {
        double draw;
        do {
          draw = dist(rng);
        } while (std::abs(draw) > 2.0 * sigma);
        v = static_cast<T>(draw);
      }
    } else {
      const bool is_gamma = p.name.size() >= 6 && p.name.rfind(".gamma") == p.name.size() - 6;
      std::fill(values.begin(), values.end(), is_gamma ? T(1) : T(0));
    }
  }
  for (auto& [name, tensor] : network.state()) {
    Tensor<T> handle = tensor;
    if (name.rfind(".running_mean") != std::string::npos) {
      std::fill(handle.mutable_values().begin(), handle.mutable_values().end(), T(0));
    } else if (name.rfind(".running_var") != std::string::npos) {
      std::fill(handle.mutable_values().begin(), handle.mutable_values().end(), T(1));
    }
  }
}

namespace {

void copy_state_from_blob(Network<float>& network, const TensorBlob& blob,
                          const std::string& path) {
  auto state = network.state();
  for (auto& [name, tensor] : state) {
    const Tensor<float>* stored = blob.find(name);
    if (stored == nullptr) {
      throw FormatError("weight file " + path + " is missing parameter '" + name + "'");
    }
    if (!(stored->shape() == tensor.shape())) {
      throw FormatError("parameter '" + name + "' has shape " + stored->shape().str() + " in " +
                        path + ", expected " + tensor.shape().str());
    }
  }
  if (blob.tensors.size() != state.size()) {
    for (const auto& [name, t] : blob.tensors) {
      bool known = false;
      for (const auto& [n, s] : state) {
        if (n == name) {
          known = true;
          break;
        }
      }
      if (!known) {
        throw FormatError("weight file " + path + " has unexpected parameter '" + name + "'");
      }
    }
  }
  // All names and shapes verified; now copy, so a failure above leaves the
  // network untouched.
  for (auto& [name, tensor] : state) {
    const Tensor<float>* stored = blob.find(name);
    auto dst = tensor.mutable_values();
    std::copy(stored->values().begin(), stored->values().end(), dst.begin());
  }
}

}  // namespace

void save_weights(const Network<float>& network, const std::string& path) {
  json meta;
  meta["model_config"] = json::parse(network.config().to_json_string());
  save_tensor_blob(path, network.state(), "miniresnet-weights", meta.dump());
}

Network<float> load_weights(const std::string& path) {
  TensorBlob blob = load_tensor_blob(path);
  if (blob.kind != "miniresnet-weights") {
    throw FormatError("not a weight file (format '" + blob.kind + "'): " + path);
  }
  json meta = json::parse(blob.metadata_json);
  if (!meta.contains("model_config")) {
    throw FormatError("weight file lacks an embedded model config: " + path);
  }
  ModelConfig config = ModelConfig::from_json_string(meta["model_config"].dump());
  Network<float> network(config);
  copy_state_from_blob(network, blob, path);
  return network;
}

void load_weights_into(Network<float>& network, const std::string& path) {
  TensorBlob blob = load_tensor_blob(path);
  if (blob.kind != "miniresnet-weights") {
    throw FormatError("not a weight file (format '" + blob.kind + "'): " + path);
  }
  copy_state_from_blob(network, blob, path);
}

template class Network<float>;
template class Network<double>;
template void init_weights(Network<float>&, std::uint64_t);
template void init_weights(Network<double>&, std::uint64_t);

}  // namespace miniresnet
