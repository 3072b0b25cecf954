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

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "miniresnet/errors.hpp"

namespace miniresnet {

/// Extent list of a dense tensor. Feature maps are NCHW; vectors are flat.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int> extents) : extents_(extents) { check(); }
  explicit Shape(std::vector<int> extents) : extents_(std::move(extents)) { check(); }

  int rank() const { return static_cast<int>(extents_.size()); }
  int operator[](int axis) const { return extents_[static_cast<std::size_t>(axis)]; }

  std::size_t numel() const {
    std::size_t n = 1;
    for (int e : extents_) n *= static_cast<std::size_t>(e);
    return n;
  }

  bool operator==(const Shape&) const = default;

  const std::vector<int>& extents() const { return extents_; }
  auto begin() const { return extents_.begin(); }
  auto end() const { return extents_.end(); }

  std::string str() const {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < extents_.size(); ++i) {
      if (i > 0) out << 'x';
      out << extents_[i];
    }
    out << ']';
    return out.str();
  }

 private:
  void check() const {
    for (int e : extents_) {
      if (e <= 0) throw ShapeError("non-positive extent in shape " + str());
    }
  }

  std::vector<int> extents_;
};

/// Dense n-dimensional array of T with an optional same-shape gradient
/// buffer. Copies are shallow handles onto shared storage: ops never mutate
/// the values of a produced tensor, so sharing is safe; backward passes
/// accumulate into the gradient buffer through any handle. Use clone() for a
/// deep copy. An absent gradient buffer reads as all zeros.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape) {
    Tensor t;
    std::size_t n = shape.numel();
    t.storage_ = std::make_shared<Storage>(Storage{std::move(shape), std::vector<T>(n), {}, false});
    return t;
  }

  static Tensor full(Shape shape, T value) {
    Tensor t = zeros(std::move(shape));
    for (T& v : t.storage_->values) v = value;
    return t;
  }

  static Tensor from(Shape shape, std::vector<T> values) {
    if (shape.numel() != values.size()) {
      throw ShapeError("value count " + std::to_string(values.size()) +
                       " does not match shape " + shape.str());
    }
    Tensor t;
    t.storage_ = std::make_shared<Storage>(Storage{std::move(shape), std::move(values), {}, false});
    return t;
  }

  static Tensor scalar(T value) { return from(Shape{1}, {value}); }

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  std::size_t size() const { return storage_->values.size(); }

  std::span<const T> values() const { return storage_->values; }
  std::span<T> mutable_values() { return storage_->values; }

  bool requires_grad() const { return storage_ && storage_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    storage_->requires_grad = on;
    return *this;
  }

  bool has_grad() const { return storage_ && !storage_->grad.empty(); }

  /// Gradient buffer; empty span when no gradient has been accumulated yet.
  std::span<const T> grad() const {
    if (!has_grad()) return {};
    return storage_->grad;
  }

  /// Gradient buffer, zero-allocated on first access.
  std::span<T> mutable_grad() {
    if (storage_->grad.empty()) storage_->grad.assign(storage_->values.size(), T(0));
    return storage_->grad;
  }

  void zero_grad() {
    if (!storage_) return;
    storage_->grad.assign(storage_->values.size(), T(0));
  }

  Tensor clone() const {
    Tensor t;
    t.storage_ = std::make_shared<Storage>(*storage_);
    return t;
  }

  /// True when both handles reference the same storage.
  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }

  // NCHW accessor for feature maps.
  T at4(int n, int c, int h, int w) const {
    const Shape& s = storage_->shape;
    return storage_->values[static_cast<std::size_t>(((n * s[1] + c) * s[2] + h) * s[3] + w)];
  }

 private:
  struct Storage {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;
    bool requires_grad = false;
  };

  std::shared_ptr<Storage> storage_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

}  // namespace miniresnet
