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

#include <stdexcept>
#include <string>

namespace miniresnet {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not fit the requested operation (channel mismatch,
/// window larger than the input, wrong network input size, ...).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration (non-positive stride, k > n folds,
/// spatial underflow in a stack plan, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API contract violation: non-scalar loss, empty prediction set,
/// mixed-angle aggregation, double backward over one tape.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Train-mode batch normalization over a batch of one sample.
class DegenerateBatchError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Corrupt or mismatching serialized data (weight files, manifests, caches).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure; the message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during optimization.
class DivergedError : public Error {
 public:
  using Error::Error;
};

}  // namespace miniresnet
