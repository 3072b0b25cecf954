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
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "miniresnet/tensor.hpp"

namespace miniresnet {

// Tensor blob format
// ------------------
// A blob file is a sequence of records, each laid out little-endian as
//
//   u32 rank | u32 extent[rank] | f32 value[product(extents)]
//
// A JSON sidecar at `<path>.json` indexes the blob:
//
//   {
//     "format":  <kind string, e.g. "miniresnet-weights">,
//     "version": 1,
//     "dtype":   "f32",
//     "tensors": [ { "name": <parameter path>, "offset": <byte offset> }, ... ],
//     "metadata": <free-form JSON object>
//   }
//
// Records appear in sidecar order; the last record ends exactly at the end
// of the blob, so truncation is always detected.

/// Appends one record; returns the byte offset at which it started.
std::uint64_t write_tensor_record(std::ostream& out, const Tensor<float>& tensor);

/// Reads one record at the current stream position.
Tensor<float> read_tensor_record(std::istream& in);

std::string sidecar_path(const std::string& blob_path);

struct TensorBlob {
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  std::string kind;
  std::string metadata_json;

  const Tensor<float>* find(const std::string& name) const;
};

/// Writes blob + sidecar. `metadata_json` must parse as a JSON object.
void save_tensor_blob(const std::string& path,
                      const std::vector<std::pair<std::string, Tensor<float>>>& tensors,
                      const std::string& kind, const std::string& metadata_json = "{}");

/// Reads blob + sidecar, validating offsets, sizes, and the trailing byte.
TensorBlob load_tensor_blob(const std::string& path);

}  // namespace miniresnet
