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

#include "miniresnet/serialize.hpp"

#include <bit>
#include <cstddef>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "miniresnet/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor blobs are little-endian; big-endian hosts are unsupported");
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559,
              "tensor blobs require IEEE-754 binary32");

namespace miniresnet {

namespace {

constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxExtent = 1u << 28;

using json = nlohmann::json;

}  // namespace

std::uint64_t write_tensor_record(std::ostream& out, const Tensor<float>& tensor) {
  const std::uint64_t offset = static_cast<std::uint64_t>(out.tellp());
  const std::uint32_t rank = static_cast<std::uint32_t>(tensor.shape().rank());
  out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
  for (int extent : tensor.shape()) {
    const std::uint32_t e = static_cast<std::uint32_t>(extent);
    out.write(reinterpret_cast<const char*>(&e), sizeof(e));
  }
  out.write(reinterpret_cast<const char*>(tensor.values().data()),
            static_cast<std::streamsize>(tensor.size() * sizeof(float)));
  if (!out) throw IoError("failed to write tensor record");
  return offset;
}

Tensor<float> read_tensor_record(std::istream& in) {
  std::uint32_t rank = 0;
  in.read(reinterpret_cast<char*>(&rank), sizeof(rank));
  if (!in) throw FormatError("truncated tensor record: missing rank");
  if (rank == 0 || rank > kMaxRank) {
    throw FormatError("implausible tensor rank " + std::to_string(rank));
  }
  std::vector<int> extents(rank);
  for (std::uint32_t i = 0; i < rank; ++i) {
    std::uint32_t e = 0;
    in.read(reinterpret_cast<char*>(&e), sizeof(e));
    if (!in) throw FormatError("truncated tensor record: missing extents");
    if (e == 0 || e > kMaxExtent) {
      throw FormatError("implausible tensor extent " + std::to_string(e));
    }
    extents[i] = static_cast<int>(e);
  }
  Shape shape(std::move(extents));
  std::vector<float> values(shape.numel());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!in) throw FormatError("truncated tensor record: expected " + std::to_string(shape.numel()) +
                             " values for shape " + shape.str());
  return Tensor<float>::from(std::move(shape), std::move(values));
}

std::string sidecar_path(const std::string& blob_path) { return blob_path + ".json"; }

const Tensor<float>* TensorBlob::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_tensor_blob(const std::string& path,
                      const std::vector<std::pair<std::string, Tensor<float>>>& tensors,
                      const std::string& kind, const std::string& metadata_json) {
  json metadata;
  try {
    metadata = json::parse(metadata_json);
  } catch (const json::parse_error& e) {
    throw ContractError(std::string("blob metadata is not valid JSON: ") + e.what());
  }

  std::ofstream blob(path, std::ios::binary | std::ios::trunc);
  if (!blob) throw IoError("cannot open for writing: " + path);
  json index;
  index["format"] = kind;
  index["version"] = 1;
  index["dtype"] = "f32";
  index["metadata"] = metadata;
  index["tensors"] = json::array();
  for (const auto& [name, tensor] : tensors) {
    const std::uint64_t offset = write_tensor_record(blob, tensor);
    index["tensors"].push_back({{"name", name}, {"offset", offset}});
  }
  blob.close();
  if (!blob) throw IoError("failed to write: " + path);

  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw IoError("cannot open for writing: " + sidecar_path(path));
  side << index.dump(2) << '\n';
  side.close();
  if (!side) throw IoError("failed to write: " + sidecar_path(path));
}

TensorBlob load_tensor_blob(const std::string& path) {
  std::ifstream side(sidecar_path(path));
  if (!side) throw IoError("missing blob sidecar: " + sidecar_path(path));
  json index;
  try {
    index = json::parse(side);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid blob sidecar " + sidecar_path(path) + ": " + e.what());
  }
  if (!index.is_object() || !index.contains("tensors") || !index["tensors"].is_array()) {
    throw FormatError("blob sidecar lacks a tensor index: " + sidecar_path(path));
  }
  if (index.value("version", 0) != 1) {
    throw FormatError("unsupported blob version in " + sidecar_path(path));
  }
  if (index.value("dtype", "") != "f32") {
    throw FormatError("unsupported blob dtype in " + sidecar_path(path));
  }

  std::ifstream blob(path, std::ios::binary);
  if (!blob) throw IoError("cannot open: " + path);

  TensorBlob result;
  result.kind = index.value("format", "");
  result.metadata_json = index.contains("metadata") ? index["metadata"].dump() : "{}";
  for (const auto& entry : index["tensors"]) {
    if (!entry.contains("name") || !entry.contains("offset")) {
      throw FormatError("malformed tensor index entry in " + sidecar_path(path));
    }
    const std::string name = entry["name"].get<std::string>();
    const std::uint64_t offset = entry["offset"].get<std::uint64_t>();
    if (static_cast<std::uint64_t>(blob.tellg()) != offset) {
      throw FormatError("blob offset mismatch for tensor '" + name + "' in " + path);
    }
    try {
      result.tensors.emplace_back(name, read_tensor_record(blob));
    } catch (const FormatError& e) {
      throw FormatError("while reading tensor '" + name + "' from " + path + ": " + e.what());
    }
  }
  blob.peek();
  if (!blob.eof()) throw FormatError("trailing bytes after last tensor record in " + path);
  return result;
}

}  // namespace miniresnet
