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

#include "miniresnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "miniresnet/errors.hpp"
#include "miniresnet/serialize.hpp"

namespace miniresnet {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kColumnNames[] = {"image_path", "x", "y",    "w",   "h",
                                        "yaw",        "pitch", "roll", "source"};
constexpr int kColumnCount = 9;

std::string row_context(const std::string& path, int row, const char* column) {
  return "manifest " + path + ", row " + std::to_string(row) + ", column '" + column + "'";
}

int parse_int_field(const std::string& text, const std::string& path, int row, const char* column) {
  std::size_t consumed = 0;
  int value = 0;
  try {
    value = std::stoi(text, &consumed);
  } catch (const std::exception&) {
    throw FormatError(row_context(path, row, column) + ": not an integer: '" + text + "'");
  }
  if (consumed != text.size()) {
    throw FormatError(row_context(path, row, column) + ": not an integer: '" + text + "'");
  }
  return value;
}

double parse_double_field(const std::string& text, const std::string& path, int row,
                          const char* column) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &consumed);
  } catch (const std::exception&) {
    throw FormatError(row_context(path, row, column) + ": not a number: '" + text + "'");
  }
  if (consumed != text.size() || !std::isfinite(value)) {
    throw FormatError(row_context(path, row, column) + ": not a finite number: '" + text + "'");
  }
  return value;
}

std::string format_angle(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Source parse_source(const std::string& text) {
  if (text == "AFLW") return Source::kAflw;
  if (text == "AFW") return Source::kAfw;
  if (text == "synthetic") return Source::kSynthetic;
  throw FormatError("unknown source tag '" + text + "' (expected AFLW, AFW, or synthetic)");
}

std::string source_name(Source source) {
  switch (source) {
    case Source::kAflw: return "AFLW";
    case Source::kAfw: return "AFW";
    case Source::kSynthetic: return "synthetic";
  }
  return "?";
}

AngleName parse_angle(const std::string& text) {
  if (text == "yaw") return AngleName::kYaw;
  if (text == "pitch") return AngleName::kPitch;
  if (text == "roll") return AngleName::kRoll;
  throw ConfigError("unknown angle '" + text + "' (expected yaw, pitch, or roll)");
}

std::string angle_name(AngleName angle) {
  switch (angle) {
    case AngleName::kYaw: return "yaw";
    case AngleName::kPitch: return "pitch";
    case AngleName::kRoll: return "roll";
  }
  return "?";
}

double PoseSample::angle(AngleName which) const {
  switch (which) {
    case AngleName::kYaw: return yaw;
    case AngleName::kPitch: return pitch;
    case AngleName::kRoll: return roll;
  }
  return 0.0;
}

std::vector<PoseSample> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("manifest " + path + " is empty (no header)");
  if (strip_cr(line) != kManifestHeader) {
    throw FormatError("manifest " + path + " has unexpected header '" + strip_cr(line) +
                      "', expected '" + kManifestHeader + "'");
  }
  const fs::path base = fs::path(path).parent_path();
  std::vector<PoseSample> samples;
  int row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    if (fields.size() != kColumnCount) {
      throw FormatError("manifest " + path + ", row " + std::to_string(row) + ": expected " +
                        std::to_string(kColumnCount) + " fields, got " +
                        std::to_string(fields.size()));
    }
    PoseSample s;
    s.manifest_row = row;
    if (fields[0].empty()) {
      throw FormatError(row_context(path, row, kColumnNames[0]) + ": empty path");
    }
    const fs::path image(fields[0]);
    s.image_path = image.is_absolute() ? image.string() : (base / image).string();
    s.face_box.x = parse_int_field(fields[1], path, row, kColumnNames[1]);
    s.face_box.y = parse_int_field(fields[2], path, row, kColumnNames[2]);
    s.face_box.width = parse_int_field(fields[3], path, row, kColumnNames[3]);
    s.face_box.height = parse_int_field(fields[4], path, row, kColumnNames[4]);
    s.yaw = parse_double_field(fields[5], path, row, kColumnNames[5]);
    s.pitch = parse_double_field(fields[6], path, row, kColumnNames[6]);
    s.roll = parse_double_field(fields[7], path, row, kColumnNames[7]);
    try {
      s.source = parse_source(fields[8]);
    } catch (const FormatError& e) {
      throw FormatError(row_context(path, row, kColumnNames[8]) + ": " + e.what());
    }
    if (s.face_box.width <= 0 || s.face_box.height <= 0) {
      throw FormatError("manifest " + path + ", row " + std::to_string(row) +
                        ": non-positive face box " + std::to_string(s.face_box.width) + "x" +
                        std::to_string(s.face_box.height));
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

void save_manifest(const std::string& path, const std::vector<PoseSample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kManifestHeader << '\n';
  for (const PoseSample& s : samples) {
    out << s.image_path << ',' << s.face_box.x << ',' << s.face_box.y << ',' << s.face_box.width
        << ',' << s.face_box.height << ',' << format_angle(s.yaw) << ',' << format_angle(s.pitch)
        << ',' << format_angle(s.roll) << ',' << source_name(s.source) << '\n';
  }
  out.close();
  if (!out) throw IoError("failed to write: " + path);
}

std::vector<PoseSample> filter_samples(const std::vector<PoseSample>& samples,
                                       const FilterPolicy& policy, int target_size,
                                       FilterStats* stats) {
  FilterStats local;
  std::vector<PoseSample> kept;
  for (const PoseSample& s : samples) {
    ++local.input;
    if (std::abs(s.yaw) > policy.yaw_range || std::abs(s.pitch) > policy.pitch_range ||
        std::abs(s.roll) > policy.roll_range) {
      ++local.dropped_angle;
      continue;
    }
    const int min_dim = std::min(s.face_box.width, s.face_box.height);
    if (min_dim < target_size) {
      ++local.dropped_small;
      continue;
    }
    if (s.source == Source::kAfw && min_dim <= policy.afw_min_face_px) {
      ++local.dropped_afw_size;
      continue;
    }
    kept.push_back(s);
    ++local.kept;
  }
  if (stats) *stats = local;
  return kept;
}

Tensor<float> preprocess_image(const Image& image, const FaceBox& box, int target_size) {
  const Image face = crop(image, box.x, box.y, box.width, box.height);
  return resize_to_unit_tensor(to_grayscale(face), target_size);
}

const std::vector<float>& PreparedDataset::labels(AngleName which) const {
  switch (which) {
    case AngleName::kYaw: return yaw;
    case AngleName::kPitch: return pitch;
    case AngleName::kRoll: return roll;
  }
  return yaw;
}

PreparedDataset prepare_dataset(const std::vector<PoseSample>& samples, int target_size,
                                int jobs) {
  if (target_size < 1) throw ConfigError("target size must be positive");
  PreparedDataset out;
  out.target_size = target_size;
  out.provenance = samples;
  const int n = static_cast<int>(samples.size());
  out.yaw.resize(samples.size());
  out.pitch.resize(samples.size());
  out.roll.resize(samples.size());
  if (n == 0) return out;
  out.images = Tensor<float>::zeros(Shape{n, 1, target_size, target_size});
  const std::size_t plane = static_cast<std::size_t>(target_size) * target_size;

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&](int begin, int end) {
    try {
      for (int i = begin; i < end; ++i) {
        const PoseSample& s = samples[static_cast<std::size_t>(i)];
        const Tensor<float> pixels =
            preprocess_image(read_image(s.image_path), s.face_box, target_size);
        std::copy(pixels.values().begin(), pixels.values().end(),
                  out.images.mutable_values().begin() + static_cast<std::ptrdiff_t>(i) * plane);
        out.yaw[static_cast<std::size_t>(i)] = static_cast<float>(normalize_label(s.yaw));
        out.pitch[static_cast<std::size_t>(i)] = static_cast<float>(normalize_label(s.pitch));
        out.roll[static_cast<std::size_t>(i)] = static_cast<float>(normalize_label(s.roll));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  const int workers = std::clamp(jobs, 1, n);
  if (workers <= 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (float v : out.images.values()) {
    if (!(v >= -1.0f && v <= 1.0f)) {
      throw ContractError("prepared pixel outside [-1,1]: " + std::to_string(v));
    }
  }
  for (const auto* labels : {&out.yaw, &out.pitch, &out.roll}) {
    for (float v : *labels) {
      if (!(v >= -1.0f && v <= 1.0f)) {
        throw ContractError("prepared label outside [-1,1]: " + std::to_string(v));
      }
    }
  }
  return out;
}

void save_prepared(const std::string& path, const PreparedDataset& dataset) {
  const int n = static_cast<int>(dataset.size());
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  if (n > 0) {
    tensors.emplace_back("images", dataset.images);
    std::vector<float> labels(static_cast<std::size_t>(n) * 3);
    for (int i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i) * 3 + 0] = dataset.yaw[static_cast<std::size_t>(i)];
      labels[static_cast<std::size_t>(i) * 3 + 1] = dataset.pitch[static_cast<std::size_t>(i)];
      labels[static_cast<std::size_t>(i) * 3 + 2] = dataset.roll[static_cast<std::size_t>(i)];
    }
    tensors.emplace_back("labels", Tensor<float>::from(Shape{n, 3}, std::move(labels)));
  }
  json meta;
  meta["target_size"] = dataset.target_size;
  meta["count"] = n;
  meta["samples"] = json::array();
  for (const PoseSample& s : dataset.provenance) {
    meta["samples"].push_back({{"image_path", s.image_path},
                               {"x", s.face_box.x},
                               {"y", s.face_box.y},
                               {"w", s.face_box.width},
                               {"h", s.face_box.height},
                               {"yaw", s.yaw},
                               {"pitch", s.pitch},
                               {"roll", s.roll},
                               {"source", source_name(s.source)},
                               {"row", s.manifest_row}});
  }
  save_tensor_blob(path, tensors, "miniresnet-prepared", meta.dump());
}

PreparedDataset load_prepared(const std::string& path) {
  TensorBlob blob = load_tensor_blob(path);
  if (blob.kind != "miniresnet-prepared") {
    throw FormatError("not a prepared-dataset file (format '" + blob.kind + "'): " + path);
  }
  json meta;
  try {
    meta = json::parse(blob.metadata_json);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid prepared-dataset metadata in " + path + ": " + e.what());
  }
  PreparedDataset out;
  out.target_size = meta.value("target_size", 0);
  const int n = meta.value("count", -1);
  if (out.target_size < 1 || n < 0) {
    throw FormatError("prepared-dataset metadata lacks target_size/count in " + path);
  }
  for (const json& s : meta.value("samples", json::array())) {
    PoseSample sample;
    sample.image_path = s.value("image_path", "");
    sample.face_box = {s.value("x", 0), s.value("y", 0), s.value("w", 0), s.value("h", 0)};
    sample.yaw = s.value("yaw", 0.0);
    sample.pitch = s.value("pitch", 0.0);
    sample.roll = s.value("roll", 0.0);
    sample.source = parse_source(s.value("source", "synthetic"));
    sample.manifest_row = s.value("row", -1);
    out.provenance.push_back(std::move(sample));
  }
  if (static_cast<int>(out.provenance.size()) != n) {
    throw FormatError("prepared-dataset sample list disagrees with count in " + path);
  }
  if (n == 0) return out;

  const Tensor<float>* images = blob.find("images");
  const Tensor<float>* labels = blob.find("labels");
  if (!images || !labels) {
    throw FormatError("prepared-dataset blob lacks images/labels records in " + path);
  }
  if (!(images->shape() ==
        Shape{n, 1, out.target_size, out.target_size})) {
    throw FormatError("prepared-dataset images have shape " + images->shape().str() +
                      ", expected [" + std::to_string(n) + "x1x" +
                      std::to_string(out.target_size) + "x" + std::to_string(out.target_size) +
                      "] in " + path);
  }
  if (!(labels->shape() == Shape{n, 3})) {
    throw FormatError("prepared-dataset labels have shape " + labels->shape().str() + " in " +
                      path);
  }
  out.images = *images;
  out.yaw.resize(static_cast<std::size_t>(n));
  out.pitch.resize(static_cast<std::size_t>(n));
  out.roll.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.yaw[static_cast<std::size_t>(i)] = labels->values()[static_cast<std::size_t>(i) * 3 + 0];
    out.pitch[static_cast<std::size_t>(i)] = labels->values()[static_cast<std::size_t>(i) * 3 + 1];
    out.roll[static_cast<std::size_t>(i)] = labels->values()[static_cast<std::size_t>(i) * 3 + 2];
  }
  return out;
}

std::vector<std::vector<int>> split_kfold(std::size_t n, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("fold count must be >= 1, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > n) {
    throw ConfigError("cannot split " + std::to_string(n) + " samples into " + std::to_string(k) +
                      " folds");
  }
  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t cursor = 0;
  for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(indices.begin() + static_cast<std::ptrdiff_t>(cursor),
                    indices.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    cursor += size;
  }
  return folds;
}

Image render_pose_pattern(double yaw, double pitch, double roll, int image_size, FaceBox box) {
  if (image_size < 2 || box.width < 2 || box.height < 2 || box.x < 0 || box.y < 0 ||
      box.x + box.width > image_size || box.y + box.height > image_size) {
    throw ConfigError("pattern face box must lie inside the image and span >= 2 pixels");
  }
  Image img;
  img.width = image_size;
  img.height = image_size;
  img.channels = 1;
  img.pixels.assign(static_cast<std::size_t>(image_size) * image_size, 18);

  const double pi = 3.14159265358979323846;
  const double alpha = yaw * pi / 200.0;                   // ramp orientation
  const double base = 127.5 + 45.0 * (yaw / 100.0);        // face brightness
  const double amplitude = 35.0 + 25.0 * (pitch / 45.0);   // ramp contrast
  const double aspect = 1.0 + 0.25 * (pitch / 45.0);       // ellipse shape
  const double ellipse_a = 0.8 * aspect;
  const double ellipse_b = 0.8 / aspect;
  const double rho = roll * pi / 50.0;                     // marker angle
  const double dot_u = 0.55 * std::sin(rho);
  const double dot_v = -0.55 * std::cos(rho);
  constexpr double kDotRadiusSq = 0.12 * 0.12;

  for (int y = box.y; y < box.y + box.height; ++y) {
    const double v = 2.0 * (y - box.y) / (box.height - 1) - 1.0;
    for (int x = box.x; x < box.x + box.width; ++x) {
      const double u = 2.0 * (x - box.x) / (box.width - 1) - 1.0;
      double value = base + amplitude * (u * std::sin(alpha) + v * std::cos(alpha));
      const double radial =
          (u / ellipse_a) * (u / ellipse_a) + (v / ellipse_b) * (v / ellipse_b);
      if (std::abs(radial - 0.55) < 0.08) value *= 0.8;
      const double du = u - dot_u, dv = v - dot_v;
      if (du * du + dv * dv < kDotRadiusSq) value = 235.0;
      const double au = u + dot_u, av = v + dot_v;
      if (au * au + av * av < kDotRadiusSq) value = 30.0;
      img.pixels[static_cast<std::size_t>(y) * image_size + x] =
          static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
    }
  }
  return img;
}

std::vector<PoseSample> make_synthetic_dataset(const SyntheticSpec& spec,
                                               const std::string& out_dir) {
  if (spec.n < 1) throw ConfigError("synthetic sample count must be positive");
  if (spec.size < 8) throw ConfigError("synthetic target size must be >= 8");
  fs::create_directories(out_dir);

  const int image_size = static_cast<int>(std::lround(1.25 * spec.size));
  int box_size = static_cast<int>(std::lround(1.10 * spec.size));
  box_size += (image_size - box_size) % 2;  // keep the face box centred exactly
  const int margin = (image_size - box_size) / 2;
  const FaceBox box{margin, margin, box_size, box_size};

  std::vector<PoseSample> rows;
  for (int i = 0; i < spec.n; ++i) {
    std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> yaw_dist(-spec.yaw_range, spec.yaw_range);
    std::uniform_real_distribution<double> pitch_dist(-spec.pitch_range, spec.pitch_range);
    std::uniform_real_distribution<double> roll_dist(-spec.roll_range, spec.roll_range);
    const double yaw = yaw_dist(rng);
    const double pitch = pitch_dist(rng);
    const double roll = roll_dist(rng);

    Image img = render_pose_pattern(yaw, pitch, roll, image_size, box);
    std::normal_distribution<double> noise(0.0, 2.0);
    for (std::uint8_t& p : img.pixels) {
      const double jittered = static_cast<double>(p) + noise(rng);
      p = static_cast<std::uint8_t>(std::lround(std::clamp(jittered, 0.0, 255.0)));
    }

    char name[32];
    std::snprintf(name, sizeof(name), "sample_%06d.pgm", i);
    write_pgm((fs::path(out_dir) / name).string(), img);

    PoseSample s;
    s.image_path = name;  // manifest-relative
    s.face_box = box;
    s.yaw = yaw;
    s.pitch = pitch;
    s.roll = roll;
    s.source = Source::kSynthetic;
    rows.push_back(std::move(s));
  }
  const std::string manifest = (fs::path(out_dir) / "manifest.csv").string();
  save_manifest(manifest, rows);
  return load_manifest(manifest);
}

}  // namespace miniresnet
