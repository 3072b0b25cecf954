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
#include <string>
#include <vector>

#include "miniresnet/image.hpp"
#include "miniresnet/tensor.hpp"

namespace miniresnet {

enum class Source { kAflw, kAfw, kSynthetic };
Source parse_source(const std::string& text);  // FormatError on unknown tags
std::string source_name(Source source);

enum class AngleName { kYaw, kPitch, kRoll };
AngleName parse_angle(const std::string& text);  // ConfigError on unknown names
std::string angle_name(AngleName angle);

struct FaceBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// One annotated face: image path, face bounding box in pixels, and the three
/// pose angles in degrees.
struct PoseSample {
  std::string image_path;
  FaceBox face_box;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  Source source = Source::kSynthetic;
  int manifest_row = -1;  // 1-based data row, for error reporting

  double angle(AngleName which) const;
};

/// Exact manifest header; the loader rejects files that do not start with it.
inline constexpr char kManifestHeader[] = "image_path,x,y,w,h,yaw,pitch,roll,source";

/// CSV manifest loader. Relative image paths are resolved against the
/// manifest's directory. FormatError messages name the offending row and
/// column.
std::vector<PoseSample> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<PoseSample>& samples);

/// Angle bounds (symmetric, degrees, inclusive) and face-size floors applied
/// before preprocessing. The AFW floor (strictly greater than) applies only
/// to AFW-source samples, on top of the general target-size floor.
struct FilterPolicy {
  double yaw_range = 100.0;
  double pitch_range = 45.0;
  double roll_range = 25.0;
  int afw_min_face_px = 150;
};

struct FilterStats {
  int input = 0;
  int kept = 0;
  int dropped_angle = 0;
  int dropped_small = 0;     // min(face w, h) < target_size
  int dropped_afw_size = 0;  // AFW faces not exceeding the AFW floor
};

std::vector<PoseSample> filter_samples(const std::vector<PoseSample>& samples,
                                       const FilterPolicy& policy, int target_size,
                                       FilterStats* stats = nullptr);

/// Label scale: [-100, 100] degrees <-> [-1, 1].
inline double normalize_label(double degrees) { return degrees / 100.0; }
inline double denormalize_label(double normalized) { return normalized * 100.0; }

/// Crop to the face box, grayscale, bilinear-resize to target x target, map
/// pixels onto [-1, 1]. Output shape [1, target, target].
Tensor<float> preprocess_image(const Image& image, const FaceBox& box, int target_size);

/// Preprocessed samples ready for training: pixels and labels all in [-1,1].
struct PreparedDataset {
  Tensor<float> images;  // [N, 1, S, S]; undefined when empty
  std::vector<float> yaw, pitch, roll;  // normalized labels
  std::vector<PoseSample> provenance;
  int target_size = 0;

  std::size_t size() const { return provenance.size(); }
  const std::vector<float>& labels(AngleName which) const;
};

/// Loads and preprocesses every sample; `jobs` worker threads split the
/// sample range (bit-identical results for any job count). Verifies the
/// [-1,1] bound on every produced pixel and label.
PreparedDataset prepare_dataset(const std::vector<PoseSample>& samples, int target_size,
                                int jobs = 1);

/// Dataset cache: tensor blob + sidecar carrying provenance.
void save_prepared(const std::string& path, const PreparedDataset& dataset);
PreparedDataset load_prepared(const std::string& path);

/// Shuffled disjoint index folds covering 0..n-1, sizes differing by at most
/// one, deterministic per seed. ConfigError when k < 1 or k > n.
std::vector<std::vector<int>> split_kfold(std::size_t n, int k, std::uint64_t seed);

struct SyntheticSpec {
  int n = 100;
  std::uint64_t seed = 0;
  int size = 64;  // target input size the rendered faces are meant for
  double yaw_range = 100.0;
  double pitch_range = 45.0;
  double roll_range = 25.0;
};

/// Deterministic pattern whose rendering parameters encode the pose: the yaw
/// rotates an intensity ramp and shifts the face brightness, the pitch sets
/// the ramp contrast and the aspect of an ellipse ring, and the roll places a
/// bright/dark marker pair on a circle. Noise-free and mirror-symmetric
/// about the vertical axis at all-zero angles.
Image render_pose_pattern(double yaw, double pitch, double roll, int image_size, FaceBox box);

/// Renders n samples (pattern + per-sample Gaussian pixel noise) into
/// out_dir as PGM files, writes out_dir/manifest.csv, and returns the loaded
/// manifest. Byte-identical across reruns with the same spec.
std::vector<PoseSample> make_synthetic_dataset(const SyntheticSpec& spec,
                                               const std::string& out_dir);

}  // namespace miniresnet
