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

#include "miniresnet/tensor.hpp"

namespace miniresnet {

/// 8-bit raster, row-major, channels interleaved (1 = gray, 3 = RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
};

/// Reads a binary PGM (P5) or PPM (P6) file with maxval 255.
Image read_image(const std::string& path);

/// Writes a single-channel image as binary PGM (P5).
void write_pgm(const std::string& path, const Image& image);

/// Rec. 601 luminance (0.299 R + 0.587 G + 0.114 B), rounded to nearest.
Image to_grayscale(const Image& image);

/// Extracts a rectangle; it must lie fully inside the image.
Image crop(const Image& image, int x, int y, int width, int height);

/// Maps one 8-bit pixel value onto [-1, 1]: 0 -> -1, 127.5 -> 0, 255 -> +1.
inline float pixel_to_unit(float value) { return value / 127.5f - 1.0f; }

/// Bilinear resize of a single-channel image to target x target, then pixel
/// mapping onto [-1, 1]. Output shape is [1, target, target].
Tensor<float> resize_to_unit_tensor(const Image& gray, int target);

}  // namespace miniresnet
