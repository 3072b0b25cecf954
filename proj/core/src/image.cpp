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

#include "miniresnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "miniresnet/errors.hpp"

namespace miniresnet {

namespace {

// Reads the next whitespace-delimited token, skipping '#' comment lines.
int read_pnm_int(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) throw FormatError("malformed PNM header in " + path);
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);
  char p = 0, kind = 0;
  in.get(p);
  in.get(kind);
  if (!in || p != 'P' || (kind != '5' && kind != '6')) {
    throw FormatError("unsupported image format in " + path + " (expected binary PGM or PPM)");
  }
  Image img;
  img.channels = kind == '5' ? 1 : 3;
  img.width = read_pnm_int(in, path);
  img.height = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (img.width <= 0 || img.height <= 0 || maxval != 255) {
    throw FormatError("unsupported PNM geometry or maxval in " + path);
  }
  // The maxval token ends with exactly one whitespace byte already consumed
  // by read_pnm_int's terminating get().
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw FormatError("truncated pixel data in " + path);
  }
  return img;
}

void write_pgm(const std::string& path, const Image& image) {
  if (image.channels != 1) throw ContractError("write_pgm expects a single-channel image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  out.close();
  if (!out) throw IoError("failed to write: " + path);
}

Image to_grayscale(const Image& image) {
  if (image.channels == 1) return image;
  if (image.channels != 3) {
    throw ContractError("to_grayscale expects 1 or 3 channels, got " +
                        std::to_string(image.channels));
  }
  Image gray;
  gray.width = image.width;
  gray.height = image.height;
  gray.channels = 1;
  gray.pixels.resize(static_cast<std::size_t>(gray.width) * gray.height);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
    const float r = image.pixels[i * 3 + 0];
    const float g = image.pixels[i * 3 + 1];
    const float b = image.pixels[i * 3 + 2];
    const float y = 0.299f * r + 0.587f * g + 0.114f * b;
    gray.pixels[i] = static_cast<std::uint8_t>(std::lround(std::min(255.0f, y)));
  }
  return gray;
}

Image crop(const Image& image, int x, int y, int width, int height) {
  if (width <= 0 || height <= 0 || x < 0 || y < 0 || x + width > image.width ||
      y + height > image.height) {
    throw ShapeError("crop rectangle " + std::to_string(x) + "," + std::to_string(y) + " " +
                     std::to_string(width) + "x" + std::to_string(height) +
                     " outside image " + std::to_string(image.width) + "x" +
                     std::to_string(image.height));
  }
  Image out;
  out.width = width;
  out.height = height;
  out.channels = image.channels;
  out.pixels.resize(static_cast<std::size_t>(width) * height * image.channels);
  for (int row = 0; row < height; ++row) {
    const std::uint8_t* src =
        image.pixels.data() +
        (static_cast<std::size_t>(y + row) * image.width + x) * image.channels;
    std::copy(src, src + static_cast<std::size_t>(width) * image.channels,
              out.pixels.data() + static_cast<std::size_t>(row) * width * image.channels);
  }
  return out;
}

Tensor<float> resize_to_unit_tensor(const Image& gray, int target) {
  if (gray.channels != 1) throw ContractError("resize_to_unit_tensor expects a grayscale image");
  if (target <= 0) throw ConfigError("target size must be positive");
  Tensor<float> out = Tensor<float>::zeros(Shape{1, target, target});
  auto values = out.mutable_values();
  const float sx = static_cast<float>(gray.width) / static_cast<float>(target);
  const float sy = static_cast<float>(gray.height) / static_cast<float>(target);
  for (int ty = 0; ty < target; ++ty) {
    // Half-pixel-centre sampling, clamped at the borders.
    const float fy = std::clamp((ty + 0.5f) * sy - 0.5f, 0.0f, static_cast<float>(gray.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, gray.height - 1);
    const float wy = fy - static_cast<float>(y0);
    for (int tx = 0; tx < target; ++tx) {
      const float fx =
          std::clamp((tx + 0.5f) * sx - 0.5f, 0.0f, static_cast<float>(gray.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, gray.width - 1);
      const float wx = fx - static_cast<float>(x0);
      const float top = (1.0f - wx) * gray.at(x0, y0) + wx * gray.at(x1, y0);
      const float bottom = (1.0f - wx) * gray.at(x0, y1) + wx * gray.at(x1, y1);
      const float value = (1.0f - wy) * top + wy * bottom;
      values[static_cast<std::size_t>(ty) * target + tx] =
          std::clamp(pixel_to_unit(value), -1.0f, 1.0f);
    }
  }
  return out;
}

}  // namespace miniresnet
