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

#include <cmath>
#include <vector>

#include "miniresnet/errors.hpp"
#include "miniresnet/image.hpp"
#include "miniresnet/serialize.hpp"
#include "miniresnet/tape.hpp"
#include "miniresnet/tensor.hpp"
#include "support/test_util.hpp"

using namespace miniresnet;
using testutil::TempDir;

TEST_CASE("shape basics") {
  Shape s{4, 2, 2};
  CHECK(s.rank() == 3);
  CHECK(s.numel() == 16);
  CHECK(s[0] == 4);
  CHECK(s.str() == "[4x2x2]");
  CHECK((s == Shape{4, 2, 2}));
  CHECK_FALSE((s == Shape{4, 4}));
  CHECK_THROWS_AS(Shape{0}, ShapeError);
  CHECK_THROWS_AS((Shape{-1, 2}), ShapeError);
}

TEST_CASE("tensor construction and storage sharing") {
  Tensor<float> z = Tensor<float>::zeros({2, 3});
  CHECK(z.size() == 6);
  for (float v : z.values()) {
    CHECK(v == 0.0f);
  }
  Tensor<float> f = Tensor<float>::full({2, 2}, 1.5f);
  CHECK(f.values()[3] == 1.5f);
  Tensor<float> from = Tensor<float>::from({2, 2}, {1, 2, 3, 4});
  CHECK(from.values()[2] == 3.0f);
  Tensor<float> nchw = Tensor<float>::from({1, 1, 2, 2}, {1, 2, 3, 4});
  CHECK(nchw.at4(0, 0, 1, 0) == 3.0f);
  Tensor<float> s = Tensor<float>::scalar(7.0f);
  CHECK(s.shape().rank() == 1);
  CHECK(s.size() == 1);

  // Copies are handles onto the same storage; clone detaches.
  Tensor<float> alias = from;
  alias.mutable_values()[0] = 42.0f;
  CHECK(from.values()[0] == 42.0f);
  CHECK(alias.same_storage(from));
  Tensor<float> deep = from.clone();
  CHECK_FALSE(deep.same_storage(from));
  deep.mutable_values()[0] = -1.0f;
  CHECK(from.values()[0] == 42.0f);

  Tensor<float> undef;
  CHECK_FALSE(undef.defined());
}

TEST_CASE("gradient buffers are lazy and zeroable") {
  Tensor<float> t = Tensor<float>::from({3}, {1, 2, 3});
  CHECK_FALSE(t.has_grad());
  CHECK(t.grad().empty());
  t.mutable_grad()[1] = 5.0f;
  CHECK(t.has_grad());
  CHECK(t.grad()[0] == 0.0f);
  CHECK(t.grad()[1] == 5.0f);
  t.zero_grad();
  CHECK(t.grad()[1] == 0.0f);
}

TEST_CASE("tape replays backward in reverse order exactly once") {
  Tape<float> tape;
  std::vector<int> order;
  tape.record("first", [&] { order.push_back(1); });
  tape.record("second", [&] { order.push_back(2); });
  CHECK(tape.size() == 2);
  Tensor<float> loss = Tensor<float>::scalar(0.0f);
  tape.backward(loss);
  REQUIRE(order.size() == 2);
  CHECK(order[0] == 2);
  CHECK(order[1] == 1);
  CHECK(loss.grad()[0] == 1.0f);  // seeded with dL/dL = 1
  CHECK_THROWS_AS(tape.backward(loss), ContractError);
}

TEST_CASE("tape rejects non-scalar losses") {
  Tape<float> tape;
  Tensor<float> vec = Tensor<float>::zeros({2});
  CHECK_THROWS_AS(tape.backward(vec), ContractError);
  Tape<float> tape2;
  Tensor<float> undefined;
  CHECK_THROWS_AS(tape2.backward(undefined), ContractError);
}

// ---------------------------------------------------------------------------
// Tensor blob serialization

TEST_CASE("tensor record round-trip") {
  TempDir dir;
  Tensor<float> t = Tensor<float>::from({2, 3}, {1.5f, -2.0f, 0.25f, 4.0f, -0.5f, 9.0f});
  {
    std::ofstream out(dir.str("t.bin"), std::ios::binary);
    write_tensor_record(out, t);
  }
  std::ifstream in(dir.str("t.bin"), std::ios::binary);
  Tensor<float> back = read_tensor_record(in);
  CHECK(back.shape() == t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back.values()[i] == t.values()[i]);
  }
}

TEST_CASE("tensor blob save/load preserves names, order and bits") {
  TempDir dir;
  Tensor<float> a = Tensor<float>::from({2, 2}, {1, 2, 3, 4});
  Tensor<float> b = Tensor<float>::from({3}, {0.1f, -0.2f, 0.3f});
  const std::string path = dir.str("blob.bin");
  save_tensor_blob(path, {{"alpha", a}, {"beta", b}}, "miniresnet-weights", "{\"note\":1}");

  TensorBlob blob = load_tensor_blob(path);
  CHECK(blob.kind == "miniresnet-weights");
  REQUIRE(blob.tensors.size() == 2);
  CHECK(blob.tensors[0].first == "alpha");
  CHECK(blob.tensors[1].first == "beta");
  const Tensor<float>* found = blob.find("beta");
  REQUIRE(found != nullptr);
  CHECK(found->values()[1] == -0.2f);
  CHECK(blob.find("gamma") == nullptr);

  // Identical rewrite is byte-identical (cache determinism).
  const std::string again = dir.str("blob2.bin");
  save_tensor_blob(again, {{"alpha", a}, {"beta", b}}, "miniresnet-weights", "{\"note\":1}");
  CHECK(testutil::read_file(path) == testutil::read_file(again));
  CHECK(testutil::read_file(sidecar_path(path)) == testutil::read_file(sidecar_path(again)));
}

TEST_CASE("blob rejects trailing bytes and truncation") {
  TempDir dir;
  Tensor<float> a = Tensor<float>::from({4}, {1, 2, 3, 4});
  const std::string path = dir.str("blob.bin");
  save_tensor_blob(path, {{"a", a}}, "miniresnet-weights");

  SUBCASE("trailing bytes") {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "junk";
    out.close();
    CHECK_THROWS_AS(load_tensor_blob(path), FormatError);
  }
  SUBCASE("truncated file") {
    const std::string bytes = testutil::read_file(path);
    testutil::write_file(path, bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(load_tensor_blob(path), FormatError);
  }
  SUBCASE("missing sidecar") {
    std::filesystem::remove(sidecar_path(path));
    CHECK_THROWS_AS(load_tensor_blob(path), IoError);
  }
  SUBCASE("corrupt sidecar json") {
    testutil::write_file(sidecar_path(path), "not json");
    CHECK_THROWS_AS(load_tensor_blob(path), FormatError);
  }
}

TEST_CASE("blob metadata must be valid json") {
  TempDir dir;
  Tensor<float> a = Tensor<float>::from({1}, {1});
  CHECK_THROWS_AS(save_tensor_blob(dir.str("x.bin"), {{"a", a}}, "k", "{broken"), ContractError);
}

// ---------------------------------------------------------------------------
// Image I/O

TEST_CASE("pgm round-trip and pixel mapping") {
  TempDir dir;
  Image img;
  img.width = 3;
  img.height = 2;
  img.channels = 1;
  img.pixels = {0, 64, 128, 192, 255, 10};
  write_pgm(dir.str("a.pgm"), img);
  Image back = read_image(dir.str("a.pgm"));
  CHECK(back.width == 3);
  CHECK(back.height == 2);
  CHECK(back.channels == 1);
  CHECK(back.pixels == img.pixels);

  CHECK(pixel_to_unit(0.0f) == doctest::Approx(-1.0f));
  CHECK(pixel_to_unit(255.0f) == doctest::Approx(1.0f));
  CHECK(pixel_to_unit(127.5f) == doctest::Approx(0.0f));
}

TEST_CASE("ppm parsing, comments and luminance") {
  TempDir dir;
  // A 2x1 color image: pure red then pure white, with a header comment. The
  // payload holds NUL bytes, so it is appended with an explicit length.
  std::string ppm = "P6\n# comment line\n2 1\n255\n";
  const unsigned char px[6] = {0xFF, 0x00, 0x00, 0xFF, 0xFF, 0xFF};
  ppm.append(reinterpret_cast<const char*>(px), sizeof(px));
  testutil::write_file(dir.str("c.ppm"), ppm);
  Image color = read_image(dir.str("c.ppm"));
  CHECK(color.channels == 3);
  Image gray = to_grayscale(color);
  CHECK(gray.channels == 1);
  // 0.299*255 = 76.245 -> 76; white stays 255.
  CHECK(static_cast<int>(gray.pixels[0]) == 76);
  CHECK(static_cast<int>(gray.pixels[1]) == 255);
}

TEST_CASE("image error cases") {
  TempDir dir;
  CHECK_THROWS_AS(read_image(dir.str("missing.pgm")), IoError);
  testutil::write_file(dir.str("bad.pgm"), "P5\n2 2\n65535\n....");
  CHECK_THROWS_AS(read_image(dir.str("bad.pgm")), FormatError);
  testutil::write_file(dir.str("short.pgm"), "P5\n4 4\n255\nab");
  CHECK_THROWS_AS(read_image(dir.str("short.pgm")), FormatError);

  Image img;
  img.width = 4;
  img.height = 4;
  img.pixels.assign(16, 100);
  CHECK_THROWS_AS(crop(img, 2, 2, 4, 4), ShapeError);
  Image cropped = crop(img, 1, 1, 2, 2);
  CHECK(cropped.width == 2);
  CHECK(cropped.height == 2);
}

TEST_CASE("bilinear resize to unit tensor") {
  Image img;
  img.width = 5;
  img.height = 5;
  img.pixels.assign(25, 200);
  Tensor<float> t = resize_to_unit_tensor(img, 3);
  CHECK((t.shape() == Shape{1, 3, 3}));
  for (float v : t.values()) {
    CHECK(v == doctest::Approx(200.0f / 127.5f - 1.0f).epsilon(1e-6));
  }

  // Identity-size resize reproduces the exact per-pixel mapping.
  Image ramp;
  ramp.width = 2;
  ramp.height = 2;
  ramp.pixels = {0, 85, 170, 255};
  Tensor<float> same = resize_to_unit_tensor(ramp, 2);
  CHECK(same.values()[0] == doctest::Approx(-1.0f));
  CHECK(same.values()[3] == doctest::Approx(1.0f));
  for (float v : same.values()) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
}
