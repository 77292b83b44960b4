/* Copyright 2026 The bimotion Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>

#include "bimotion/core/ops.hpp"
#include "bimotion/core/params.hpp"
#include "bimotion/io.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bimotion;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("bimotion_test_" + name);
}

bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("a 2x2 zero field encodes to 44 bytes") {
  const auto bytes = io::encode_flo(Tensor<float>(Shape{2, 2, 2}));
  CHECK(bytes.size() == 44);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "PIEH");
  CHECK(bytes[4] == 2);  // little-endian width
  CHECK(bytes[8] == 2);
}

TEST_CASE(".flo round trip is bit-exact") {
  Rng rng(61);
  auto flow = oracle::random_tensor<float>(rng, {2, 5, 7}, -40.0, 40.0);
  flow.data_mut()[3] = -0.0f;
  flow.data_mut()[4] = 1e-30f;
  const auto path = temp_path("rt.flo");
  io::write_flo(path, flow);
  const auto back = io::read_flo(path);
  std::filesystem::remove(path);
  REQUIRE(back.shape() == flow.shape());
  for (std::size_t i = 0; i < flow.numel(); ++i) CHECK(same_bits(back[i], flow[i]));
  // Interleaved on disk: the first payload pair is (dx, dy) of pixel 0.
  const auto bytes = io::encode_flo(flow);
  float first[2];
  std::memcpy(first, bytes.data() + 12, sizeof first);
  CHECK(same_bits(first[0], flow[0]));
  CHECK(same_bits(first[1], flow[35]));
}

TEST_CASE("malformed .flo data is rejected") {
  auto bytes = io::encode_flo(Tensor<float>(Shape{2, 3, 3}));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(io::decode_flo(bad_magic), io::FormatError);
  bytes.pop_back();
  CHECK_THROWS_AS(io::decode_flo(bytes), io::FormatError);
}

TEST_CASE("weight container round trip is bit-exact") {
  Rng rng(62);
  ParamStore<float> store;
  store.add("a.weight", Shape{3, 2, 3, 3}, Init::kKaimingFanIn, rng);
  store.add("a.bias", Shape{3}, Init::kTruncNormal, rng);
  store.add("b.gamma", Shape{5}, Init::kOnes, rng);
  const auto path = temp_path("rt.bimw");
  store.save(path);

  ParamStore<float> other;
  Rng rng2(99);
  other.add("a.weight", Shape{3, 2, 3, 3}, Init::kZeros, rng2);
  other.add("a.bias", Shape{3}, Init::kZeros, rng2);
  other.add("b.gamma", Shape{5}, Init::kZeros, rng2);
  other.load(path);
  std::filesystem::remove(path);
  for (const auto& name : store.names()) {
    const auto x = store.get(name), y = other.get(name);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(same_bits(x[i], y[i]));
  }
  const auto bytes = encode_weights(store.export_entries());
  CHECK(encode_weights(decode_weights(bytes)) == bytes);
}

TEST_CASE("loading weights checks names and shapes") {
  Rng rng(63);
  ParamStore<float> store;
  store.add("w", Shape{2, 2}, Init::kOnes, rng);
  auto entries = store.export_entries();
  entries["w"].shape = Shape{4};
  ParamStore<float> other;
  other.add("w", Shape{2, 2}, Init::kZeros, rng);
  CHECK_THROWS(other.import_entries(entries));
  auto bytes = encode_weights(store.export_entries());
  bytes[0] = 'Z';
  CHECK_THROWS_AS(decode_weights(bytes), FormatError);
}

TEST_CASE("8-bit images round trip through PPM and PNG") {
  std::vector<float> v(3 * 4 * 5);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>((i * 37) % 256) / 255.0f;
  const Tensor<float> img(Shape{3, 4, 5}, v);
  const auto ppm = io::decode_ppm(io::encode_ppm(img));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(ppm[i] == v[i]);
  const auto path = temp_path("rt.png");
  io::write_image(path, img);
  const auto png = io::read_image(path);
  std::filesystem::remove(path);
  REQUIRE(png.shape() == img.shape());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(png[i] == v[i]);
}

TEST_CASE("zero motion colorizes to white") {
  const auto rgb = io::flow_colorize(Tensor<float>(Shape{2, 3, 3}));
  for (float c : rgb.data()) CHECK(c == 1.0f);
}

TEST_CASE("negating the field rotates the hue by half a turn") {
  Rng rng(64);
  const auto flow = oracle::random_tensor<float>(rng, {2, 4, 4}, -3.0, 3.0);
  const auto a = io::flow_colorize(flow);
  const auto b = io::flow_colorize(neg(flow));
  double max_mag = 0.0;
  for (int p = 0; p < 16; ++p) max_mag = std::max(max_mag, std::hypot<double>(flow[p], flow[16 + p]));
  for (int p = 0; p < 16; ++p) {
    const double angle = std::atan2(flow[16 + p], flow[p]);
    const double rad = std::hypot<double>(flow[p], flow[16 + p]) / max_mag;
    const auto back = io::wheel_colour(angle + std::numbers::pi);
    const auto fwd = io::wheel_colour(angle);
    for (int c = 0; c < 3; ++c) {
      CHECK(b[c * 16 + p] == doctest::Approx(1.0 - rad * (1.0 - back[c])).epsilon(1e-5));
      CHECK(a[c * 16 + p] == doctest::Approx(1.0 - rad * (1.0 - fwd[c])).epsilon(1e-5));
    }
  }
}

TEST_CASE("the colour wheel starts at red and is periodic") {
  const auto red = io::wheel_colour(0.0);
  CHECK(red[0] == 1.0);
  CHECK(red[1] == 0.0);
  CHECK(red[2] == 0.0);
  const auto a = io::wheel_colour(1.0), b = io::wheel_colour(1.0 + 2.0 * std::numbers::pi);
  for (int c = 0; c < 3; ++c) CHECK(a[c] == doctest::Approx(b[c]));
  // Opposite directions are clearly different colours.
  const auto o = io::wheel_colour(1.0 + std::numbers::pi);
  CHECK(std::abs(a[0] - o[0]) + std::abs(a[1] - o[1]) + std::abs(a[2] - o[2]) > 0.5);
}

TEST_CASE("a pure +x field is the wheel's zero-angle colour everywhere") {
  std::vector<float> v(2 * 9, 0.0f);
  for (int p = 0; p < 9; ++p) v[p] = 2.5f;
  const auto rgb = io::flow_colorize(Tensor<float>(Shape{2, 3, 3}, v));
  const auto red = io::wheel_colour(0.0);
  for (int c = 0; c < 3; ++c) {
    for (int p = 0; p < 9; ++p) CHECK(rgb[c * 9 + p] == doctest::Approx(red[c]));
  }
}
