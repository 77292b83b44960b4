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
#include "bimotion/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

namespace bimotion::io {

namespace {

constexpr char kFloMagic[4] = {'P', 'I', 'E', 'H'};

// Host order is checked once; payloads are always little-endian on disk.
bool little_endian() {
  const std::uint32_t probe = 1;
  std::uint8_t b;
  std::memcpy(&b, &probe, 1);
  return b == 1;
}

template <typename V>
void put_le(std::vector<std::uint8_t>& out, V v) {
  std::uint8_t b[sizeof(V)];
  std::memcpy(b, &v, sizeof(V));
  if (!little_endian()) std::reverse(b, b + sizeof(V));
  out.insert(out.end(), b, b + sizeof(V));
}

template <typename V>
V get_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(V) > in.size()) throw FormatError("flo: truncated file");
  std::uint8_t b[sizeof(V)];
  std::memcpy(b, in.data() + pos, sizeof(V));
  if (!little_endian()) std::reverse(b, b + sizeof(V));
  pos += sizeof(V);
  V v;
  std::memcpy(&v, b, sizeof(V));
  return v;
}

std::string extension(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void require_image(const Tensor<float>& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("image: expected 3×H×W, got " + shape_str(image.shape()));
  }
}

}  // namespace

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// .flo

std::vector<std::uint8_t> encode_flo(const Tensor<float>& flow) {
  if (flow.rank() != 3 || flow.dim(0) != 2) throw ShapeError("flo: expected 2×H×W flow");
  const int h = flow.dim(1), w = flow.dim(2);
  std::vector<std::uint8_t> out(kFloMagic, kFloMagic + 4);
  out.reserve(12 + flow.numel() * 4);
  put_le<std::int32_t>(out, w);
  put_le<std::int32_t>(out, h);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  auto v = flow.data();
  for (std::size_t p = 0; p < plane; ++p) {
    put_le<float>(out, v[p]);
    put_le<float>(out, v[plane + p]);
  }
  return out;
}

Tensor<float> decode_flo(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw FormatError("flo: truncated header");
  if (std::memcmp(bytes.data(), kFloMagic, 4) != 0) throw FormatError("flo: bad magic (expected PIEH)");
  std::size_t pos = 4;
  const auto w = get_le<std::int32_t>(bytes, pos);
  const auto h = get_le<std::int32_t>(bytes, pos);
  if (w < 0 || h < 0) throw FormatError("flo: negative dimensions");
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  if (bytes.size() != 12 + plane * 8) {
    throw FormatError(bytes.size() < 12 + plane * 8 ? "flo: truncated payload" : "flo: trailing bytes");
  }
  std::vector<float> v(2 * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    v[p] = get_le<float>(bytes, pos);
    v[plane + p] = get_le<float>(bytes, pos);
  }
  return Tensor<float>(Shape{2, h, w}, std::move(v));
}

void write_flo(const std::filesystem::path& path, const Tensor<float>& flow) { write_bytes(path, encode_flo(flow)); }
Tensor<float> read_flo(const std::filesystem::path& path) { return decode_flo(read_bytes(path)); }

// ---------------------------------------------------------------------------
// Images

std::vector<std::uint8_t> encode_ppm(const Tensor<float>& image) {
  require_image(image);
  const int h = image.dim(1), w = image.dim(2);
  const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  auto v = image.data();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) out.push_back(to_byte(v[c * plane + p]));
  }
  return out;
}

Tensor<float> decode_ppm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P6") throw FormatError("ppm: only binary P6 is supported");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw FormatError("ppm: malformed header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw FormatError("ppm: unsupported dimensions or depth");
  ++pos;  // single whitespace before the raster
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  if (bytes.size() < pos + plane * 3) throw FormatError("ppm: truncated raster");
  std::vector<float> v(3 * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) v[c * plane + p] = bytes[pos + 3 * p + c] / 255.0f;
  }
  return Tensor<float>(Shape{3, h, w}, std::move(v));
}

Tensor<float> read_image(const std::filesystem::path& path) {
  const std::string ext = extension(path);
  if (ext == ".ppm") return decode_ppm(read_bytes(path));
  if (ext != ".png") throw std::invalid_argument("unsupported image extension: " + path.string());
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError("png: " + std::string(img.message));
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> raster(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, raster.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError("png: " + std::string(img.message));
  }
  const int h = static_cast<int>(img.height), w = static_cast<int>(img.width);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<float> v(3 * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) v[c * plane + p] = raster[3 * p + c] / 255.0f;
  }
  return Tensor<float>(Shape{3, h, w}, std::move(v));
}

void write_image(const std::filesystem::path& path, const Tensor<float>& image) {
  require_image(image);
  const std::string ext = extension(path);
  if (ext == ".ppm") return write_bytes(path, encode_ppm(image));
  if (ext != ".png") throw std::invalid_argument("unsupported image extension: " + path.string());
  const int h = image.dim(1), w = image.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<std::uint8_t> raster(3 * plane);
  auto v = image.data();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) raster[3 * p + c] = to_byte(v[c * plane + p]);
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, raster.data(), 0, nullptr)) {
    throw FormatError("png: " + std::string(img.message));
  }
}

// ---------------------------------------------------------------------------
// Flow colour wheel

std::array<double, 3> wheel_colour(double angle) {
  // Segment lengths of the Middlebury wheel: R-Y, Y-G, G-C, C-B, B-M, M-R.
  static const std::array<std::array<double, 3>, 55> wheel = [] {
    std::array<std::array<double, 3>, 55> w{};
    const int seg[6] = {15, 6, 4, 11, 13, 6};
    int i = 0;
    for (int k = 0; k < seg[0]; ++k) w[i++] = {1, double(k) / seg[0], 0};
    for (int k = 0; k < seg[1]; ++k) w[i++] = {1 - double(k) / seg[1], 1, 0};
    for (int k = 0; k < seg[2]; ++k) w[i++] = {0, 1, double(k) / seg[2]};
    for (int k = 0; k < seg[3]; ++k) w[i++] = {0, 1 - double(k) / seg[3], 1};
    for (int k = 0; k < seg[4]; ++k) w[i++] = {double(k) / seg[4], 0, 1};
    for (int k = 0; k < seg[5]; ++k) w[i++] = {1, 0, 1 - double(k) / seg[5]};
    return w;
  }();
  const double n = static_cast<double>(wheel.size());
  double turn = angle / (2.0 * std::numbers::pi);
  turn -= std::floor(turn);
  const double fk = turn * n;
  const int k0 = static_cast<int>(fk) % static_cast<int>(n);
  const int k1 = (k0 + 1) % static_cast<int>(n);
  const double f = fk - std::floor(fk);
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) out[c] = (1 - f) * wheel[k0][c] + f * wheel[k1][c];
  return out;
}

Tensor<float> flow_colorize(const Tensor<float>& flow) {
  if (flow.rank() != 3 || flow.dim(0) != 2) throw ShapeError("flow_colorize: expected 2×H×W flow");
  const int h = flow.dim(1), w = flow.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  auto v = flow.data();
  double max_mag = 0.0;
  for (std::size_t p = 0; p < plane; ++p) {
    if (!std::isfinite(v[p]) || !std::isfinite(v[plane + p])) throw NumericError("flow_colorize: non-finite flow");
    max_mag = std::max(max_mag, std::hypot(static_cast<double>(v[p]), static_cast<double>(v[plane + p])));
  }
  std::vector<float> out(3 * plane, 1.0f);
  if (max_mag > 0.0) {
    for (std::size_t p = 0; p < plane; ++p) {
      const double u = v[p], vv = v[plane + p];
      const double rad = std::hypot(u, vv) / max_mag;
      const auto col = wheel_colour(std::atan2(vv, u));
      for (int c = 0; c < 3; ++c) out[c * plane + p] = static_cast<float>(1.0 - rad * (1.0 - col[c]));
    }
  }
  return Tensor<float>(Shape{3, h, w}, std::move(out));
}

}  // namespace bimotion::io
