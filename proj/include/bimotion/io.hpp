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
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "bimotion/core/tensor.hpp"

namespace bimotion::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Middlebury .flo: "PIEH", int32 width, int32 height, interleaved LE f32
// (dx, dy), row-major.
std::vector<std::uint8_t> encode_flo(const Tensor<float>& flow);
Tensor<float> decode_flo(const std::vector<std::uint8_t>& bytes);
void write_flo(const std::filesystem::path& path, const Tensor<float>& flow);
Tensor<float> read_flo(const std::filesystem::path& path);

// 3×H×W images in [0, 1]; PNG (8-bit, any colour type) or binary PPM (P6),
// chosen by extension. Writing clamps to [0, 1].
Tensor<float> read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Tensor<float>& image);

std::vector<std::uint8_t> encode_ppm(const Tensor<float>& image);
Tensor<float> decode_ppm(const std::vector<std::uint8_t>& bytes);

// Colour of the continuous flow wheel at `angle` radians (0 is +x, counter-
// clockwise with y pointing down) at full saturation, RGB in [0, 1].
std::array<double, 3> wheel_colour(double angle);

// Hue from direction, saturation from magnitude / max magnitude of the
// field; zero motion is white.
Tensor<float> flow_colorize(const Tensor<float>& flow);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace bimotion::io
