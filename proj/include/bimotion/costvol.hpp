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

#include <cstddef>
#include <utility>

#include "bimotion/fields.hpp"

namespace bimotion {

// Square window of displacements d = (dx, dy) with |dx|, |dy| <= radius,
// enumerated row-major: dy outer, dx inner.
struct DisplacementWindow {
  int radius = 0;

  int side() const { return 2 * radius + 1; }
  int size() const { return side() * side(); }
  int index(int dx, int dy) const { return (dy + radius) * side() + (dx + radius); }
  std::pair<int, int> offset(int i) const {  // (dx, dy)
    return {i % side() - radius, i / side() - radius};
  }
};

// How a fine-grid pixel index maps onto a stride-2^k block grid.
//   kIndex:     x' = (x + V(x)) / 2^k
//   kHalfPixel: x' = (x + 0.5 + V(x)) / 2^k - 0.5   (aligns block centers)
enum class CenterConvention { kIndex, kHalfPixel };

// Matching costs stored displacement-major: data is (2r+1)²×H×W so the volume
// feeds convolutions directly. at(y, x, d) is the logical H×W×D view.
template <typename T>
struct CostVolume {
  Tensor<T> data;
  int radius = 0;
  int block_index = 0;
  CenterConvention centers = CenterConvention::kIndex;

  int height() const { return data.dim(1); }
  int width() const { return data.dim(2); }
  int displacements() const { return data.dim(0); }
  T at(int y, int x, int d) const {
    return data[(static_cast<std::size_t>(d) * height() + y) * width() + x];
  }
};

// C_t(x, d) = <F0(x - d), F1(x + d)> with zero padding.
template <typename T>
CostVolume<T> bilateral_correlation(const Tensor<T>& f0, const Tensor<T>& f1, int radius);

// Blockwise bilateral cost volume on the fine grid of `motion`:
//   B^k(x, d) = <S0k(x'0 - d), S1k(x'1 + d)>,  x'j = (x + V_{t->j}(x)) / 2^k
// with bilinear reads at fractional centers and zero padding. s0k/s1k are
// C×(H/2^k)×(W/2^k). Differentiable in the features and both fields.
template <typename T>
CostVolume<T> bbcv(const Tensor<T>& s0k, const Tensor<T>& s1k, const BilateralField<T>& motion,
                   int block_index, int radius,
                   CenterConvention centers = CenterConvention::kIndex);

enum class VolumeMode { kFull, kBlockwise };

// Bytes needed for correlation storage at H×W. kFull: one volume of the
// given radius. kBlockwise: `blocks` volumes of the given radius, one per
// block size (all indexed on the fine grid).
std::size_t memory_report(int height, int width, int radius, VolumeMode mode,
                          std::size_t scalar_bytes = 4, int blocks = 3);

// Side of the pixel-unit window covered by a radius-r search on 2^k blocks:
// (2r+1)·2^k.
int block_window_pixels(int radius, int block_index);

}  // namespace bimotion
