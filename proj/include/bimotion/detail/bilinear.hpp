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

#include <cmath>
#include <cstdint>

#include "bimotion/core/branch_trace.hpp"

// Zero-padded bilinear reads on a single H×W plane. Coordinates are in pixel
// index units: (0, 0) is the first pixel.
namespace bimotion::detail {

template <typename T>
struct BilinearTap {
  int x0, y0;
  T ax, ay;  // fractional offsets toward x0+1, y0+1

  BilinearTap(T y, T x) {
    const T fy = std::floor(y), fx = std::floor(x);
    y0 = static_cast<int>(fy);
    x0 = static_cast<int>(fx);
    ay = y - fy;
    ax = x - fx;
    if (BranchTrace* trace = BranchTrace::active()) {
      trace->note((static_cast<std::uint64_t>(static_cast<std::uint32_t>(y0)) << 32) ^
                  static_cast<std::uint32_t>(x0));
    }
  }
};

template <typename T>
inline T pixel_or_zero(const T* plane, int h, int w, int y, int x) {
  return (y >= 0 && y < h && x >= 0 && x < w) ? plane[y * w + x] : T(0);
}

template <typename T>
inline T bilinear_read(const T* plane, int h, int w, const BilinearTap<T>& t) {
  const T v00 = pixel_or_zero(plane, h, w, t.y0, t.x0);
  const T v01 = pixel_or_zero(plane, h, w, t.y0, t.x0 + 1);
  const T v10 = pixel_or_zero(plane, h, w, t.y0 + 1, t.x0);
  const T v11 = pixel_or_zero(plane, h, w, t.y0 + 1, t.x0 + 1);
  return (T(1) - t.ay) * ((T(1) - t.ax) * v00 + t.ax * v01) +
         t.ay * ((T(1) - t.ax) * v10 + t.ax * v11);
}

// d(read)/dy and d(read)/dx at the tap.
template <typename T>
inline void bilinear_coord_grad(const T* plane, int h, int w, const BilinearTap<T>& t, T& dy,
                                T& dx) {
  const T v00 = pixel_or_zero(plane, h, w, t.y0, t.x0);
  const T v01 = pixel_or_zero(plane, h, w, t.y0, t.x0 + 1);
  const T v10 = pixel_or_zero(plane, h, w, t.y0 + 1, t.x0);
  const T v11 = pixel_or_zero(plane, h, w, t.y0 + 1, t.x0 + 1);
  dx = (T(1) - t.ay) * (v01 - v00) + t.ay * (v11 - v10);
  dy = (T(1) - t.ax) * (v10 - v00) + t.ax * (v11 - v01);
}

// Adjoint of bilinear_read: spreads g onto the in-frame corners.
template <typename T>
inline void bilinear_scatter(T* plane, int h, int w, const BilinearTap<T>& t, T g) {
  const T w00 = (T(1) - t.ay) * (T(1) - t.ax), w01 = (T(1) - t.ay) * t.ax;
  const T w10 = t.ay * (T(1) - t.ax), w11 = t.ay * t.ax;
  const int y0 = t.y0, x0 = t.x0;
  if (y0 >= 0 && y0 < h) {
    if (x0 >= 0 && x0 < w) plane[y0 * w + x0] += g * w00;
    if (x0 + 1 >= 0 && x0 + 1 < w) plane[y0 * w + x0 + 1] += g * w01;
  }
  if (y0 + 1 >= 0 && y0 + 1 < h) {
    if (x0 >= 0 && x0 < w) plane[(y0 + 1) * w + x0] += g * w10;
    if (x0 + 1 >= 0 && x0 + 1 < w) plane[(y0 + 1) * w + x0 + 1] += g * w11;
  }
}

}  // namespace bimotion::detail
