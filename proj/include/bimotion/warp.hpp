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

#include "bimotion/fields.hpp"

namespace bimotion {

// output(x) = bilinear sample of source at x + flow(x), zero outside the
// frame. Differentiable in both source and flow.
template <typename T>
Tensor<T> backward_warp(const Tensor<T>& source, const Tensor<T>& flow);

template <typename T>
Tensor<T> backward_warp(const FeatureMap<T>& source, const MotionField<T>& flow) {
  if (source.scale != flow.scale) throw ShapeError("backward_warp: scale mismatch");
  return backward_warp(source.data, flow.data);
}

template <typename T>
struct Splat {
  Tensor<T> accumulated;  // C×H×W
  Tensor<T> weight;       // 1×H×W
};

// Bilinear splatting of every source pixel to x + flow(x). Targets outside
// the frame are dropped. Not differentiable.
template <typename T>
Splat<T> forward_warp(const Tensor<T>& source, const Tensor<T>& flow);

// accumulated / weight where weight > tau; holes stay zero.
template <typename T>
Tensor<T> normalize_splat(const Splat<T>& splat, T tau = T(1e-6));

// V_{0->t} = t * V_{0->1} (and the 1->0 analogue).
template <typename T>
MotionField<T> scale_flow(const MotionField<T>& flow, double t);

enum class Rescale { kUp2, kDown2 };

// Bilinear resize of a 2×H×W field tensor with its displacement values
// multiplied by the same factor.
template <typename T>
Tensor<T> rescale_flow(const Tensor<T>& flow, Rescale factor);

template <typename T>
MotionField<T> rescale_field(const MotionField<T>& flow, Rescale factor);

template <typename T>
BilateralField<T> rescale_bilateral(const BilateralField<T>& pair, Rescale factor) {
  auto up = rescale_flow(pair.to1.data, factor);
  const int s = factor == Rescale::kUp2 ? pair.to1.scale / 2 : pair.to1.scale * 2;
  return BilateralField<T>::from_to1(up, s);
}

}  // namespace bimotion
