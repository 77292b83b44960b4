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

#include <string>

#include "bimotion/core/ops.hpp"

namespace bimotion {

// C×H×W features; `scale` is the power-of-two denominator relative to the
// input frame (8 means 1/8 resolution).
template <typename T>
struct FeatureMap {
  Tensor<T> data;
  int scale = 1;

  int channels() const { return data.dim(0); }
  int height() const { return data.dim(1); }
  int width() const { return data.dim(2); }
};

enum class Endpoint { kTto0, kTto1, k0to1, k1to0, k0toT, k1toT };

std::string endpoint_name(Endpoint e);

// 2×H×W displacement in pixels of its own scale. Channel 0 is dx, channel 1
// is dy.
template <typename T>
struct MotionField {
  Tensor<T> data;
  int scale = 1;
  Endpoint endpoint = Endpoint::kTto1;

  int height() const { return data.dim(1); }
  int width() const { return data.dim(2); }
};

// Symmetric pair anchored at the intermediate frame: to0 = -to1.
template <typename T>
struct BilateralField {
  MotionField<T> to0;
  MotionField<T> to1;

  static BilateralField from_to1(const Tensor<T>& to1, int scale) {
    return {MotionField<T>{neg(to1), scale, Endpoint::kTto0},
            MotionField<T>{to1, scale, Endpoint::kTto1}};
  }

  // Elementwise V_{t->0} + V_{t->1} == 0 with no tolerance.
  bool symmetric() const {
    if (to0.data.shape() != to1.data.shape()) return false;
    auto a = to0.data.data();
    auto b = to1.data.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] + b[i] != T(0)) return false;
    }
    return true;
  }
};

}  // namespace bimotion
