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

struct LossConfig {
  double alpha = 0.5;  // Charbonnier exponent
  double eps = 1e-3;   // Charbonnier offset
  int census_patch = 7;
  double census_squash = 0.81;     // d / sqrt(squash + d²)
  double census_hamming = 0.1;     // Δ² / (hamming + Δ²)
  double census_robust_eps = 1e-3; // sqrt(h² + e²) - e
  double census_intensity = 255.0; // luma is scaled to [0, 255] before differencing

  void validate() const;
};

// mean((x² + eps²)^alpha)
template <typename T>
Tensor<T> charbonnier(const Tensor<T>& x, const LossConfig& cfg = {});

// Luma of a 3×H×W image (or a 1×H×W grey image) in intensity units, 1×H×W.
template <typename T>
Tensor<T> census_intensity(const Tensor<T>& img, const LossConfig& cfg = {});

// Soft ternary census distance between two 1×H×W intensity images, averaged
// over pixels whose patch lies inside the frame.
template <typename T>
Tensor<T> census_distance(const Tensor<T>& a, const Tensor<T>& b, const LossConfig& cfg = {});

// census_distance of the intensities of `a` and `b`.
template <typename T>
Tensor<T> census_loss(const Tensor<T>& a, const Tensor<T>& b, const LossConfig& cfg = {});

// Charbonnier + census terms for both frames warped to the target by the
// bilateral pair; the pair must be symmetric and at the target resolution.
template <typename T>
Tensor<T> photometric_loss(const Tensor<T>& target, const Tensor<T>& frame0,
                           const Tensor<T>& frame1, const BilateralField<T>& motion,
                           const LossConfig& cfg = {});

template <typename T>
Tensor<T> synthesis_loss(const Tensor<T>& target, const Tensor<T>& prediction,
                         const LossConfig& cfg = {});

}  // namespace bimotion
