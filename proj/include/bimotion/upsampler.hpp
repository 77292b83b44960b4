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

#include "bimotion/costvol.hpp"
#include "bimotion/nn.hpp"
#include "bimotion/warp.hpp"

namespace bimotion {

struct UpsamplerConfig {
  int shallow_channels = 32;
  int cost_radius = 2;
  int match_channels = 32;
  std::array<int, 3> decoder_widths{96, 96, 64};
  CenterConvention centers = CenterConvention::kIndex;

  void validate() const;
};

template <typename T>
struct RefineOutput {
  BilateralField<T> motion;    // V_out
  BilateralField<T> upsampled; // ×2-rescaled V_in
  Tensor<T> residual;          // ΔV
  std::array<CostVolume<T>, 3> costs;
};

// One weight set, applied once per refinement scale. Frames passed to
// refine() are at the output scale (twice the input field's resolution).
template <typename T>
class Upsampler {
 public:
  Upsampler(ParamStore<T>& store, const std::string& name, const UpsamplerConfig& cfg, Rng& rng);

  Tensor<T> shallow_encode(const Tensor<T>& image) const;
  std::array<Tensor<T>, 3> block_embed(const Tensor<T>& features) const;
  Tensor<T> matching_features(const std::array<CostVolume<T>, 3>& costs, const Tensor<T>& motion_to1) const;

  RefineOutput<T> refine(const BilateralField<T>& input, const Tensor<T>& frame0,
                         const Tensor<T>& frame1) const;

  const UpsamplerConfig& config() const { return cfg_; }
  const nn::Conv<T>& decoder_output() const { return decoder_.back(); }

 private:
  UpsamplerConfig cfg_;
  nn::Conv<T> shallow1_, shallow2_;
  std::array<nn::Conv<T>, 3> embed_;
  std::array<nn::Conv<T>, 3> match_;
  nn::Conv<T> aggregate_;
  std::vector<nn::Conv<T>> decoder_;
};

}  // namespace bimotion
