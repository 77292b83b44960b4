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

#include "bimotion/nn.hpp"
#include "bimotion/warp.hpp"

namespace bimotion {

struct SynthesisConfig {
  std::array<int, 3> widths{32, 64, 96};  // encoder levels at 1/2, 1/4, 1/8
  // Also feed both input frames, warped at full resolution, to the output conv.
  bool warped_frames = false;

  void validate() const;
};

// Warped encoder features of one level, in [frame 0, frame 1] order.
template <typename T>
struct SynthesisSkips {
  std::array<Tensor<T>, 3> warped0, warped1;
};

template <typename T>
class Synthesis {
 public:
  Synthesis(ParamStore<T>& store, const std::string& name, const SynthesisConfig& cfg, Rng& rng);

  // Encoder pyramid G^0..G^2 of one frame.
  std::array<Tensor<T>, 3> encode(const Tensor<T>& frame) const;
  SynthesisSkips<T> skips(const Tensor<T>& frame0, const Tensor<T>& frame1,
                          const BilateralField<T>& half_scale) const;

  // Full-resolution frame from the two inputs and a pair at 1/2 scale.
  Tensor<T> operator()(const Tensor<T>& frame0, const Tensor<T>& frame1,
                       const BilateralField<T>& half_scale) const;

  const SynthesisConfig& config() const { return cfg_; }
  const nn::Conv<T>& output_conv() const { return out_; }

 private:
  SynthesisConfig cfg_;
  std::array<nn::Conv<T>, 3> down_, enc_;
  std::array<nn::Conv<T>, 3> fuse_, dec_;
  nn::Conv<T> shuffle_, out_;
};

}  // namespace bimotion
