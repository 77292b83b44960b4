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

#include "bimotion/attention.hpp"

namespace bimotion {

// Stride-8 feature encoder: three stages of a 3×3 stride-2 conv followed by
// one windowed self-attention block.
struct EncoderConfig {
  std::array<int, 3> widths{32, 64, 96};
  std::array<int, 3> heads{2, 2, 4};
  int window = 8;
  int mlp_ratio = 2;

  static constexpr int kStride = 8;
};

struct GlobalConfig {
  EncoderConfig encoder;
  AttentionConfig attention;
  int correlation_radius = 4;
  bool scale_cost = true;  // divide the correlation by sqrt(C) before the head
  std::array<int, 2> head_widths{128, 64};

  void validate() const;
};

template <typename T>
struct GlobalOutput {
  FeatureMap<T> f0, f1;
  CostVolume<T> cost;
  Tensor<T> bilateral;  // Z_t
  BilateralField<T> motion;
};

template <typename T>
class GlobalEstimator {
 public:
  GlobalEstimator(ParamStore<T>& store, const std::string& name, const GlobalConfig& cfg, Rng& rng);

  FeatureMap<T> encode(const Tensor<T>& image) const;
  BilateralField<T> predict(const CostVolume<T>& cost, const Tensor<T>& bilateral) const;
  GlobalOutput<T> run(const Tensor<T>& frame0, const Tensor<T>& frame1) const;
  BilateralField<T> operator()(const Tensor<T>& frame0, const Tensor<T>& frame1) const {
    return run(frame0, frame1).motion;
  }

  const GlobalConfig& config() const { return cfg_; }
  const BilateralAttentionStack<T>& attention() const { return stack_; }

 private:
  GlobalConfig cfg_;
  std::vector<nn::Conv<T>> embed_;
  std::vector<SwinBlock<T>> stages_;
  BilateralAttentionStack<T> stack_;
  nn::Conv<T> head1_, head2_, head3_;
};

}  // namespace bimotion
