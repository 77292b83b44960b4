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
#include "bimotion/core/params.hpp"

// Parameterized layers. Each registers its tensors under a dotted prefix in
// a ParamStore and keeps aliasing handles.
namespace bimotion::nn {

enum class WeightInit { kConv, kProjection, kZero };

template <typename T>
struct Conv {
  Tensor<T> weight;
  Tensor<T> bias;  // undefined when bias-free
  int stride = 1;
  int pad = 0;

  Conv() = default;
  Conv(ParamStore<T>& store, const std::string& name, int in, int out, int kernel, int stride_,
       int pad_, Rng& rng, bool with_bias = true, WeightInit init = WeightInit::kConv)
      : stride(stride_), pad(pad_) {
    const Init w = init == WeightInit::kConv         ? Init::kKaimingFanIn
                   : init == WeightInit::kProjection ? Init::kTruncNormal
                                                     : Init::kZeros;
    weight = store.add(name + ".weight", Shape{out, in, kernel, kernel}, w, rng);
    if (with_bias) bias = store.add(name + ".bias", Shape{out}, Init::kZeros, rng);
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, stride, pad); }
};

// 1×1 projection with truncated-normal init.
template <typename T>
Conv<T> linear(ParamStore<T>& store, const std::string& name, int in, int out, Rng& rng,
               bool with_bias = true) {
  return Conv<T>(store, name, in, out, 1, 1, 0, rng, with_bias, WeightInit::kProjection);
}

template <typename T>
struct LayerNorm {
  Tensor<T> gamma, beta;

  LayerNorm() = default;
  LayerNorm(ParamStore<T>& store, const std::string& name, int channels, Rng& rng) {
    gamma = store.add(name + ".gamma", Shape{channels}, Init::kOnes, rng);
    beta = store.add(name + ".beta", Shape{channels}, Init::kZeros, rng);
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm_channels(x, gamma, beta); }
};

template <typename T>
struct Mlp {
  Conv<T> fc1, fc2;

  Mlp() = default;
  Mlp(ParamStore<T>& store, const std::string& name, int channels, int ratio, Rng& rng)
      : fc1(linear(store, name + ".fc1", channels, channels * ratio, rng)),
        fc2(linear(store, name + ".fc2", channels * ratio, channels, rng)) {}

  Tensor<T> operator()(const Tensor<T>& x) const { return fc2(gelu(fc1(x))); }
};

}  // namespace bimotion::nn
