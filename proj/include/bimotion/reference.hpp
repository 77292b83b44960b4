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

#include <vector>

#include "bimotion/attention.hpp"

// Serial, forward-only versions of the hot kernels. They share no code with
// the parallel implementations and exist for cross-checking and benchmarks.
namespace bimotion::reference {

template <typename T>
std::vector<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride, int pad);

template <typename T>
std::vector<T> bilateral_correlation(const Tensor<T>& f0, const Tensor<T>& f1, int radius);

template <typename T>
std::vector<T> bbcv(const Tensor<T>& s0k, const Tensor<T>& s1k, const Tensor<T>& to0, const Tensor<T>& to1,
                    int block_index, int radius, CenterConvention centers = CenterConvention::kIndex);

template <typename T>
std::vector<T> backward_warp(const Tensor<T>& source, const Tensor<T>& flow);

template <typename T>
std::vector<T> sliding_attention(const SlidingAttentionSpec<T>& spec);

template <typename T>
std::vector<T> window_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                const Tensor<T>& bias_table, int window, int shift, int heads, T scale);

}  // namespace bimotion::reference
