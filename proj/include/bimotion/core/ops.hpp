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

#include "bimotion/core/tensor.hpp"

// Differentiable primitives. Feature maps are rank-3 C×H×W tensors; there is
// no batch dimension, batches are run as separate graphs.
namespace bimotion {

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& x, T s);
template <typename T> Tensor<T> neg(const Tensor<T>& x);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& x, T s);
template <typename T> Tensor<T> relu(const Tensor<T>& x);
// Exact (erf) GELU.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);

// [M,K] x [K,N] -> [M,N].
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// x: Ci×H×W, weight: Co×Ci×kh×kw, bias: Co or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride, int pad);

// Softmax over the last dimension.
template <typename T> Tensor<T> softmax(const Tensor<T>& x);

// Per-pixel normalization over the channel axis of a C×H×W map.
template <typename T>
Tensor<T> layer_norm_channels(const Tensor<T>& x, const Tensor<T>& gamma,
                              const Tensor<T>& beta, T eps = T(1e-5));

template <typename T> Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> slice_channels(const Tensor<T>& x, int begin, int end);

// Half-pixel bilinear resize with edge clamping. A ÷2 resize is exactly a 2×2
// box average.
template <typename T> Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w);
// factor×factor box average; H and W must be divisible by factor.
template <typename T> Tensor<T> avg_pool(const Tensor<T>& x, int factor);
// (C·f²)×H×W -> C×(H·f)×(W·f).
template <typename T> Tensor<T> pixel_shuffle(const Tensor<T>& x, int factor);

enum class PadMode { kZero, kReplicate };
template <typename T>
Tensor<T> pad2d(const Tensor<T>& x, int top, int bottom, int left, int right, PadMode mode);
template <typename T>
Tensor<T> crop2d(const Tensor<T>& x, int top, int left, int height, int width);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// Raw helpers shared by kernels.
namespace detail {
// Row-major C = alpha * op(A) * op(B) + beta * C.
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, const T* b,
          T beta, T* c);
}  // namespace detail

}  // namespace bimotion
