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
#include <Eigen/Core>

#include "bimotion/core/ops.hpp"

namespace bimotion::detail {

template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, const T* b,
          T beta, T* c) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using CMap = Eigen::Map<const Mat>;
  Eigen::Map<Mat> out(c, m, n);
  if (beta == T(0)) {
    out.setZero();
  } else if (beta != T(1)) {
    out *= beta;
  }
  if (m == 0 || n == 0 || k == 0) return;
  // Stored shapes: A is m×k (or k×m when transposed), B is k×n (or n×k).
  if (!trans_a && !trans_b) {
    out.noalias() += alpha * (CMap(a, m, k) * CMap(b, k, n));
  } else if (trans_a && !trans_b) {
    out.noalias() += alpha * (CMap(a, k, m).transpose() * CMap(b, k, n));
  } else if (!trans_a && trans_b) {
    out.noalias() += alpha * (CMap(a, m, k) * CMap(b, n, k).transpose());
  } else {
    out.noalias() += alpha * (CMap(a, k, m).transpose() * CMap(b, n, k).transpose());
  }
}

template void gemm<float>(bool, bool, int, int, int, float, const float*, const float*,
                          float, float*);
template void gemm<double>(bool, bool, int, int, int, double, const double*, const double*,
                           double, double*);

}  // namespace bimotion::detail
