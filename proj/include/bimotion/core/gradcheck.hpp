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

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include "bimotion/core/branch_trace.hpp"
#include "bimotion/core/tensor.hpp"

namespace bimotion {

// Compares the reverse-mode gradient of scalar `f` at `x` with central
// differences. `x` is perturbed in place (it may be an input or a parameter
// that `f` reads through a closure) and restored afterwards.
//
// Returns max_i |analytic_i - numeric_i| / (|analytic_i| + |numeric_i| + 1e-12).
// If `crossings` is given, it receives the number of coordinates whose
// stencil x_i ± eps changes a ReLU sign or bilinear cell; their central
// differences straddle a kink and do not measure the gradient.
template <typename T>
double finite_difference_check(const std::function<Tensor<T>(const Tensor<T>&)>& f,
                               Tensor<T> x, double eps = 1e-4, std::size_t* crossings = nullptr) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_difference_check: eps must be positive");
  const bool had_grad = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();

  Tensor<T> y = f(x);
  if (y.numel() != 1) throw ShapeError("finite_difference_check: f must return a scalar");
  y.backward();
  std::vector<T> analytic(x.grad().begin(), x.grad().end());
  if (analytic.empty()) analytic.assign(x.numel(), T(0));

  std::uint64_t digest = 0;
  auto eval = [&]() {
    std::optional<BranchTrace> trace;
    if (crossings) trace.emplace();
    const double v = static_cast<double>(f(x).item());
    if (!std::isfinite(v)) throw NumericError("finite_difference_check: f returned non-finite");
    if (trace) digest = trace->digest();
    return v;
  };
  if (crossings) *crossings = 0;

  double worst = 0.0;
  auto data = x.data_mut();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const T saved = data[i];
    data[i] = static_cast<T>(saved + eps);
    const double up = eval();
    const std::uint64_t up_digest = digest;
    data[i] = static_cast<T>(saved - eps);
    const double down = eval();
    if (crossings && digest != up_digest) ++*crossings;
    data[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = static_cast<double>(analytic[i]);
    const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
    worst = std::max(worst, err);
  }
  x.zero_grad();
  x.set_requires_grad(had_grad);
  return worst;
}

}  // namespace bimotion
