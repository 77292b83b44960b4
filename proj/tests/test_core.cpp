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
#include <cmath>

#include "bimotion/core/gradcheck.hpp"
#include "bimotion/core/ops.hpp"
#include "bimotion/core/parallel.hpp"
#include "bimotion/gradcheck_suite.hpp"
#include "bimotion/reference.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bimotion;

TEST_CASE("tensor arithmetic and reverse mode") {
  Tensor<double> a(Shape{3}, {1.0, 2.0, 3.0}, true);
  Tensor<double> b(Shape{3}, {4.0, 5.0, 6.0}, true);
  sum(mul(a, b)).backward();
  CHECK(a.grad()[0] == 4.0);
  CHECK(a.grad()[2] == 6.0);
  CHECK(b.grad()[1] == 2.0);
  CHECK_THROWS_AS(add(a, Tensor<double>(Shape{4})), ShapeError);
}

TEST_CASE("a tensor reused twice accumulates both paths") {
  Tensor<double> x(Shape{2}, {3.0, -1.0}, true);
  sum(add(mul(x, x), x)).backward();
  CHECK(x.grad()[0] == doctest::Approx(7.0));
  CHECK(x.grad()[1] == doctest::Approx(-1.0));
}

TEST_CASE("conv2d matches the direct sum") {
  Rng rng(3);
  for (int stride : {1, 2}) {
    for (int k : {1, 3}) {
      const auto x = oracle::random_tensor<double>(rng, {3, 7, 6});
      const auto w = oracle::random_tensor<double>(rng, {4, 3, k, k});
      const auto bias = oracle::random_tensor<double>(rng, {4});
      const int pad = k / 2;
      const auto got = conv2d(x, w, bias, stride, pad);
      const auto want = oracle::conv(oracle::to_img(x), std::vector<double>(w.data().begin(), w.data().end()),
                                     std::vector<double>(bias.data().begin(), bias.data().end()), 4, k, stride, pad);
      CHECK(got.dim(1) == want.h);
      CHECK(got.dim(2) == want.w);
      CHECK(oracle::max_abs_diff(want.v, got) < 1e-12);
      const auto serial = reference::conv2d(x, w, bias, stride, pad);
      CHECK(oracle::max_abs_diff(std::vector<double>(serial.begin(), serial.end()), got) < 1e-12);
    }
  }
}

TEST_CASE("pad then crop leaves the interior bit-identical") {
  Rng rng(4);
  const auto x = oracle::random_tensor<float>(rng, {3, 5, 7});
  for (PadMode mode : {PadMode::kZero, PadMode::kReplicate}) {
    const auto back = crop2d(pad2d(x, 2, 3, 1, 4, mode), 2, 1, 5, 7);
    REQUIRE(back.shape() == x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(back[i] == x[i]);
  }
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(5);
  const auto x = oracle::random_tensor<double>(rng, {4, 9}, -20.0, 20.0);
  const auto y = softmax(x);
  for (int r = 0; r < 4; ++r) {
    double s = 0.0;
    for (int c = 0; c < 9; ++c) s += y[r * 9 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("core gradients agree with central differences") {
  for (const auto& c : run_gradcheck("core", 5)) {
    INFO(c.name << " seed " << c.seed);
    CHECK(c.error < 1e-5);
  }
}

TEST_CASE("gradient check catches a scaled backward") {
  Rng rng(6);
  const auto x = oracle::random_tensor<double>(rng, {2, 5, 5});
  const auto w = oracle::random_tensor<double>(rng, {3, 2, 3, 3});
  const auto r = oracle::random_tensor<double>(rng, {3, 5, 5});
  std::function<Tensor<double>(const Tensor<double>&)> f = [&](const Tensor<double>& in) {
    return sum(mul(conv2d(in, w, Tensor<double>(), 1, 1), r));
  };
  CHECK(finite_difference_check(f, x) < 1e-8);
  GradientFault fault("conv2d", 1.1);
  CHECK(finite_difference_check(f, x) > 1e-2);
}

TEST_CASE("gradient check reports kink crossings") {
  Tensor<double> x(Shape{3}, {1e-5, 0.5, -0.5});
  std::function<Tensor<double>(const Tensor<double>&)> f = [](const Tensor<double>& in) { return sum(relu(in)); };
  std::size_t crossings = 0;
  finite_difference_check(f, x, 1e-4, &crossings);
  CHECK(crossings == 1);
}

TEST_CASE("thread count can be pinned and restored") {
  const int before = num_threads();
  set_num_threads(1);
  CHECK(num_threads() == 1);
  set_num_threads(before);
}
