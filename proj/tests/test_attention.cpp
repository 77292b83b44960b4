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

#include "bimotion/attention.hpp"
#include "bimotion/gradcheck_suite.hpp"
#include "bimotion/reference.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bimotion;

namespace {

AttentionConfig small_attention() {
  AttentionConfig cfg;
  cfg.channels = 8;
  cfg.heads = 2;
  cfg.window_radius = 2;
  cfg.swin_window = 4;
  return cfg;
}

void randomize(ParamStore<double>& store, Rng& rng) {
  for (auto t : store.tensors()) {
    for (double& v : t.data_mut()) v = rng.uniform(-0.6, 0.6);
  }
}

std::vector<double> values_of(const Tensor<double>& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("BCA-A matches dense symmetric-pair attention") {
  Rng rng(31);
  const auto cfg = small_attention();
  ParamStore<double> store;
  BcaNoAnchor<double> block(store, "bca", cfg, rng);
  randomize(store, rng);
  const auto f0 = oracle::random_tensor<double>(rng, {8, 8, 8});
  const auto f1 = oracle::random_tensor<double>(rng, {8, 8, 8});
  const auto [z0t, z1t] = block.attend(f0, f1);

  const auto& ln = block.input_norm();
  const auto n0 = oracle::layer_norm(oracle::to_img(f0), ln.gamma, ln.beta);
  const auto n1 = oracle::layer_norm(oracle::to_img(f1), ln.gamma, ln.beta);
  const auto q0 = oracle::project(n0, block.wq().weight), q1 = oracle::project(n1, block.wq().weight);
  const auto k0 = oracle::project(n0, block.wk().weight), k1 = oracle::project(n1, block.wk().weight);
  const auto v0 = oracle::project(n0, block.wv().weight), v1 = oracle::project(n1, block.wv().weight);
  const auto bias = values_of(block.position_bias());
  const double scale = 1.0 / std::sqrt(4.0);
  const auto want1 = oracle::dense_sliding({&q0, -1}, {{&k1, +1}}, {{&v1, +1}}, bias, 2, 2, scale);
  const auto want0 = oracle::dense_sliding({&q1, +1}, {{&k0, -1}}, {{&v0, -1}}, bias, 2, 2, scale);
  CHECK(oracle::max_abs_diff(want1, z1t) < 1e-10);
  CHECK(oracle::max_abs_diff(want0, z0t) < 1e-10);
}

TEST_CASE("BCA+A matches dense anchored attention with one shared softmax") {
  Rng rng(32);
  const auto cfg = small_attention();
  ParamStore<double> store;
  BcaWithAnchor<double> block(store, "anchor", cfg, rng);
  randomize(store, rng);
  const auto anchor = oracle::random_tensor<double>(rng, {8, 8, 8});
  const auto f0 = oracle::random_tensor<double>(rng, {8, 8, 8});
  const auto f1 = oracle::random_tensor<double>(rng, {8, 8, 8});
  const auto res = block.attend(anchor, f0, f1);

  const auto& la = block.anchor_norm();
  const auto& ln = block.input_norm();
  const auto na = oracle::layer_norm(oracle::to_img(anchor), la.gamma, la.beta);
  const auto n0 = oracle::layer_norm(oracle::to_img(f0), ln.gamma, ln.beta);
  const auto n1 = oracle::layer_norm(oracle::to_img(f1), ln.gamma, ln.beta);
  const auto q = oracle::project(na, block.wq().weight);
  const auto k0 = oracle::project(n0, block.wk().weight), k1 = oracle::project(n1, block.wk().weight);
  const auto v0 = oracle::project(n0, block.wv().weight), v1 = oracle::project(n1, block.wv().weight);
  std::vector<double> sums;
  const auto want = oracle::dense_sliding({&q, 0}, {{&k0, -1}, {&k1, +1}}, {{&v0, -1}, {&v1, +1}},
                                          values_of(block.position_bias()), 2, 2, 1.0 / 2.0, &sums);
  CHECK(res.output.shape() == Shape{16, 8, 8});
  CHECK(oracle::max_abs_diff(want, res.output) < 1e-10);
  for (double s : sums) CHECK(std::abs(s - 1.0) < 1e-12);
}

TEST_CASE("single-window Swin attention is dense self-attention with relative bias") {
  Rng rng(33);
  const auto q = oracle::random_tensor<double>(rng, {8, 8, 8});
  const auto k = oracle::random_tensor<double>(rng, {8, 8, 8});
  const auto v = oracle::random_tensor<double>(rng, {8, 8, 8});
  const auto table = oracle::random_tensor<double>(rng, {2, 15 * 15});
  const auto res = window_attention(q, k, v, table, 8, 0, 2, 0.5);
  const auto want = oracle::dense_self_attention(oracle::to_img(q), oracle::to_img(k), oracle::to_img(v),
                                                 values_of(table), 8, 2, 0.5);
  CHECK(oracle::max_abs_diff(want, res.output) < 1e-10);
}

TEST_CASE("shifted windows match roll, mask and roll back") {
  Rng rng(34);
  for (int shift : {0, 2}) {
    const auto q = oracle::random_tensor<double>(rng, {4, 8, 12});
    const auto k = oracle::random_tensor<double>(rng, {4, 8, 12});
    const auto v = oracle::random_tensor<double>(rng, {4, 8, 12});
    const auto table = oracle::random_tensor<double>(rng, {2, 7 * 7});
    const auto res = window_attention(q, k, v, table, 4, shift, 2, 0.7);
    const auto want = oracle::swin_attention(oracle::to_img(q), oracle::to_img(k), oracle::to_img(v),
                                             values_of(table), 4, shift, 2, 0.7);
    CHECK(oracle::max_abs_diff(want, res.output) < 1e-10);
    const auto serial = reference::window_attention(q, k, v, table, 4, shift, 2, 0.7);
    CHECK(oracle::max_abs_diff(std::vector<double>(serial.begin(), serial.end()), res.output) < 1e-12);
  }
}

TEST_CASE("roll2d is a cyclic shift and its own inverse") {
  Rng rng(35);
  const auto x = oracle::random_tensor<double>(rng, {2, 3, 4});
  const auto y = roll2d(x, 1, -1);
  CHECK(y[(0 * 3 + 1) * 4 + 0] == x[(0 * 3 + 0) * 4 + 1]);
  const auto back = roll2d(y, -1, 1);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(back[i] == x[i]);
}

TEST_CASE("sliding attention agrees with the serial kernel") {
  Rng rng(36);
  SlidingAttentionSpec<double> spec;
  spec.query = {oracle::random_tensor<double>(rng, {6, 7, 5}), 0};
  spec.keys = {{oracle::random_tensor<double>(rng, {6, 7, 5}), -1}, {oracle::random_tensor<double>(rng, {6, 7, 5}), 1}};
  spec.values = {{oracle::random_tensor<double>(rng, {6, 7, 5}), -1}, {oracle::random_tensor<double>(rng, {6, 7, 5}), 1}};
  spec.bias = oracle::random_tensor<double>(rng, {3, 9});
  spec.radius = 1;
  spec.heads = 3;
  spec.scale = 0.4;
  const auto res = sliding_attention(spec);
  const auto serial = reference::sliding_attention(spec);
  CHECK(oracle::max_abs_diff(std::vector<double>(serial.begin(), serial.end()), res.output) < 1e-12);
}

TEST_CASE("a displacement reading outside the frame gets zero weight") {
  Rng rng(37);
  const auto f = oracle::random_tensor<double>(rng, {2, 3, 3});
  const auto res = sliding_cross_attention(f, f, f, SlidingMode::kSymmetricPair, 1, Tensor<double>(), 1, 1, 1.0);
  const DisplacementWindow win{1};
  // Corner pixel (0, 0): d = (1, 1) reads Q at (-1, -1).
  const std::size_t row = 0 * win.size();
  CHECK(res.valid[row + win.index(1, 1)] == 0);
  CHECK(res.weights[row + win.index(1, 1)] == 0.0);
  CHECK(res.valid[row + win.index(0, 0)] == 1);
}

TEST_CASE("every recorded attention row sums to one over unmasked entries") {
  Rng rng(38);
  auto cfg = small_attention();
  cfg.swin_window = 2;
  ParamStore<double> store;
  BilateralAttentionStack<double> stack(store, "stack", cfg, rng);
  randomize(store, rng);
  AttentionRecorder recorder;
  stack.run(oracle::random_tensor<double>(rng, {8, 6, 6}), oracle::random_tensor<double>(rng, {8, 6, 6}));
  REQUIRE(recorder.records.size() == 10);  // two BCA-A directions, six Swin, two BCA+A
  for (const auto& rec : recorder.records) {
    const std::size_t n = rec.row_length;
    for (std::size_t row = 0; row < rec.weights.size() / n; ++row) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (rec.valid[row * n + j]) {
          s += rec.weights[row * n + j];
        } else {
          CHECK(rec.weights[row * n + j] == 0.0);
        }
      }
      CHECK(std::abs(s - 1.0) < 1e-5);
    }
  }
}

TEST_CASE("attention gradients agree with central differences") {
  for (const auto& c : run_gradcheck("attention", 3)) {
    INFO(c.name << " seed " << c.seed);
    CHECK(c.error < 1e-4);
  }
}
