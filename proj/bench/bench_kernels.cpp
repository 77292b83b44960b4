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
// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include <vector>

#include "bimotion/core/ops.hpp"
#include "bimotion/costvol.hpp"
#include "bimotion/reference.hpp"
#include "bimotion/warp.hpp"

namespace {

using namespace bimotion;

Tensor<float> random(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<float> v(shape_numel(shape));
  for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return Tensor<float>(std::move(shape), std::move(v));
}

struct Inputs {
  Rng rng{7};
  int n;
  Tensor<float> feat0, feat1, weight, bias, flow, s0, s1;
  explicit Inputs(int size) : n(size) {
    feat0 = random(rng, {32, n, n});
    feat1 = random(rng, {32, n, n});
    weight = random(rng, {32, 32, 3, 3}, -0.1, 0.1);
    bias = random(rng, {32});
    flow = random(rng, {2, n, n}, -3.0, 3.0);
    s0 = random(rng, {32, n / 2, n / 2});
    s1 = random(rng, {32, n / 2, n / 2});
  }
};

void BM_conv2d(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(conv2d(in.feat0, in.weight, in.bias, 1, 1));
}
void BM_conv2d_reference(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(reference::conv2d(in.feat0, in.weight, in.bias, 1, 1));
}

void BM_correlation(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(bilateral_correlation(in.feat0, in.feat1, 4));
}
void BM_correlation_reference(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(reference::bilateral_correlation(in.feat0, in.feat1, 4));
}

void BM_bbcv(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  const auto motion = BilateralField<float>::from_to1(in.flow, 1);
  for (auto _ : st) benchmark::DoNotOptimize(bbcv(in.s0, in.s1, motion, 1, 2));
}
void BM_bbcv_reference(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  const auto motion = BilateralField<float>::from_to1(in.flow, 1);
  for (auto _ : st) benchmark::DoNotOptimize(reference::bbcv(in.s0, in.s1, motion.to0.data, in.flow, 1, 2));
}

void BM_backward_warp(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(backward_warp(in.feat0, in.flow));
}
void BM_backward_warp_reference(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(reference::backward_warp(in.feat0, in.flow));
}

SlidingAttentionSpec<float> sliding_spec(Inputs& in) {
  SlidingAttentionSpec<float> spec;
  spec.query = {in.feat0, 0};
  spec.keys = {{in.feat0, -1}, {in.feat1, 1}};
  spec.values = {{in.feat0, -1}, {in.feat1, 1}};
  spec.radius = 2;
  spec.heads = 4;
  spec.scale = 0.35f;
  return spec;
}

void BM_sliding_attention(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  const auto spec = sliding_spec(in);
  for (auto _ : st) benchmark::DoNotOptimize(sliding_attention(spec));
}
void BM_sliding_attention_reference(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  const auto spec = sliding_spec(in);
  for (auto _ : st) benchmark::DoNotOptimize(reference::sliding_attention(spec));
}

void BM_window_attention(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  const auto table = random(in.rng, {4, 15 * 15});
  for (auto _ : st) benchmark::DoNotOptimize(window_attention(in.feat0, in.feat1, in.feat0, table, 8, 4, 4, 0.35f));
}
void BM_window_attention_reference(benchmark::State& st) {
  Inputs in(static_cast<int>(st.range(0)));
  const auto table = random(in.rng, {4, 15 * 15});
  for (auto _ : st) {
    benchmark::DoNotOptimize(reference::window_attention(in.feat0, in.feat1, in.feat0, table, 8, 4, 4, 0.35f));
  }
}

}  // namespace

BENCHMARK(BM_conv2d)->Arg(32)->Arg(64);
BENCHMARK(BM_conv2d_reference)->Arg(32)->Arg(64);
BENCHMARK(BM_correlation)->Arg(32)->Arg(64);
BENCHMARK(BM_correlation_reference)->Arg(32)->Arg(64);
BENCHMARK(BM_bbcv)->Arg(32)->Arg(64);
BENCHMARK(BM_bbcv_reference)->Arg(32)->Arg(64);
BENCHMARK(BM_backward_warp)->Arg(32)->Arg(64);
BENCHMARK(BM_backward_warp_reference)->Arg(32)->Arg(64);
BENCHMARK(BM_sliding_attention)->Arg(32)->Arg(64);
BENCHMARK(BM_sliding_attention_reference)->Arg(32)->Arg(64);
BENCHMARK(BM_window_attention)->Arg(32)->Arg(64);
BENCHMARK(BM_window_attention_reference)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
