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
#include "bimotion/gradcheck_suite.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "bimotion/core/gradcheck.hpp"
#include "bimotion/global_estimator.hpp"
#include "bimotion/losses.hpp"
#include "bimotion/synthesis.hpp"
#include "bimotion/upsampler.hpp"

namespace bimotion {

namespace {

using D = double;
using Fn = std::function<Tensor<D>(const Tensor<D>&)>;
constexpr double kTolerance = 1e-4;
constexpr int kMaxAttempts = 10;
constexpr double kNudge = 0.02;

Tensor<D> random(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<D> v(shape_numel(shape));
  for (D& x : v) x = rng.uniform(lo, hi);
  return Tensor<D>(std::move(shape), std::move(v));
}

// Displacements whose fractional part stays in [0.2, 0.8].
Tensor<D> random_flow(Rng& rng, int h, int w, int max_int = 2) {
  std::vector<D> v(static_cast<std::size_t>(2) * h * w);
  for (D& x : v) x = rng.uniform_int(-max_int, max_int) + rng.uniform(0.2, 0.8);
  return Tensor<D>(Shape{2, h, w}, std::move(v));
}

// Scalar readout sum(weights ⊙ op(x)) with weights drawn once.
Fn readout(const Fn& op, const Tensor<D>& x, Rng& rng) {
  const Tensor<D> w = random(rng, op(x.detach()).shape());
  return [op, w](const Tensor<D>& in) { return sum(mul(op(in), w)); };
}

void randomize(ParamStore<D>& store, Rng& rng, double scale) {
  for (auto& t : store.tensors()) {
    for (D& v : t.data_mut()) v = scale * rng.normal();
  }
}

class Suite {
 public:
  Suite(std::string module, std::uint64_t seed) : module_(std::move(module)), seed_(seed), rng_(seed) {}

  void check(const std::string& name, const Fn& op, const Tensor<D>& x) {
    check_scalar(name, readout(op, x, rng_), x);
  }
  // For ops that already return a scalar loss. A point whose stencil crosses
  // a ReLU or bilinear kink is nudged (in place, so closures that read `x`
  // follow) and checked again.
  void check_scalar(const std::string& name, const Fn& f, const Tensor<D>& x) {
    Tensor<D> point = x;
    double error = 0.0;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      std::size_t crossings = 0;
      error = finite_difference_check<D>(f, point, 1e-4, &crossings);
      if (crossings == 0) break;
      for (D& v : point.data_mut()) v += rng_.uniform(-kNudge, kNudge);
    }
    cases_.push_back({module_, name, seed_, error, kTolerance});
  }

  Rng& rng() { return rng_; }
  std::vector<GradcheckCase>& cases() { return cases_; }

 private:
  std::string module_;
  std::uint64_t seed_;
  Rng rng_;
  std::vector<GradcheckCase> cases_;
};

void core_cases(Suite& s) {
  Rng& r = s.rng();
  const Tensor<D> a = random(r, {3, 4, 5}), b = random(r, {3, 4, 5});
  s.check("add", [&](const Tensor<D>& x) { return add(x, b); }, a);
  s.check("sub", [&](const Tensor<D>& x) { return sub(b, x); }, a);
  s.check("mul", [&](const Tensor<D>& x) { return mul(x, b); }, a);
  s.check("mul_self", [](const Tensor<D>& x) { return mul(x, x); }, a);
  s.check("scale", [](const Tensor<D>& x) { return scale(x, D(-1.7)); }, a);
  s.check("neg", [](const Tensor<D>& x) { return neg(x); }, a);
  s.check("add_scalar", [](const Tensor<D>& x) { return add_scalar(x, D(0.4)); }, a);
  // Keep relu inputs away from the kink.
  Tensor<D> away = a.clone();
  for (D& v : away.data_mut()) v = v < 0 ? v - 0.1 : v + 0.1;
  s.check("relu", [](const Tensor<D>& x) { return relu(x); }, away);
  s.check("gelu", [](const Tensor<D>& x) { return gelu(x); }, a);
  s.check("sum", [](const Tensor<D>& x) { return sum(x); }, a);
  s.check("mean", [](const Tensor<D>& x) { return mean(x); }, a);
  const Tensor<D> m = random(r, {4, 6});
  s.check("matmul_lhs", [&](const Tensor<D>& x) { return matmul(x, m); }, random(r, {3, 4}));
  const Tensor<D> lhs = random(r, {2, 4});
  s.check("matmul_rhs", [&](const Tensor<D>& x) { return matmul(lhs, x); }, m);
  const Tensor<D> img = random(r, {3, 6, 7});
  const Tensor<D> w3 = random(r, {4, 3, 3, 3}), bias = random(r, {4});
  s.check("conv2d_input", [&](const Tensor<D>& x) { return conv2d(x, w3, bias, 1, 1); }, img);
  s.check("conv2d_weight", [&](const Tensor<D>& x) { return conv2d(img, x, bias, 2, 1); }, w3);
  s.check("conv2d_bias", [&](const Tensor<D>& x) { return conv2d(img, w3, x, 1, 0); }, bias);
  const Tensor<D> w1 = random(r, {5, 3, 1, 1});
  s.check("conv2d_1x1", [&](const Tensor<D>& x) { return conv2d(x, w1, Tensor<D>(), 1, 0); }, img);
  const Tensor<D> w4 = random(r, {2, 3, 2, 2});
  s.check("conv2d_patch", [&](const Tensor<D>& x) { return conv2d(x, w4, Tensor<D>(), 2, 0); }, random(r, {3, 6, 8}));
  s.check("softmax", [](const Tensor<D>& x) { return softmax(x); }, random(r, {4, 7}, -2, 2));
  const Tensor<D> gamma = random(r, {3}, 0.5, 1.5), beta = random(r, {3});
  s.check("layer_norm_input", [&](const Tensor<D>& x) { return layer_norm_channels(x, gamma, beta); }, img);
  s.check("layer_norm_gamma", [&](const Tensor<D>& x) { return layer_norm_channels(img, x, beta); }, gamma);
  s.check("layer_norm_beta", [&](const Tensor<D>& x) { return layer_norm_channels(img, gamma, x); }, beta);
  s.check("concat", [&](const Tensor<D>& x) { return concat_channels<D>({x, img, x}); }, img);
  s.check("slice", [](const Tensor<D>& x) { return slice_channels(x, 1, 3); }, img);
  s.check("resize_up", [](const Tensor<D>& x) { return resize_bilinear(x, 12, 14); }, img);
  s.check("resize_down", [](const Tensor<D>& x) { return resize_bilinear(x, 3, 5); }, img);
  s.check("avg_pool", [](const Tensor<D>& x) { return avg_pool(x, 2); }, random(r, {2, 6, 8}));
  s.check("pixel_shuffle", [](const Tensor<D>& x) { return pixel_shuffle(x, 2); }, random(r, {8, 3, 4}));
  s.check("pad_zero", [](const Tensor<D>& x) { return pad2d(x, 1, 2, 0, 3, PadMode::kZero); }, img);
  s.check("pad_replicate", [](const Tensor<D>& x) { return pad2d(x, 2, 1, 3, 0, PadMode::kReplicate); }, img);
  s.check("crop", [](const Tensor<D>& x) { return crop2d(x, 1, 2, 4, 3); }, img);
  s.check("reshape", [](const Tensor<D>& x) { return reshape(x, Shape{12, 5}); }, a);
  s.check("roll2d", [](const Tensor<D>& x) { return roll2d(x, -2, 3); }, img);
}

void warp_cases(Suite& s) {
  Rng& r = s.rng();
  const Tensor<D> src = random(r, {3, 8, 8});
  const Tensor<D> flow = random_flow(r, 8, 8);
  s.check("backward_warp_source", [&](const Tensor<D>& x) { return backward_warp(x, flow); }, src);
  s.check("backward_warp_flow", [&](const Tensor<D>& x) { return backward_warp(src, x); }, flow);
  s.check("rescale_up", [](const Tensor<D>& x) { return rescale_flow(x, Rescale::kUp2); }, flow);
  s.check("rescale_down", [](const Tensor<D>& x) { return rescale_flow(x, Rescale::kDown2); }, flow);
  // Residuals stay outside the Charbonnier bend (|x| ~ eps).
  Tensor<D> target = backward_warp(src, flow).detach().clone();
  for (D& v : target.data_mut()) v += (r.uniform() < 0.5 ? -1 : 1) * r.uniform(0.05, 0.5);
  s.check_scalar("charbonnier_of_warp", [&](const Tensor<D>& x) {
    return charbonnier(sub(target, backward_warp(src, x)));
  }, flow);
}

void costvol_cases(Suite& s) {
  Rng& r = s.rng();
  const Tensor<D> f0 = random(r, {4, 6, 7}), f1 = random(r, {4, 6, 7});
  s.check("correlation_f0", [&](const Tensor<D>& x) { return bilateral_correlation(x, f1, 2).data; }, f0);
  s.check("correlation_f1", [&](const Tensor<D>& x) { return bilateral_correlation(f0, x, 2).data; }, f1);
  const Tensor<D> v = random_flow(r, 8, 8, 1);
  for (int k = 0; k < 3; ++k) {
    const int n = 8 >> k;
    const Tensor<D> s0 = random(r, {3, n, n}), s1 = random(r, {3, n, n});
    const std::string tag = "bbcv_k" + std::to_string(k);
    s.check(tag + "_s0", [&, k](const Tensor<D>& x) {
      return bbcv(x, s1, BilateralField<D>::from_to1(v, 1), k, 2).data;
    }, s0);
    s.check(tag + "_s1", [&, k](const Tensor<D>& x) {
      return bbcv(s0, x, BilateralField<D>::from_to1(v, 1), k, 2).data;
    }, s1);
    s.check(tag + "_motion", [&, k](const Tensor<D>& x) {
      return bbcv(s0, s1, BilateralField<D>::from_to1(x, 1), k, 2).data;
    }, v);
  }
}

AttentionConfig small_attention() {
  AttentionConfig cfg;
  cfg.channels = 8;
  cfg.heads = 2;
  cfg.window_radius = 1;
  cfg.swin_window = 4;
  cfg.mlp_ratio = 2;
  return cfg;
}

void attention_cases(Suite& s) {
  Rng& r = s.rng();
  const int c = 8, n = 8;
  const Tensor<D> q = random(r, {c, n, n}), k0 = random(r, {c, n, n}), k1 = random(r, {c, n, n});
  const Tensor<D> v0 = random(r, {c, n, n}), v1 = random(r, {c, n, n}), bias = random(r, {2, 25});
  auto spec = [&](const Tensor<D>& qq, const Tensor<D>& kk, const Tensor<D>& vv, const Tensor<D>& bb) {
    SlidingAttentionSpec<D> sp;
    sp.query = {qq, 0};
    sp.keys = {{kk, -1}, {k1, +1}};
    sp.values = {{vv, -1}, {v1, +1}};
    sp.bias = bb;
    sp.radius = 2;
    sp.heads = 2;
    sp.scale = 0.5;
    return sliding_attention(sp).output;
  };
  s.check("sliding_query", [&](const Tensor<D>& x) { return spec(x, k0, v0, bias); }, q);
  s.check("sliding_key", [&](const Tensor<D>& x) { return spec(q, x, v0, bias); }, k0);
  s.check("sliding_value", [&](const Tensor<D>& x) { return spec(q, k0, x, bias); }, v0);
  s.check("sliding_bias", [&](const Tensor<D>& x) { return spec(q, k0, v0, x); }, bias);
  s.check("sliding_pair", [&](const Tensor<D>& x) {
    return sliding_cross_attention(x, k1, v1, SlidingMode::kSymmetricPair, +1, bias, 2, 2, D(0.5)).output;
  }, q);

  const Tensor<D> table = random(r, {2, 49});
  for (int shift : {0, 2}) {
    const std::string tag = "window_shift" + std::to_string(shift);
    s.check(tag + "_q", [&, shift](const Tensor<D>& x) { return window_attention(x, k0, v0, table, 4, shift, 2, D(0.5)).output; }, q);
    s.check(tag + "_k", [&, shift](const Tensor<D>& x) { return window_attention(q, x, v0, table, 4, shift, 2, D(0.5)).output; }, k0);
    s.check(tag + "_v", [&, shift](const Tensor<D>& x) { return window_attention(q, k0, x, table, 4, shift, 2, D(0.5)).output; }, v0);
    s.check(tag + "_bias", [&, shift](const Tensor<D>& x) { return window_attention(q, k0, v0, x, 4, shift, 2, D(0.5)).output; }, table);
  }

  ParamStore<D> store;
  const AttentionConfig cfg = small_attention();
  BcaNoAnchor<D> bca(store, "bca", cfg, r);
  BcaWithAnchor<D> anchor(store, "anchor", cfg, r);
  SwinBlock<D> swin(store, "swin", c, 2, 4, 2, r);
  AttentionConfig stack_cfg = cfg;
  BilateralAttentionStack<D> stack(store, "stack", stack_cfg, r);
  randomize(store, r, 0.3);
  s.check("bca_no_anchor_f0", [&](const Tensor<D>& x) { return bca(x, k1); }, k0);
  s.check("bca_no_anchor_f1", [&](const Tensor<D>& x) { return bca(k0, x); }, k1);
  s.check("bca_no_anchor_wq", [&](const Tensor<D>& x) { (void)x; return bca(k0, k1); }, bca.wq().weight);
  s.check("bca_no_anchor_bias", [&](const Tensor<D>& x) { (void)x; return bca(k0, k1); }, bca.position_bias());
  s.check("bca_anchor_anchor", [&](const Tensor<D>& x) { return anchor(x, k0, k1); }, q);
  s.check("bca_anchor_f1", [&](const Tensor<D>& x) { return anchor(q, k0, x); }, k1);
  s.check("bca_anchor_wk", [&](const Tensor<D>& x) { (void)x; return anchor(q, k0, k1); }, anchor.wk().weight);
  s.check("swin", [&](const Tensor<D>& x) { return swin(x, false); }, q);
  s.check("swin_shifted", [&](const Tensor<D>& x) { return swin(x, true); }, q);
  s.check("swin_padded", [&](const Tensor<D>& x) { return swin(x, true); }, random(r, {c, 6, 7}));
  s.check("stack", [&](const Tensor<D>& x) { return stack(x, k1); }, k0);
}

GlobalConfig small_global() {
  GlobalConfig cfg;
  cfg.encoder.widths = {4, 8, 8};
  cfg.encoder.heads = {1, 2, 2};
  cfg.encoder.window = 4;
  cfg.attention = small_attention();
  cfg.correlation_radius = 1;
  cfg.head_widths = {8, 8};
  return cfg;
}

void global_cases(Suite& s) {
  Rng& r = s.rng();
  ParamStore<D> store;
  GlobalEstimator<D> net(store, "biformer", small_global(), r);
  randomize(store, r, 0.3);
  const Tensor<D> i0 = random(r, {3, 32, 32}, 0, 1), i1 = random(r, {3, 32, 32}, 0, 1);
  s.check("encode", [&](const Tensor<D>& x) { return net.encode(x).data; }, i0);
  const auto out = net.run(i0, i1);
  const Tensor<D> cost = out.cost.data.detach(), z = out.bilateral.detach();
  s.check("head_cost", [&](const Tensor<D>& x) {
    return net.predict(CostVolume<D>{x, 1, 0, CenterConvention::kIndex}, z).to1.data;
  }, cost);
  s.check("head_bilateral", [&](const Tensor<D>& x) {
    return net.predict(CostVolume<D>{cost, 1, 0, CenterConvention::kIndex}, x).to1.data;
  }, z);
  s.check("biformer_frame1", [&](const Tensor<D>& x) { return net(i0, x).to1.data; }, i1);
}

UpsamplerConfig small_upsampler() {
  UpsamplerConfig cfg;
  cfg.shallow_channels = 4;
  cfg.match_channels = 4;
  cfg.decoder_widths = {8, 8, 8};
  return cfg;
}

void upsampler_cases(Suite& s) {
  Rng& r = s.rng();
  ParamStore<D> store;
  Upsampler<D> up(store, "upsampler", small_upsampler(), r);
  randomize(store, r, 0.3);
  // Small grids keep ReLU and bilinear kinks out of the ±eps stencil.
  const Tensor<D> i0 = random(r, {3, 8, 8}, 0, 1), i1 = random(r, {3, 8, 8}, 0, 1);
  const Tensor<D> vin = random_flow(r, 4, 4, 1);
  s.check("shallow_encode", [&](const Tensor<D>& x) { return up.shallow_encode(x); }, i0);
  s.check("block_embed", [&](const Tensor<D>& x) {
    const auto b = up.block_embed(x);
    return concat_channels<D>({reshape(b[0], Shape{static_cast<int>(b[0].numel()), 1, 1}),
                               reshape(b[1], Shape{static_cast<int>(b[1].numel()), 1, 1}),
                               reshape(b[2], Shape{static_cast<int>(b[2].numel()), 1, 1})});
  }, random(r, {4, 16, 16}));
  const Tensor<D> vt = random_flow(r, 16, 16, 1);
  std::array<CostVolume<D>, 3> costs;
  for (auto& c : costs) c = CostVolume<D>{random(r, {25, 16, 16}), 2, 0, CenterConvention::kIndex};
  s.check("matching_costs", [&](const Tensor<D>& x) {
    auto cs = costs;
    cs[1].data = x;
    return up.matching_features(cs, vt);
  }, costs[1].data);
  s.check("matching_motion", [&](const Tensor<D>& x) { return up.matching_features(costs, x); }, vt);
  s.check("refine_frame0", [&](const Tensor<D>& x) {
    return up.refine(BilateralField<D>::from_to1(vin, 4), x, i1).motion.to1.data;
  }, i0);
  s.check("refine_motion", [&](const Tensor<D>& x) {
    return up.refine(BilateralField<D>::from_to1(x, 4), i0, i1).motion.to1.data;
  }, vin);
}

void synthesis_cases(Suite& s) {
  Rng& r = s.rng();
  ParamStore<D> store;
  SynthesisConfig cfg;
  cfg.widths = {4, 8, 8};
  cfg.warped_frames = true;
  Synthesis<D> syn(store, "synthesis", cfg, r);
  randomize(store, r, 0.3);
  const Tensor<D> i0 = random(r, {3, 16, 16}, 0, 1), i1 = random(r, {3, 16, 16}, 0, 1);
  const Tensor<D> v = random_flow(r, 8, 8, 1);
  s.check("synthesize_frame0", [&](const Tensor<D>& x) { return syn(x, i1, BilateralField<D>::from_to1(v, 2)); }, i0);
  s.check("synthesize_motion", [&](const Tensor<D>& x) { return syn(i0, i1, BilateralField<D>::from_to1(x, 2)); }, v);
  s.check("synthesize_output_conv", [&](const Tensor<D>& x) {
    (void)x;
    return syn(i0, i1, BilateralField<D>::from_to1(v, 2));
  }, syn.output_conv().weight);
}

// Low-contrast sum of random plane waves: no flat regions (which would give
// exactly-zero gradients), and a 1e-4 flow step moves intensities far less
// than the census curvature scale.
Tensor<D> smooth_frame(Rng& rng, int size, double contrast) {
  std::vector<D> v(static_cast<std::size_t>(3) * size * size, 0.5);
  for (int c = 0; c < 3; ++c) {
    for (int wave = 0; wave < 3; ++wave) {
      const double fx = rng.uniform(0.2, 0.6), fy = rng.uniform(0.2, 0.6), phase = rng.uniform(0.0, 6.3);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          v[(static_cast<std::size_t>(c) * size + y) * size + x] += contrast / 3 * std::sin(fx * x + fy * y + phase);
        }
      }
    }
  }
  return Tensor<D>(Shape{3, size, size}, std::move(v));
}

void losses_cases(Suite& s) {
  Rng& r = s.rng();
  // Keep Charbonnier inputs well outside its eps-wide bend.
  Tensor<D> residual = random(r, {3, 16, 16});
  for (D& x : residual.data_mut()) x = x < 0 ? x - 0.05 : x + 0.05;
  s.check_scalar("charbonnier", [](const Tensor<D>& x) { return charbonnier(x); }, residual);
  const Tensor<D> rgb = random(r, {3, 12, 12}, 0, 1);
  s.check("luma_rgb", [](const Tensor<D>& x) { return census_intensity(x); }, rgb);
  s.check("luma_gray", [](const Tensor<D>& x) { return census_intensity(x); }, random(r, {1, 12, 12}, 0, 1));
  // Intensity units, spread over a few squash widths.
  const Tensor<D> ia = random(r, {1, 12, 12}, 0, 2), ib = random(r, {1, 12, 12}, 0, 2);
  s.check_scalar("census_a", [&](const Tensor<D>& x) { return census_distance(x, ib); }, ia);
  s.check_scalar("census_b", [&](const Tensor<D>& x) { return census_distance(ia, x); }, ib);
  const Tensor<D> gt = smooth_frame(r, 16, 0.02);
  const Tensor<D> f0 = smooth_frame(r, 16, 0.02), f1 = smooth_frame(r, 16, 0.02);
  const Tensor<D> v = random_flow(r, 16, 16, 1);
  s.check_scalar("photometric_motion", [&](const Tensor<D>& x) {
    return photometric_loss(gt, f0, f1, BilateralField<D>::from_to1(x, 1));
  }, v);
  s.check_scalar("synthesis_loss_through_warp", [&](const Tensor<D>& x) {
    return synthesis_loss(gt, backward_warp(f0, x));
  }, v);
  // Prediction produced by a small linear head, as in training.
  const Tensor<D> w = random(r, {3, 3, 1, 1}), detail = add_scalar(f1, D(-0.5)).detach();
  s.check_scalar("synthesis_loss_head", [&](const Tensor<D>& x) {
    return synthesis_loss(gt, add(f0, conv2d(detail, x, Tensor<D>(), 1, 0)));
  }, w);
}

const std::vector<std::pair<std::string, void (*)(Suite&)>>& registry() {
  static const std::vector<std::pair<std::string, void (*)(Suite&)>> r = {
      {"core", core_cases},           {"warp", warp_cases},           {"costvol", costvol_cases},
      {"attention", attention_cases}, {"global", global_cases},       {"upsampler", upsampler_cases},
      {"synthesis", synthesis_cases}, {"losses", losses_cases},
  };
  return r;
}

}  // namespace

std::vector<std::string> gradcheck_modules() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : registry()) out.push_back(name);
  return out;
}

std::vector<GradcheckCase> run_gradcheck(const std::string& module, int seeds, std::uint64_t base_seed) {
  if (seeds <= 0) throw std::invalid_argument("run_gradcheck: seeds must be positive");
  std::vector<GradcheckCase> out;
  bool found = false;
  for (const auto& [name, fn] : registry()) {
    if (!module.empty() && module != "all" && module != name) continue;
    found = true;
    for (int i = 0; i < seeds; ++i) {
      Suite suite(name, base_seed + static_cast<std::uint64_t>(i));
      fn(suite);
      out.insert(out.end(), suite.cases().begin(), suite.cases().end());
    }
  }
  if (!found) throw std::invalid_argument("run_gradcheck: unknown module '" + module + "'");
  return out;
}

}  // namespace bimotion
