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

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bimotion/costvol.hpp"
#include "bimotion/nn.hpp"

namespace bimotion {

struct AttentionConfig {
  int channels = 96;
  int heads = 4;
  int window_radius = 4;  // sliding window for the bilateral blocks
  int swin_window = 4;    // Swin window side
  int mlp_ratio = 2;
  // Which of the three bilateral cross-attention blocks are present. The six
  // Swin blocks are always present.
  bool use_bca_no_anchor = true;
  bool use_bca_anchor_1 = true;
  bool use_bca_anchor_2 = true;

  int head_dim() const { return channels / heads; }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Sliding-window cross attention.
//
// For each pixel x, head h and displacement d in the window:
//   logit(x, d) = scale * sum_i <Q(x + qs·d), K_i(x + ks_i·d)>_h + P[h, d]
//   out_j(x)    = sum_d softmax_d(logit)(x, d) · V_j(x + vs_j·d)
// The signs (qs, ks_i, vs_j ∈ {-1, 0, +1}) select the bilateral reading
// pattern. Displacements with any read outside the frame are masked.
// ---------------------------------------------------------------------------
template <typename T>
struct Signed {
  Tensor<T> tensor;
  int sign = 0;
};

template <typename T>
struct SlidingAttentionSpec {
  Signed<T> query;
  std::vector<Signed<T>> keys;
  std::vector<Signed<T>> values;
  Tensor<T> bias;  // heads×(2r+1)², optional
  int radius = 0;
  int heads = 1;
  T scale = T(1);
};

template <typename T>
struct SlidingAttentionResult {
  // Value outputs concatenated over channels in `values` order.
  Tensor<T> output;
  // Indexed [(pixel·heads + head)·D + d]. Logits exclude the position bias.
  std::vector<T> logits;
  std::vector<T> weights;
  std::vector<std::uint8_t> valid;
};

template <typename T>
SlidingAttentionResult<T> sliding_attention(const SlidingAttentionSpec<T>& spec);

// Symmetric-pair reading of one direction: queries at x - d·s and keys/values
// at x + d·s, where s = +1 for "t <- 1" (Q from F0, K/V from F1) and s = -1
// for the reverse.
enum class SlidingMode { kSymmetricPair, kAnchor };

template <typename T>
SlidingAttentionResult<T> sliding_cross_attention(const Tensor<T>& q_src, const Tensor<T>& k_src,
                                                  const Tensor<T>& v_src, SlidingMode mode,
                                                  int sign, const Tensor<T>& bias, int radius,
                                                  int heads, T scale);

// ---------------------------------------------------------------------------
// Window self-attention with relative position bias and optional cyclic
// shift. q/k/v are C×H×W with H, W divisible by `window`. The shift is
// applied through index arithmetic, so outputs are already in the original
// (unshifted) layout.
// ---------------------------------------------------------------------------
template <typename T>
struct WindowAttentionResult {
  Tensor<T> output;
  // Indexed [(head·H·W + token)·n + j] in shifted-window token order.
  std::vector<T> weights;
  std::vector<std::uint8_t> valid;
  int tokens_per_window = 0;
};

template <typename T>
WindowAttentionResult<T> window_attention(const Tensor<T>& q, const Tensor<T>& k,
                                          const Tensor<T>& v, const Tensor<T>& bias_table,
                                          int window, int shift, int heads, T scale);

// Cyclic roll of a C×H×W map by (dy, dx); used for shift bookkeeping tests.
template <typename T>
Tensor<T> roll2d(const Tensor<T>& x, int dy, int dx);

// Region label of each position in the shifted frame; positions in different
// regions must not attend to each other.
std::vector<int> shifted_window_regions(int h, int w, int window, int shift);

// ---------------------------------------------------------------------------
// Records attention distributions produced while it is alive.
// ---------------------------------------------------------------------------
struct AttentionRecord {
  std::string kind;
  int row_length = 0;
  std::vector<double> weights;
  std::vector<std::uint8_t> valid;
};

class AttentionRecorder {
 public:
  AttentionRecorder();
  ~AttentionRecorder();
  AttentionRecorder(const AttentionRecorder&) = delete;
  AttentionRecorder& operator=(const AttentionRecorder&) = delete;

  static AttentionRecorder* active();
  std::vector<AttentionRecord> records;

 private:
  AttentionRecorder* previous_;
};

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------
template <typename T>
class SwinBlock {
 public:
  SwinBlock(ParamStore<T>& store, const std::string& name, int channels, int heads, int window,
            int mlp_ratio, Rng& rng);

  Tensor<T> operator()(const Tensor<T>& z, bool shifted) const;
  int window() const { return window_; }

 private:
  int channels_, heads_, window_;
  nn::LayerNorm<T> norm1_, norm2_;
  nn::Conv<T> qkv_, proj_;
  Tensor<T> rel_bias_;
  nn::Mlp<T> mlp_;
};

// Bilateral cross attention without anchor: Z_{1->t} (Q from F0, K/V from
// F1) and Z_{0->t} (roles reversed) are concatenated and merged through
// linear, layer norm and MLP.
template <typename T>
class BcaNoAnchor {
 public:
  BcaNoAnchor(ParamStore<T>& store, const std::string& name, const AttentionConfig& cfg, Rng& rng);

  Tensor<T> operator()(const Tensor<T>& f0, const Tensor<T>& f1) const;

  // Attended features before the merge; [Z_{0->t}, Z_{1->t}].
  std::pair<Tensor<T>, Tensor<T>> attend(const Tensor<T>& f0, const Tensor<T>& f1) const;
  Tensor<T> merge(const Tensor<T>& z0t, const Tensor<T>& z1t) const;

  const nn::Conv<T>& wq() const { return wq_; }
  const nn::Conv<T>& wk() const { return wk_; }
  const nn::Conv<T>& wv() const { return wv_; }
  const nn::LayerNorm<T>& input_norm() const { return norm_in_; }
  const Tensor<T>& position_bias() const { return pos_bias_; }

 private:
  AttentionConfig cfg_;
  nn::LayerNorm<T> norm_in_;
  nn::Conv<T> wq_, wk_, wv_;
  Tensor<T> pos_bias_;
  nn::Conv<T> merge_;
  nn::LayerNorm<T> norm_out_;
  nn::Mlp<T> mlp_;
};

// Bilateral cross attention with anchor: queries from the anchor Z_t^k,
// keys/values from F0 at x - d and F1 at x + d with shared projections, one
// softmax over the summed logits.
template <typename T>
class BcaWithAnchor {
 public:
  BcaWithAnchor(ParamStore<T>& store, const std::string& name, const AttentionConfig& cfg,
                Rng& rng);

  Tensor<T> operator()(const Tensor<T>& anchor, const Tensor<T>& f0, const Tensor<T>& f1) const;

  // [Z^anch_{0->t}; Z^anch_{1->t}] stacked over channels.
  SlidingAttentionResult<T> attend(const Tensor<T>& anchor, const Tensor<T>& f0,
                                   const Tensor<T>& f1) const;
  Tensor<T> merge(const Tensor<T>& anchor, const Tensor<T>& attended) const;

  const nn::Conv<T>& wq() const { return wq_; }
  const nn::Conv<T>& wk() const { return wk_; }
  const nn::Conv<T>& wv() const { return wv_; }
  const nn::LayerNorm<T>& anchor_norm() const { return norm_anchor_; }
  const nn::LayerNorm<T>& input_norm() const { return norm_in_; }
  const Tensor<T>& position_bias() const { return pos_bias_; }

 private:
  AttentionConfig cfg_;
  nn::LayerNorm<T> norm_anchor_, norm_in_;
  nn::Conv<T> wq_, wk_, wv_;
  Tensor<T> pos_bias_;
  nn::Conv<T> merge_;
  nn::LayerNorm<T> norm_out_;
  nn::Mlp<T> mlp_;
};

// Nine-block bilateral attention module:
//   [BCA-A, Swin, Swin(shift), BCA+A, Swin, Swin(shift), BCA+A, Swin, Swin(shift)]
// Disabled BCA blocks are skipped; with BCA-A disabled the stream is seeded
// by a 1×1 projection of concat(F0, F1).
template <typename T>
class BilateralAttentionStack {
 public:
  BilateralAttentionStack(ParamStore<T>& store, const std::string& name, const AttentionConfig& cfg,
                          Rng& rng);

  // Returns the output of every block that ran, in order; back() is Z_t.
  std::vector<Tensor<T>> run(const Tensor<T>& f0, const Tensor<T>& f1) const;
  Tensor<T> operator()(const Tensor<T>& f0, const Tensor<T>& f1) const { return run(f0, f1).back(); }

  const AttentionConfig& config() const { return cfg_; }

 private:
  AttentionConfig cfg_;
  std::unique_ptr<BcaNoAnchor<T>> bca_;
  nn::Conv<T> seed_;
  std::vector<SwinBlock<T>> swin_;
  std::unique_ptr<BcaWithAnchor<T>> anchor1_, anchor2_;
};

}  // namespace bimotion
