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
#include "bimotion/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bimotion {

void AttentionConfig::validate() const {
  if (channels <= 0 || heads <= 0 || channels % heads != 0) {
    throw std::invalid_argument("attention: channels must be a positive multiple of heads");
  }
  if (window_radius <= 0 || swin_window <= 0 || mlp_ratio <= 0) {
    throw std::invalid_argument("attention: window radius, Swin window and MLP ratio must be positive");
  }
  if (!use_bca_no_anchor && (use_bca_anchor_1 || use_bca_anchor_2)) {
    throw std::invalid_argument(
        "attention: BCA+A blocks need the BCA-A block to provide their anchor stream");
  }
}

// ---------------------------------------------------------------------------
// Recorder

namespace {
thread_local AttentionRecorder* g_recorder = nullptr;

template <typename T>
void record(const char* kind, int row_length, const std::vector<T>& w,
            const std::vector<std::uint8_t>& valid) {
  if (!g_recorder) return;
  AttentionRecord r;
  r.kind = kind;
  r.row_length = row_length;
  r.weights.assign(w.begin(), w.end());
  r.valid = valid;
  g_recorder->records.push_back(std::move(r));
}
}  // namespace

AttentionRecorder::AttentionRecorder() : previous_(g_recorder) { g_recorder = this; }
AttentionRecorder::~AttentionRecorder() { g_recorder = previous_; }
AttentionRecorder* AttentionRecorder::active() { return g_recorder; }

// ---------------------------------------------------------------------------
// Sliding-window attention

template <typename T>
SlidingAttentionResult<T> sliding_attention(const SlidingAttentionSpec<T>& spec) {
  const Tensor<T>& q = spec.query.tensor;
  if (q.rank() != 3) throw ShapeError("sliding_attention: expected C×H×W query");
  if (spec.keys.empty() || spec.values.empty()) {
    throw std::invalid_argument("sliding_attention: need at least one key and one value term");
  }
  if (spec.radius < 0) throw std::invalid_argument("sliding_attention: negative radius");
  const int heads = spec.heads;
  const int cq = q.dim(0), h = q.dim(1), w = q.dim(2);
  for (const auto& k : spec.keys) require_same_shape(q.shape(), k.tensor.shape(), "sliding_attention keys");
  const Shape vshape = spec.values[0].tensor.shape();
  for (const auto& v : spec.values) require_same_shape(vshape, v.tensor.shape(), "sliding_attention values");
  if (vshape.size() != 3 || vshape[1] != h || vshape[2] != w) {
    throw ShapeError("sliding_attention: values must match the query resolution");
  }
  const int cv = vshape[0];
  if (heads <= 0 || cq % heads || cv % heads) {
    throw std::invalid_argument("sliding_attention: channels not divisible by heads");
  }
  const bool has_bias = spec.bias.defined();
  const DisplacementWindow win{spec.radius};
  const int nd = win.size();
  if (has_bias && spec.bias.numel() != static_cast<std::size_t>(heads) * nd) {
    throw ShapeError("sliding_attention: bias must be heads×(2r+1)²");
  }

  const int nk = static_cast<int>(spec.keys.size());
  const int nv = static_cast<int>(spec.values.size());
  const int hq = cq / heads, hv = cv / heads;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t npix = plane;
  const T scale_ = spec.scale;

  std::vector<int> signs;  // query, keys..., values...
  signs.push_back(spec.query.sign);
  for (const auto& k : spec.keys) signs.push_back(k.sign);
  for (const auto& v : spec.values) signs.push_back(v.sign);

  std::vector<const T*> kp, vp;
  for (const auto& k : spec.keys) kp.push_back(k.tensor.data().data());
  for (const auto& v : spec.values) vp.push_back(v.tensor.data().data());
  const T* qp = q.data().data();
  const T* bp = has_bias ? spec.bias.data().data() : nullptr;

  SlidingAttentionResult<T> res;
  res.logits.assign(npix * heads * nd, T(0));
  res.weights.assign(npix * heads * nd, T(0));
  res.valid.assign(npix * heads * nd, 0);
  std::vector<T> out(static_cast<std::size_t>(nv) * cv * plane, T(0));

  auto offset_of = [w, plane](int y, int x, int sign, int dx, int dy, int hgt) -> long {
    const int yy = y + sign * dy, xx = x + sign * dx;
    if (yy < 0 || yy >= hgt || xx < 0 || xx >= w) return -1;
    (void)plane;
    return static_cast<long>(yy) * w + xx;
  };

#pragma omp parallel for
  for (int y = 0; y < h; ++y) {
    std::vector<long> pos(signs.size());
    std::vector<T> z(nd);
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      for (int hd = 0; hd < heads; ++hd) {
        const std::size_t row = (p * heads + hd) * nd;
        T mx = -std::numeric_limits<T>::infinity();
        for (int d = 0; d < nd; ++d) {
          const auto [dx, dy] = win.offset(d);
          bool ok = true;
          for (std::size_t s = 0; s < signs.size(); ++s) {
            pos[s] = offset_of(y, x, signs[s], dx, dy, h);
            ok = ok && pos[s] >= 0;
          }
          if (!ok) continue;
          T acc = T(0);
          for (int i = 0; i < nk; ++i) {
            for (int c = hd * hq; c < (hd + 1) * hq; ++c) {
              acc += qp[c * plane + pos[0]] * kp[i][c * plane + pos[1 + i]];
            }
          }
          acc *= scale_;
          res.logits[row + d] = acc;
          res.valid[row + d] = 1;
          z[d] = acc + (bp ? bp[hd * nd + d] : T(0));
          mx = std::max(mx, z[d]);
        }
        T den = T(0);
        for (int d = 0; d < nd; ++d) {
          if (res.valid[row + d]) den += (z[d] = std::exp(z[d] - mx));
        }
        for (int d = 0; d < nd; ++d) {
          if (!res.valid[row + d]) continue;
          const T wd = z[d] / den;
          res.weights[row + d] = wd;
          const auto [dx, dy] = win.offset(d);
          for (int j = 0; j < nv; ++j) {
            const long vpos = offset_of(y, x, signs[1 + nk + j], dx, dy, h);
            for (int c = hd * hv; c < (hd + 1) * hv; ++c) {
              out[(static_cast<std::size_t>(j) * cv + c) * plane + p] += wd * vp[j][c * plane + vpos];
            }
          }
        }
      }
    }
  }

  record("sliding", nd, res.weights, res.valid);

  std::vector<Tensor<T>> parents{q};
  for (const auto& k : spec.keys) parents.push_back(k.tensor);
  for (const auto& v : spec.values) parents.push_back(v.tensor);
  if (has_bias) parents.push_back(spec.bias);

  res.output = Tensor<T>::from_op(
      "sliding_attention", Shape{nv * cv, h, w}, std::move(out), parents,
      [weights = res.weights, valid = res.valid, signs, win, nd, nk, nv, heads, hq, hv, cv, h, w,
       plane, scale_, has_bias, offset_of](detail::Node<T>& self) {
        const T* qv = self.parents[0]->value.data();
        T* gq = self.parent_grad(0);
        std::vector<const T*> kv(nk), vv(nv);
        std::vector<T*> gk(nk), gv(nv);
        for (int i = 0; i < nk; ++i) {
          kv[i] = self.parents[1 + i]->value.data();
          gk[i] = self.parent_grad(1 + i);
        }
        for (int j = 0; j < nv; ++j) {
          vv[j] = self.parents[1 + nk + j]->value.data();
          gv[j] = self.parent_grad(1 + nk + j);
        }
        T* gb = has_bias ? self.parent_grad(1 + nk + nv) : nullptr;
        const T* g = self.grad.data();

        // Heads own disjoint channel ranges and bias rows.
#pragma omp parallel for
        for (int hd = 0; hd < heads; ++hd) {
          std::vector<T> dw(nd);
          std::vector<long> pos(signs.size());
          for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
              const std::size_t p = static_cast<std::size_t>(y) * w + x;
              const std::size_t row = (p * heads + hd) * nd;
              T s = T(0);
              for (int d = 0; d < nd; ++d) {
                dw[d] = T(0);
                if (!valid[row + d]) continue;
                const auto [dx, dy] = win.offset(d);
                T acc = T(0);
                for (int j = 0; j < nv; ++j) {
                  const long vpos = offset_of(y, x, signs[1 + nk + j], dx, dy, h);
                  for (int c = hd * hv; c < (hd + 1) * hv; ++c) {
                    acc += g[(static_cast<std::size_t>(j) * cv + c) * plane + p] * vv[j][c * plane + vpos];
                  }
                }
                dw[d] = acc;
                s += weights[row + d] * acc;
              }
              for (int d = 0; d < nd; ++d) {
                if (!valid[row + d]) continue;
                const T wd = weights[row + d];
                const T dl = wd * (dw[d] - s);
                const auto [dx, dy] = win.offset(d);
                for (std::size_t t = 0; t < signs.size(); ++t) pos[t] = offset_of(y, x, signs[t], dx, dy, h);
                if (gb) gb[hd * nd + d] += dl;
                const T dls = dl * scale_;
                for (int i = 0; i < nk; ++i) {
                  for (int c = hd * hq; c < (hd + 1) * hq; ++c) {
                    const std::size_t iq = c * plane + pos[0];
                    const std::size_t ik = c * plane + pos[1 + i];
                    if (gq) gq[iq] += dls * kv[i][ik];
                    if (gk[i]) gk[i][ik] += dls * qv[iq];
                  }
                }
                for (int j = 0; j < nv; ++j) {
                  if (!gv[j]) continue;
                  const long vpos = pos[1 + nk + j];
                  for (int c = hd * hv; c < (hd + 1) * hv; ++c) {
                    gv[j][c * plane + vpos] += wd * g[(static_cast<std::size_t>(j) * cv + c) * plane + p];
                  }
                }
              }
            }
          }
        }
      });
  return res;
}

template <typename T>
SlidingAttentionResult<T> sliding_cross_attention(const Tensor<T>& q_src, const Tensor<T>& k_src,
                                                  const Tensor<T>& v_src, SlidingMode mode,
                                                  int sign, const Tensor<T>& bias, int radius,
                                                  int heads, T scale) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("sliding_cross_attention: sign must be ±1");
  SlidingAttentionSpec<T> spec;
  spec.query = {q_src, mode == SlidingMode::kSymmetricPair ? -sign : 0};
  spec.keys = {{k_src, sign}};
  spec.values = {{v_src, sign}};
  spec.bias = bias;
  spec.radius = radius;
  spec.heads = heads;
  spec.scale = scale;
  return sliding_attention(spec);
}

// ---------------------------------------------------------------------------
// Window attention

std::vector<int> shifted_window_regions(int h, int w, int window, int shift) {
  std::vector<int> labels(static_cast<std::size_t>(h) * w, 0);
  if (shift <= 0) return labels;
  auto band = [window, shift](int v, int n) { return v < n - window ? 0 : (v < n - shift ? 1 : 2); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) labels[static_cast<std::size_t>(y) * w + x] = 3 * band(y, h) + band(x, w);
  }
  return labels;
}

namespace {

// Copies the head's channels of window `win` into an n×hd_dim row-major block.
template <typename T>
void gather_window(const std::vector<std::size_t>& orig, int n, int hd_dim, std::size_t plane,
                   const T* src, int hd, int win, T* dst) {
  for (int i = 0; i < n; ++i) {
    const std::size_t o = orig[static_cast<std::size_t>(win) * n + i];
    for (int ch = 0; ch < hd_dim; ++ch) dst[i * hd_dim + ch] = src[(hd * hd_dim + ch) * plane + o];
  }
}

}  // namespace

template <typename T>
WindowAttentionResult<T> window_attention(const Tensor<T>& q, const Tensor<T>& k,
                                          const Tensor<T>& v, const Tensor<T>& bias_table,
                                          int window, int shift, int heads, T scale) {
  if (q.rank() != 3) throw ShapeError("window_attention: expected C×H×W");
  require_same_shape(q.shape(), k.shape(), "window_attention");
  require_same_shape(q.shape(), v.shape(), "window_attention");
  const int c = q.dim(0), h = q.dim(1), w = q.dim(2);
  if (window <= 0 || h % window || w % window) {
    throw ShapeError("window_attention: " + shape_str(q.shape()) + " not divisible by window " +
                     std::to_string(window));
  }
  if (heads <= 0 || c % heads) throw std::invalid_argument("window_attention: channels not divisible by heads");
  if (shift < 0 || shift >= window) throw std::invalid_argument("window_attention: shift must lie in [0, window)");
  const int side = 2 * window - 1;
  const bool has_bias = bias_table.defined();
  if (has_bias && bias_table.numel() != static_cast<std::size_t>(heads) * side * side) {
    throw ShapeError("window_attention: bias table must be heads×(2w-1)²");
  }
  const int n = window * window;
  const int nwx = w / window;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int hd_dim = c / heads;
  const auto regions = shifted_window_regions(h, w, window, shift);

  // token t (window-major, shifted frame) -> original pixel offset and region.
  std::vector<std::size_t> orig(plane);
  std::vector<int> region(plane);
  for (std::size_t t = 0; t < plane; ++t) {
    const int win = static_cast<int>(t / n), i = static_cast<int>(t % n);
    const int sy = (win / nwx) * window + i / window;
    const int sx = (win % nwx) * window + i % window;
    orig[t] = static_cast<std::size_t>((sy + shift) % h) * w + (sx + shift) % w;
    region[t] = regions[static_cast<std::size_t>(sy) * w + sx];
  }
  auto rel = [window, side](int i, int j) {
    return (i / window - j / window + window - 1) * side + (i % window - j % window + window - 1);
  };

  WindowAttentionResult<T> res;
  res.tokens_per_window = n;
  res.weights.assign(static_cast<std::size_t>(heads) * plane * n, T(0));
  res.valid.assign(res.weights.size(), 0);
  const int windows = static_cast<int>(plane / n);
  for (std::size_t t = 0; t < plane; ++t) {
    const std::size_t base = t - t % n;
    for (int j = 0; j < n; ++j) res.valid[t * n + j] = region[base + j] == region[t];
  }
  for (int hd = 1; hd < heads; ++hd) {
    std::copy_n(res.valid.begin(), plane * n, res.valid.begin() + static_cast<std::size_t>(hd) * plane * n);
  }
  auto gather = [&](const T* src, int hd, int win, T* dst) { gather_window(orig, n, hd_dim, plane, src, hd, win, dst); };
  std::vector<T> out(q.numel(), T(0));
  const T* qp = q.data().data();
  const T* kp = k.data().data();
  const T* vp = v.data().data();
  const T* bp = has_bias ? bias_table.data().data() : nullptr;

#pragma omp parallel for collapse(2)
  for (int hd = 0; hd < heads; ++hd) {
    for (int win = 0; win < windows; ++win) {
      std::vector<T> qw(n * hd_dim), kw(n * hd_dim), vw(n * hd_dim), ow(n * hd_dim);
      gather(qp, hd, win, qw.data());
      gather(kp, hd, win, kw.data());
      gather(vp, hd, win, vw.data());
      const std::size_t row0 = (static_cast<std::size_t>(hd) * plane + static_cast<std::size_t>(win) * n) * n;
      T* a = res.weights.data() + row0;
      const unsigned char* ok = res.valid.data() + row0;
      detail::gemm(false, true, n, n, hd_dim, scale, qw.data(), kw.data(), T(0), a);
      for (int i = 0; i < n; ++i) {
        T* ai = a + i * n;
        T mx = -std::numeric_limits<T>::infinity();
        for (int j = 0; j < n; ++j) {
          if (!ok[i * n + j]) continue;
          if (bp) ai[j] += bp[hd * side * side + rel(i, j)];
          mx = std::max(mx, ai[j]);
        }
        T den = T(0);
        for (int j = 0; j < n; ++j) den += (ai[j] = ok[i * n + j] ? std::exp(ai[j] - mx) : T(0));
        for (int j = 0; j < n; ++j) ai[j] /= den;
      }
      detail::gemm(false, false, n, hd_dim, n, T(1), a, vw.data(), T(0), ow.data());
      for (int i = 0; i < n; ++i) {
        const std::size_t o = orig[static_cast<std::size_t>(win) * n + i];
        for (int ch = 0; ch < hd_dim; ++ch) out[(hd * hd_dim + ch) * plane + o] = ow[i * hd_dim + ch];
      }
    }
  }

  record("window", n, res.weights, res.valid);

  std::vector<Tensor<T>> parents{q, k, v};
  if (has_bias) parents.push_back(bias_table);
  res.output = Tensor<T>::from_op(
      "window_attention", q.shape(), std::move(out), parents,
      [weights = res.weights, orig = std::move(orig), n, heads, hd_dim, plane, windows, side, scale,
       has_bias, rel](detail::Node<T>& self) {
        const T* qv = self.parents[0]->value.data();
        const T* kv = self.parents[1]->value.data();
        const T* vv = self.parents[2]->value.data();
        T* gq = self.parent_grad(0);
        T* gk = self.parent_grad(1);
        T* gv = self.parent_grad(2);
        T* gb = has_bias ? self.parent_grad(3) : nullptr;
        const T* g = self.grad.data();
        auto gather = [&](const T* src, int hd, int win, T* dst) {
          gather_window(orig, n, hd_dim, plane, src, hd, win, dst);
        };
        // Adds an n×hd_dim block back onto the head's channels of window `win`.
        auto scatter = [&](T* dst, int hd, int win, const T* blk) {
          for (int i = 0; i < n; ++i) {
            const std::size_t o = orig[static_cast<std::size_t>(win) * n + i];
            for (int ch = 0; ch < hd_dim; ++ch) dst[(hd * hd_dim + ch) * plane + o] += blk[i * hd_dim + ch];
          }
        };
        // Per head: windows are serial so the head's bias-table slice needs no reduction.
#pragma omp parallel for
        for (int hd = 0; hd < heads; ++hd) {
          std::vector<T> qw(n * hd_dim), kw(n * hd_dim), vw(n * hd_dim), gw(n * hd_dim), tmp(n * hd_dim);
          std::vector<T> da(static_cast<std::size_t>(n) * n);
          for (int win = 0; win < windows; ++win) {
            const T* a = weights.data() + (static_cast<std::size_t>(hd) * plane + static_cast<std::size_t>(win) * n) * n;
            gather(g, hd, win, gw.data());
            gather(vv, hd, win, vw.data());
            if (gv) {
              detail::gemm(true, false, n, hd_dim, n, T(1), a, gw.data(), T(0), tmp.data());
              scatter(gv, hd, win, tmp.data());
            }
            if (!gq && !gk && !gb) continue;
            detail::gemm(false, true, n, n, hd_dim, T(1), gw.data(), vw.data(), T(0), da.data());
            for (int i = 0; i < n; ++i) {
              T s = T(0);
              for (int j = 0; j < n; ++j) s += a[i * n + j] * da[i * n + j];
              for (int j = 0; j < n; ++j) {
                const T dl = a[i * n + j] * (da[i * n + j] - s);
                da[i * n + j] = dl;
                if (gb && a[i * n + j] != T(0)) gb[hd * side * side + rel(i, j)] += dl;
              }
            }
            if (gq) {
              gather(kv, hd, win, kw.data());
              detail::gemm(false, false, n, hd_dim, n, scale, da.data(), kw.data(), T(0), tmp.data());
              scatter(gq, hd, win, tmp.data());
            }
            if (gk) {
              gather(qv, hd, win, qw.data());
              detail::gemm(true, false, n, hd_dim, n, scale, da.data(), qw.data(), T(0), tmp.data());
              scatter(gk, hd, win, tmp.data());
            }
          }
        }
      });
  return res;
}

template <typename T>
Tensor<T> roll2d(const Tensor<T>& x, int dy, int dx) {
  if (x.rank() != 3) throw ShapeError("roll2d: expected C×H×W");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<std::size_t> dst(plane);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const int ty = ((y + dy) % h + h) % h, tx = ((xx + dx) % w + w) % w;
      dst[static_cast<std::size_t>(y) * w + xx] = static_cast<std::size_t>(ty) * w + tx;
    }
  }
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (int k = 0; k < c; ++k) {
    for (std::size_t p = 0; p < plane; ++p) out[k * plane + dst[p]] = in[k * plane + p];
  }
  return Tensor<T>::from_op("roll2d", x.shape(), std::move(out), {x},
                            [dst = std::move(dst), c, plane](detail::Node<T>& self) {
    if (T* g = self.parent_grad(0)) {
      for (int k = 0; k < c; ++k) {
        for (std::size_t p = 0; p < plane; ++p) g[k * plane + p] += self.grad[k * plane + dst[p]];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Blocks

template <typename T>
SwinBlock<T>::SwinBlock(ParamStore<T>& store, const std::string& name, int channels, int heads,
                        int window, int mlp_ratio, Rng& rng)
    : channels_(channels),
      heads_(heads),
      window_(window),
      norm1_(store, name + ".norm1", channels, rng),
      norm2_(store, name + ".norm2", channels, rng),
      qkv_(nn::linear(store, name + ".qkv", channels, 3 * channels, rng)),
      proj_(nn::linear(store, name + ".proj", channels, channels, rng)),
      mlp_(store, name + ".mlp", channels, mlp_ratio, rng) {
  if (channels % heads) throw std::invalid_argument("SwinBlock: channels not divisible by heads");
  const int side = 2 * window - 1;
  rel_bias_ = store.add(name + ".rel_bias", Shape{heads, side * side}, Init::kZeros, rng);
}

template <typename T>
Tensor<T> SwinBlock<T>::operator()(const Tensor<T>& z, bool shifted) const {
  const int h = z.dim(1), w = z.dim(2);
  const int ph = (window_ - h % window_) % window_, pw = (window_ - w % window_) % window_;
  Tensor<T> x = (ph || pw) ? pad2d(z, 0, ph, 0, pw, PadMode::kZero) : z;
  const int hp = h + ph, wp = w + pw;
  const int shift = shifted && std::min(hp, wp) > window_ ? window_ / 2 : 0;

  const Tensor<T> qkv = qkv_(norm1_(x));
  const auto attn = window_attention(slice_channels(qkv, 0, channels_),
                                     slice_channels(qkv, channels_, 2 * channels_),
                                     slice_channels(qkv, 2 * channels_, 3 * channels_), rel_bias_,
                                     window_, shift, heads_,
                                     T(1) / std::sqrt(static_cast<T>(channels_ / heads_)));
  x = add(x, proj_(attn.output));
  x = add(x, mlp_(norm2_(x)));
  return (ph || pw) ? crop2d(x, 0, 0, h, w) : x;
}

template <typename T>
BcaNoAnchor<T>::BcaNoAnchor(ParamStore<T>& store, const std::string& name,
                            const AttentionConfig& cfg, Rng& rng)
    : cfg_(cfg),
      norm_in_(store, name + ".norm_in", cfg.channels, rng),
      wq_(nn::linear(store, name + ".wq", cfg.channels, cfg.channels, rng, false)),
      wk_(nn::linear(store, name + ".wk", cfg.channels, cfg.channels, rng, false)),
      wv_(nn::linear(store, name + ".wv", cfg.channels, cfg.channels, rng, false)),
      merge_(nn::linear(store, name + ".merge", 2 * cfg.channels, cfg.channels, rng)),
      norm_out_(store, name + ".norm_out", cfg.channels, rng),
      mlp_(store, name + ".mlp", cfg.channels, cfg.mlp_ratio, rng) {
  const int nd = DisplacementWindow{cfg.window_radius}.size();
  pos_bias_ = store.add(name + ".pos_bias", Shape{cfg.heads, nd}, Init::kZeros, rng);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> BcaNoAnchor<T>::attend(const Tensor<T>& f0, const Tensor<T>& f1) const {
  require_same_shape(f0.shape(), f1.shape(), "BCA-A");
  const Tensor<T> n0 = norm_in_(f0), n1 = norm_in_(f1);
  const T scale = T(1) / std::sqrt(static_cast<T>(cfg_.head_dim()));
  // Z_{1->t}: Q0(x - d)·K1(x + d), values V1(x + d).
  auto z1t = sliding_cross_attention(wq_(n0), wk_(n1), wv_(n1), SlidingMode::kSymmetricPair, +1,
                                     pos_bias_, cfg_.window_radius, cfg_.heads, scale);
  // Z_{0->t}: Q1(x + d)·K0(x - d), values V0(x - d).
  auto z0t = sliding_cross_attention(wq_(n1), wk_(n0), wv_(n0), SlidingMode::kSymmetricPair, -1,
                                     pos_bias_, cfg_.window_radius, cfg_.heads, scale);
  return {z0t.output, z1t.output};
}

template <typename T>
Tensor<T> BcaNoAnchor<T>::merge(const Tensor<T>& z0t, const Tensor<T>& z1t) const {
  const Tensor<T> y = merge_(concat_channels<T>({z0t, z1t}));
  return add(y, mlp_(norm_out_(y)));
}

template <typename T>
Tensor<T> BcaNoAnchor<T>::operator()(const Tensor<T>& f0, const Tensor<T>& f1) const {
  auto [z0t, z1t] = attend(f0, f1);
  return merge(z0t, z1t);
}

template <typename T>
BcaWithAnchor<T>::BcaWithAnchor(ParamStore<T>& store, const std::string& name,
                                const AttentionConfig& cfg, Rng& rng)
    : cfg_(cfg),
      norm_anchor_(store, name + ".norm_anchor", cfg.channels, rng),
      norm_in_(store, name + ".norm_in", cfg.channels, rng),
      wq_(nn::linear(store, name + ".wq", cfg.channels, cfg.channels, rng, false)),
      wk_(nn::linear(store, name + ".wk", cfg.channels, cfg.channels, rng, false)),
      wv_(nn::linear(store, name + ".wv", cfg.channels, cfg.channels, rng, false)),
      merge_(nn::linear(store, name + ".merge", 2 * cfg.channels, cfg.channels, rng)),
      norm_out_(store, name + ".norm_out", cfg.channels, rng),
      mlp_(store, name + ".mlp", cfg.channels, cfg.mlp_ratio, rng) {
  const int nd = DisplacementWindow{cfg.window_radius}.size();
  pos_bias_ = store.add(name + ".pos_bias", Shape{cfg.heads, nd}, Init::kZeros, rng);
}

template <typename T>
SlidingAttentionResult<T> BcaWithAnchor<T>::attend(const Tensor<T>& anchor, const Tensor<T>& f0,
                                                   const Tensor<T>& f1) const {
  require_same_shape(f0.shape(), f1.shape(), "BCA+A");
  require_same_shape(anchor.shape(), f0.shape(), "BCA+A anchor");
  const Tensor<T> na = norm_anchor_(anchor), n0 = norm_in_(f0), n1 = norm_in_(f1);
  SlidingAttentionSpec<T> spec;
  spec.query = {wq_(na), 0};
  spec.keys = {{wk_(n0), -1}, {wk_(n1), +1}};
  spec.values = {{wv_(n0), -1}, {wv_(n1), +1}};
  spec.bias = pos_bias_;
  spec.radius = cfg_.window_radius;
  spec.heads = cfg_.heads;
  spec.scale = T(1) / std::sqrt(static_cast<T>(cfg_.head_dim()));
  return sliding_attention(spec);
}

template <typename T>
Tensor<T> BcaWithAnchor<T>::merge(const Tensor<T>& anchor, const Tensor<T>& attended) const {
  const Tensor<T> y = add(anchor, merge_(attended));
  return add(y, mlp_(norm_out_(y)));
}

template <typename T>
Tensor<T> BcaWithAnchor<T>::operator()(const Tensor<T>& anchor, const Tensor<T>& f0,
                                       const Tensor<T>& f1) const {
  return merge(anchor, attend(anchor, f0, f1).output);
}

template <typename T>
BilateralAttentionStack<T>::BilateralAttentionStack(ParamStore<T>& store, const std::string& name,
                                                    const AttentionConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  if (cfg.use_bca_no_anchor) {
    bca_ = std::make_unique<BcaNoAnchor<T>>(store, name + ".bca_a", cfg, rng);
  } else {
    seed_ = nn::linear(store, name + ".seed", 2 * cfg.channels, cfg.channels, rng);
  }
  for (int i = 0; i < 6; ++i) {
    swin_.emplace_back(store, name + ".swin" + std::to_string(i), cfg.channels, cfg.heads,
                       cfg.swin_window, cfg.mlp_ratio, rng);
  }
  if (cfg.use_bca_anchor_1) anchor1_ = std::make_unique<BcaWithAnchor<T>>(store, name + ".bca_anchor1", cfg, rng);
  if (cfg.use_bca_anchor_2) anchor2_ = std::make_unique<BcaWithAnchor<T>>(store, name + ".bca_anchor2", cfg, rng);
}

template <typename T>
std::vector<Tensor<T>> BilateralAttentionStack<T>::run(const Tensor<T>& f0, const Tensor<T>& f1) const {
  require_same_shape(f0.shape(), f1.shape(), "bilateral attention");
  if (f0.dim(0) != cfg_.channels) throw ShapeError("bilateral attention: channel count mismatch");
  std::vector<Tensor<T>> outs;
  Tensor<T> z = bca_ ? (*bca_)(f0, f1) : seed_(concat_channels<T>({f0, f1}));
  if (bca_) outs.push_back(z);
  const BcaWithAnchor<T>* anchors[] = {nullptr, anchor1_.get(), anchor2_.get()};
  for (int group = 0; group < 3; ++group) {
    if (group > 0 && anchors[group]) {
      z = (*anchors[group])(z, f0, f1);
      outs.push_back(z);
    }
    z = swin_[2 * group](z, false);
    outs.push_back(z);
    z = swin_[2 * group + 1](z, true);
    outs.push_back(z);
  }
  return outs;
}

#define BIMOTION_INSTANTIATE_ATTENTION(T)                                                     \
  template SlidingAttentionResult<T> sliding_attention(const SlidingAttentionSpec<T>&);      \
  template SlidingAttentionResult<T> sliding_cross_attention(                                 \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, SlidingMode, int, const Tensor<T>&, \
      int, int, T);                                                                           \
  template WindowAttentionResult<T> window_attention(const Tensor<T>&, const Tensor<T>&,      \
                                                     const Tensor<T>&, const Tensor<T>&, int, \
                                                     int, int, T);                            \
  template Tensor<T> roll2d(const Tensor<T>&, int, int);                                      \
  template class SwinBlock<T>;                                                                \
  template class BcaNoAnchor<T>;                                                              \
  template class BcaWithAnchor<T>;                                                            \
  template class BilateralAttentionStack<T>;

BIMOTION_INSTANTIATE_ATTENTION(float)
BIMOTION_INSTANTIATE_ATTENTION(double)

}  // namespace bimotion
