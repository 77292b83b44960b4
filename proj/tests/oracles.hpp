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
// Brute-force test oracles. Everything here is written from the definitions
// with plain loops over std::vector and shares no code with the library
// kernels (nor with bimotion::reference).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bimotion/core/params.hpp"
#include "bimotion/core/tensor.hpp"

namespace oracle {

using bimotion::Rng;
using bimotion::Shape;
using bimotion::Tensor;

// Plain C×H×W image.
struct Img {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Img() = default;
  Img(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}
  double& at(int k, int y, int x) { return v[(static_cast<std::size_t>(k) * h + y) * w + x]; }
  double at(int k, int y, int x) const { return v[(static_cast<std::size_t>(k) * h + y) * w + x]; }
  double get0(int k, int y, int x) const {  // zero outside
    return (y < 0 || y >= h || x < 0 || x >= w) ? 0.0 : at(k, y, x);
  }
  bool inside(int y, int x) const { return y >= 0 && y < h && x >= 0 && x < w; }
};

template <typename T>
Img to_img(const Tensor<T>& t) {
  Img out(t.dim(0), t.dim(1), t.dim(2));
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = static_cast<double>(t[i]);
  return out;
}

template <typename T>
Tensor<T> random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<T> v(bimotion::shape_numel(shape));
  for (T& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return Tensor<T>(std::move(shape), std::move(v));
}

template <typename T>
double max_abs_diff(const std::vector<double>& a, const Tensor<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - static_cast<double>(b[i])));
  return m;
}

// max |a - b| / max(1, max |a|)
template <typename T>
double rel_diff(const std::vector<double>& a, const Tensor<T>& b) {
  double scale = 1.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  return max_abs_diff(a, b) / scale;
}

// Bilinear read with zero outside, from the textbook four-neighbour formula.
inline double bilinear(const Img& im, int k, double y, double x) {
  const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
  const double wy = y - y0, wx = x - x0;
  return (1 - wy) * (1 - wx) * im.get0(k, y0, x0) + (1 - wy) * wx * im.get0(k, y0, x0 + 1) +
         wy * (1 - wx) * im.get0(k, y0 + 1, x0) + wy * wx * im.get0(k, y0 + 1, x0 + 1);
}

// Cross-correlation with zero padding; weight is Co×Ci×k×k.
inline Img conv(const Img& x, const std::vector<double>& wt, const std::vector<double>& bias, int co, int k,
                int stride, int pad) {
  const int ho = (x.h + 2 * pad - k) / stride + 1, wo = (x.w + 2 * pad - k) / stride + 1;
  Img out(co, ho, wo);
  for (int o = 0; o < co; ++o)
    for (int y = 0; y < ho; ++y)
      for (int xx = 0; xx < wo; ++xx) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (int i = 0; i < x.c; ++i)
          for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v)
              acc += wt[((static_cast<std::size_t>(o) * x.c + i) * k + u) * k + v] *
                     x.get0(i, y * stride - pad + u, xx * stride - pad + v);
        out.at(o, y, xx) = acc;
      }
  return out;
}

// 1×1 projection out = W · x (W is Co×Ci).
template <typename T>
Img project(const Img& x, const Tensor<T>& weight) {
  const int co = weight.dim(0);
  Img out(co, x.h, x.w);
  for (int o = 0; o < co; ++o)
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) {
        double acc = 0.0;
        for (int i = 0; i < x.c; ++i) acc += static_cast<double>(weight[static_cast<std::size_t>(o) * x.c + i]) * x.at(i, y, xx);
        out.at(o, y, xx) = acc;
      }
  return out;
}

// Per-pixel channel normalization, biased variance.
template <typename T>
Img layer_norm(const Img& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps = 1e-5) {
  Img out(x.c, x.h, x.w);
  for (int y = 0; y < x.h; ++y)
    for (int xx = 0; xx < x.w; ++xx) {
      double m = 0.0, s = 0.0;
      for (int k = 0; k < x.c; ++k) m += x.at(k, y, xx);
      m /= x.c;
      for (int k = 0; k < x.c; ++k) s += (x.at(k, y, xx) - m) * (x.at(k, y, xx) - m);
      s /= x.c;
      for (int k = 0; k < x.c; ++k) {
        out.at(k, y, xx) = (x.at(k, y, xx) - m) / std::sqrt(s + eps) * static_cast<double>(gamma[k]) +
                           static_cast<double>(beta[k]);
      }
    }
  return out;
}

// C(x, d) = <F0(x - d), F1(x + d)>, zero padding; layout d×H×W, d row-major.
inline std::vector<double> correlation(const Img& f0, const Img& f1, int r) {
  const int side = 2 * r + 1;
  std::vector<double> out(static_cast<std::size_t>(side) * side * f0.h * f0.w, 0.0);
  for (int y = 0; y < f0.h; ++y)
    for (int x = 0; x < f0.w; ++x)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          double acc = 0.0;
          for (int k = 0; k < f0.c; ++k) acc += f0.get0(k, y - dy, x - dx) * f1.get0(k, y + dy, x + dx);
          out[((static_cast<std::size_t>(dy + r) * side + dx + r) * f0.h + y) * f0.w + x] = acc;
        }
  return out;
}

// Blockwise bilateral volume on the fine grid of the fields (2×H×W each):
//   B(x, d) = <S0(c0 - d), S1(c1 + d)>, cj = (x + Vj(x)) / 2^k.
inline std::vector<double> blockwise(const Img& s0, const Img& s1, const Img& to0, const Img& to1, int k,
                                     int r, bool half_pixel = false) {
  const int side = 2 * r + 1, h = to1.h, w = to1.w;
  const double div = std::pow(2.0, k), off = half_pixel ? 0.5 : 0.0;
  std::vector<double> out(static_cast<std::size_t>(side) * side * h * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double c0x = (x + off + to0.at(0, y, x)) / div - off, c0y = (y + off + to0.at(1, y, x)) / div - off;
      const double c1x = (x + off + to1.at(0, y, x)) / div - off, c1y = (y + off + to1.at(1, y, x)) / div - off;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          double acc = 0.0;
          for (int c = 0; c < s0.c; ++c) acc += bilinear(s0, c, c0y - dy, c0x - dx) * bilinear(s1, c, c1y + dy, c1x + dx);
          out[((static_cast<std::size_t>(dy + r) * side + dx + r) * h + y) * w + x] = acc;
        }
    }
  return out;
}

inline std::vector<double> warp(const Img& src, const Img& flow) {
  Img out(src.c, src.h, src.w);
  for (int k = 0; k < src.c; ++k)
    for (int y = 0; y < src.h; ++y)
      for (int x = 0; x < src.w; ++x) out.at(k, y, x) = bilinear(src, k, y + flow.at(1, y, x), x + flow.at(0, y, x));
  return out.v;
}

// One term of a dense sliding-window attention: a reading tensor and the
// sign applied to the displacement.
struct Read {
  const Img* img;
  int sign;
};

// out_j(x) = sum_d softmax_d(scale*sum_i <Q(x+qs d), K_i(x+ks_i d)>_h + P[h,d]) V_j(x+vs_j d),
// dropping displacements with any read outside the frame. Output is the
// value outputs stacked over channels. Also reports every softmax row sum.
inline std::vector<double> dense_sliding(const Read& q, const std::vector<Read>& keys,
                                         const std::vector<Read>& values, const std::vector<double>& bias,
                                         int r, int heads, double scale, std::vector<double>* row_sums = nullptr) {
  const int c = q.img->c, h = q.img->h, w = q.img->w, hq = c / heads;
  const int cv = values[0].img->c, hv = cv / heads, side = 2 * r + 1, nd = side * side;
  std::vector<double> out(values.size() * cv * h * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int hd = 0; hd < heads; ++hd) {
        std::vector<double> logit(nd, 0.0);
        std::vector<bool> ok(nd, false);
        double mx = -std::numeric_limits<double>::infinity();
        for (int d = 0; d < nd; ++d) {
          const int dx = d % side - r, dy = d / side - r;
          bool valid = q.img->inside(y + q.sign * dy, x + q.sign * dx);
          for (const Read& k : keys) valid = valid && k.img->inside(y + k.sign * dy, x + k.sign * dx);
          for (const Read& v : values) valid = valid && v.img->inside(y + v.sign * dy, x + v.sign * dx);
          if (!valid) continue;
          double acc = 0.0;
          for (const Read& k : keys)
            for (int ch = hd * hq; ch < (hd + 1) * hq; ++ch)
              acc += q.img->at(ch, y + q.sign * dy, x + q.sign * dx) * k.img->at(ch, y + k.sign * dy, x + k.sign * dx);
          logit[d] = scale * acc + (bias.empty() ? 0.0 : bias[hd * nd + d]);
          ok[d] = true;
          mx = std::max(mx, logit[d]);
        }
        double den = 0.0;
        for (int d = 0; d < nd; ++d) den += ok[d] ? std::exp(logit[d] - mx) : 0.0;
        double total = 0.0;
        for (int d = 0; d < nd; ++d) {
          if (!ok[d]) continue;
          const double a = std::exp(logit[d] - mx) / den;
          total += a;
          const int dx = d % side - r, dy = d / side - r;
          for (std::size_t j = 0; j < values.size(); ++j)
            for (int ch = hd * hv; ch < (hd + 1) * hv; ++ch)
              out[((j * cv + ch) * h + y) * w + x] += a * values[j].img->at(ch, y + values[j].sign * dy, x + values[j].sign * dx);
        }
        if (row_sums) row_sums->push_back(total);
      }
  return out;
}

// Full self-attention over all H·W tokens (one window), with a relative
// bias table of side 2·max(H, W)-1 indexed by (Δy, Δx).
inline std::vector<double> dense_self_attention(const Img& q, const Img& k, const Img& v,
                                                const std::vector<double>& table, int window, int heads,
                                                double scale) {
  const int c = q.c, h = q.h, w = q.w, hd_dim = c / heads, n = h * w, side = 2 * window - 1;
  std::vector<double> out(static_cast<std::size_t>(c) * n, 0.0);
  for (int hd = 0; hd < heads; ++hd)
    for (int i = 0; i < n; ++i) {
      std::vector<double> z(n);
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int ch = hd * hd_dim; ch < (hd + 1) * hd_dim; ++ch) acc += q.v[ch * n + i] * k.v[ch * n + j];
        const int rel = (i / w - j / w + window - 1) * side + (i % w - j % w + window - 1);
        z[j] = scale * acc + (table.empty() ? 0.0 : table[hd * side * side + rel]);
        mx = std::max(mx, z[j]);
      }
      double den = 0.0;
      for (double& t : z) den += (t = std::exp(t - mx));
      for (int j = 0; j < n; ++j)
        for (int ch = hd * hd_dim; ch < (hd + 1) * hd_dim; ++ch) out[ch * n + i] += z[j] / den * v.v[ch * n + j];
    }
  return out;
}

// Shifted-window attention the way Swin writes it: roll by -shift, split
// into windows, mask pairs from different slices of the rolled image,
// attend, roll back.
inline std::vector<double> swin_attention(const Img& q, const Img& k, const Img& v, const std::vector<double>& table,
                                          int window, int shift, int heads, double scale) {
  const int c = q.c, h = q.h, w = q.w, hd_dim = c / heads, side = 2 * window - 1;
  auto roll = [&](const Img& im) {  // rolled(y, x) = im(y + shift, x + shift)
    Img o(im.c, h, w);
    for (int ch = 0; ch < im.c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) o.at(ch, y, x) = im.at(ch, (y + shift) % h, (x + shift) % w);
    return o;
  };
  const Img rq = roll(q), rk = roll(k), rv = roll(v);
  // Slice label of the rolled image, as in the reference "img_mask".
  std::vector<int> label(static_cast<std::size_t>(h) * w, 0);
  if (shift > 0) {
    auto slice = [&](int p, int n) { return p < n - window ? 0 : (p < n - shift ? 1 : 2); };
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) label[y * w + x] = slice(y, h) * 3 + slice(x, w);
  }
  Img ro(c, h, w);
  for (int wy = 0; wy < h; wy += window)
    for (int wx = 0; wx < w; wx += window)
      for (int hd = 0; hd < heads; ++hd)
        for (int iy = 0; iy < window; ++iy)
          for (int ix = 0; ix < window; ++ix) {
            const int py = wy + iy, px = wx + ix;
            std::vector<double> z;
            std::vector<std::pair<int, int>> js;
            double mx = -std::numeric_limits<double>::infinity();
            for (int jy = 0; jy < window; ++jy)
              for (int jx = 0; jx < window; ++jx) {
                const int qy = wy + jy, qx = wx + jx;
                if (label[py * w + px] != label[qy * w + qx]) continue;
                double acc = 0.0;
                for (int ch = hd * hd_dim; ch < (hd + 1) * hd_dim; ++ch) acc += rq.at(ch, py, px) * rk.at(ch, qy, qx);
                const int rel = (iy - jy + window - 1) * side + (ix - jx + window - 1);
                z.push_back(scale * acc + (table.empty() ? 0.0 : table[hd * side * side + rel]));
                js.emplace_back(qy, qx);
                mx = std::max(mx, z.back());
              }
            double den = 0.0;
            for (double& t : z) den += (t = std::exp(t - mx));
            for (std::size_t j = 0; j < js.size(); ++j)
              for (int ch = hd * hd_dim; ch < (hd + 1) * hd_dim; ++ch)
                ro.at(ch, py, px) += z[j] / den * rv.at(ch, js[j].first, js[j].second);
          }
  Img out(c, h, w);  // roll back
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(ch, (y + shift) % h, (x + shift) % w) = ro.at(ch, y, x);
  return out.v;
}

// ITU-R 601 luma scaled to grey levels.
inline Img luma255(const Img& im) {
  Img out(1, im.h, im.w);
  for (int y = 0; y < im.h; ++y)
    for (int x = 0; x < im.w; ++x) {
      out.at(0, y, x) = im.c == 1 ? 255.0 * im.at(0, y, x)
                                  : 255.0 * (0.299 * im.at(0, y, x) + 0.587 * im.at(1, y, x) + 0.114 * im.at(2, y, x));
    }
  return out;
}

// Soft census distance as used by unsupervised flow: 7×7 soft ternary
// signatures, soft Hamming distance averaged over the patch, robust
// sqrt(h² + e²) - e, mean over pixels whose patch fits.
inline double census(const Img& a, const Img& b, int patch = 7) {
  const Img la = luma255(a), lb = luma255(b);
  const int half = patch / 2;
  double total = 0.0;
  int count = 0;
  for (int y = half; y < a.h - half; ++y)
    for (int x = half; x < a.w - half; ++x) {
      double hsum = 0.0;
      for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
          const double da = la.at(0, y + dy, x + dx) - la.at(0, y, x);
          const double db = lb.at(0, y + dy, x + dx) - lb.at(0, y, x);
          const double ta = da / std::sqrt(0.81 + da * da), tb = db / std::sqrt(0.81 + db * db);
          const double diff = ta - tb;
          hsum += diff * diff / (0.1 + diff * diff);
        }
      const double hm = hsum / (patch * patch);
      total += std::sqrt(hm * hm + 1e-6) - 1e-3;
      ++count;
    }
  return total / count;
}

inline double charbonnier(const std::vector<double>& x, double alpha = 0.5, double eps = 1e-3) {
  double acc = 0.0;
  for (double v : x) acc += std::pow(v * v + eps * eps, alpha);
  return acc / x.size();
}

}  // namespace oracle
