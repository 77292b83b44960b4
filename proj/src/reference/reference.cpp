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
#include "bimotion/reference.hpp"

#include <cmath>
#include <limits>

namespace bimotion::reference {

namespace {

template <typename T>
T at(const Tensor<T>& x, int c, int y, int xx) {
  return x[(static_cast<std::size_t>(c) * x.dim(1) + y) * x.dim(2) + xx];
}

template <typename T>
T pixel(const Tensor<T>& x, int c, int y, int xx) {
  if (y < 0 || y >= x.dim(1) || xx < 0 || xx >= x.dim(2)) return T(0);
  return at(x, c, y, xx);
}

template <typename T>
T bilinear(const Tensor<T>& x, int c, T y, T xx) {
  const T fy = std::floor(y), fx = std::floor(xx);
  const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
  const T ay = y - fy, ax = xx - fx;
  return (1 - ay) * (1 - ax) * pixel(x, c, y0, x0) + (1 - ay) * ax * pixel(x, c, y0, x0 + 1) +
         ay * (1 - ax) * pixel(x, c, y0 + 1, x0) + ay * ax * pixel(x, c, y0 + 1, x0 + 1);
}

}  // namespace

template <typename T>
std::vector<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride, int pad) {
  const int cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const int oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<T> out(static_cast<std::size_t>(cout) * oh * ow);
  for (int o = 0; o < cout; ++o) {
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        T acc = bias.defined() ? bias[o] : T(0);
        for (int i = 0; i < cin; ++i) {
          for (int u = 0; u < kh; ++u) {
            for (int v = 0; v < kw; ++v) {
              const T wv = weight[((static_cast<std::size_t>(o) * cin + i) * kh + u) * kw + v];
              acc += wv * pixel(x, i, y * stride - pad + u, xx * stride - pad + v);
            }
          }
        }
        out[(static_cast<std::size_t>(o) * oh + y) * ow + xx] = acc;
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> bilateral_correlation(const Tensor<T>& f0, const Tensor<T>& f1, int radius) {
  const int c = f0.dim(0), h = f0.dim(1), w = f0.dim(2);
  const int side = 2 * radius + 1;
  std::vector<T> out(static_cast<std::size_t>(side) * side * h * w);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int d = (dy + radius) * side + (dx + radius);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          T acc = T(0);
          for (int k = 0; k < c; ++k) acc += pixel(f0, k, y - dy, x - dx) * pixel(f1, k, y + dy, x + dx);
          out[(static_cast<std::size_t>(d) * h + y) * w + x] = acc;
        }
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> bbcv(const Tensor<T>& s0k, const Tensor<T>& s1k, const Tensor<T>& to0, const Tensor<T>& to1,
                    int block_index, int radius, CenterConvention centers) {
  const int c = s0k.dim(0), h = to1.dim(1), w = to1.dim(2);
  const int side = 2 * radius + 1;
  const T inv = T(1) / static_cast<T>(1 << block_index);
  const T off = centers == CenterConvention::kHalfPixel ? T(0.5) : T(0);
  std::vector<T> out(static_cast<std::size_t>(side) * side * h * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const T c0x = (x + off + at(to0, 0, y, x)) * inv - off, c0y = (y + off + at(to0, 1, y, x)) * inv - off;
      const T c1x = (x + off + at(to1, 0, y, x)) * inv - off, c1y = (y + off + at(to1, 1, y, x)) * inv - off;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          T acc = T(0);
          for (int k = 0; k < c; ++k) {
            acc += bilinear(s0k, k, c0y - dy, c0x - dx) * bilinear(s1k, k, c1y + dy, c1x + dx);
          }
          const int d = (dy + radius) * side + (dx + radius);
          out[(static_cast<std::size_t>(d) * h + y) * w + x] = acc;
        }
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> backward_warp(const Tensor<T>& source, const Tensor<T>& flow) {
  const int c = source.dim(0), h = source.dim(1), w = source.dim(2);
  std::vector<T> out(source.numel());
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out[(static_cast<std::size_t>(k) * h + y) * w + x] =
            bilinear(source, k, y + at(flow, 1, y, x), x + at(flow, 0, y, x));
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> sliding_attention(const SlidingAttentionSpec<T>& spec) {
  const Tensor<T>& q = spec.query.tensor;
  const int cq = q.dim(0), h = q.dim(1), w = q.dim(2);
  const int cv = spec.values[0].tensor.dim(0);
  const int heads = spec.heads, r = spec.radius, side = 2 * r + 1;
  const int hq = cq / heads, hv = cv / heads;
  const int nv = static_cast<int>(spec.values.size());
  auto inside = [&](int y, int x) { return y >= 0 && y < h && x >= 0 && x < w; };
  std::vector<T> out(static_cast<std::size_t>(nv) * cv * h * w, T(0));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int hd = 0; hd < heads; ++hd) {
        std::vector<T> logit(side * side, -std::numeric_limits<T>::infinity());
        T mx = -std::numeric_limits<T>::infinity();
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            const int d = (dy + r) * side + (dx + r);
            const int qy = y + spec.query.sign * dy, qx = x + spec.query.sign * dx;
            bool ok = inside(qy, qx);
            for (const auto& k : spec.keys) ok = ok && inside(y + k.sign * dy, x + k.sign * dx);
            for (const auto& v : spec.values) ok = ok && inside(y + v.sign * dy, x + v.sign * dx);
            if (!ok) continue;
            T acc = T(0);
            for (const auto& k : spec.keys) {
              for (int c = hd * hq; c < (hd + 1) * hq; ++c) {
                acc += at(q, c, qy, qx) * at(k.tensor, c, y + k.sign * dy, x + k.sign * dx);
              }
            }
            logit[d] = spec.scale * acc + (spec.bias.defined() ? spec.bias[hd * side * side + d] : T(0));
            mx = std::max(mx, logit[d]);
          }
        }
        T den = T(0);
        for (T& l : logit) den += (l = std::isinf(l) ? T(0) : std::exp(l - mx));
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            const T a = logit[(dy + r) * side + (dx + r)] / den;
            if (a == T(0)) continue;
            for (int j = 0; j < nv; ++j) {
              const auto& v = spec.values[j];
              for (int c = hd * hv; c < (hd + 1) * hv; ++c) {
                out[((static_cast<std::size_t>(j) * cv + c) * h + y) * w + x] +=
                    a * at(v.tensor, c, y + v.sign * dy, x + v.sign * dx);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> window_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                const Tensor<T>& bias_table, int window, int shift, int heads, T scale) {
  const int c = q.dim(0), h = q.dim(1), w = q.dim(2);
  const int hd_dim = c / heads, side = 2 * window - 1;
  // Shifted frame: s(y, x) = orig((y + shift) mod h, (x + shift) mod w).
  auto src_y = [&](int y) { return (y + shift) % h; };
  auto src_x = [&](int x) { return (x + shift) % w; };
  auto band = [&](int p, int n) {
    if (shift == 0) return 0;
    return p < n - window ? 0 : (p < n - shift ? 1 : 2);
  };
  std::vector<T> out(q.numel(), T(0));
  for (int wy = 0; wy < h; wy += window) {
    for (int wx = 0; wx < w; wx += window) {
      for (int hd = 0; hd < heads; ++hd) {
        for (int iy = wy; iy < wy + window; ++iy) {
          for (int ix = wx; ix < wx + window; ++ix) {
            std::vector<T> logit;
            std::vector<std::pair<int, int>> keys;
            for (int jy = wy; jy < wy + window; ++jy) {
              for (int jx = wx; jx < wx + window; ++jx) {
                if (band(iy, h) != band(jy, h) || band(ix, w) != band(jx, w)) continue;
                T acc = T(0);
                for (int ch = hd * hd_dim; ch < (hd + 1) * hd_dim; ++ch) {
                  acc += at(q, ch, src_y(iy), src_x(ix)) * at(k, ch, src_y(jy), src_x(jx));
                }
                const int rel = (iy - jy + window - 1) * side + (ix - jx + window - 1);
                logit.push_back(scale * acc + (bias_table.defined() ? bias_table[hd * side * side + rel] : T(0)));
                keys.emplace_back(jy, jx);
              }
            }
            T mx = -std::numeric_limits<T>::infinity();
            for (T l : logit) mx = std::max(mx, l);
            T den = T(0);
            for (T& l : logit) den += (l = std::exp(l - mx));
            for (std::size_t j = 0; j < keys.size(); ++j) {
              for (int ch = hd * hd_dim; ch < (hd + 1) * hd_dim; ++ch) {
                out[(static_cast<std::size_t>(ch) * h + src_y(iy)) * w + src_x(ix)] +=
                    logit[j] / den * at(v, ch, src_y(keys[j].first), src_x(keys[j].second));
              }
            }
          }
        }
      }
    }
  }
  return out;
}

#define BIMOTION_INSTANTIATE_REFERENCE(T)                                                                   \
  template std::vector<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);           \
  template std::vector<T> bilateral_correlation(const Tensor<T>&, const Tensor<T>&, int);                   \
  template std::vector<T> bbcv(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, \
                               int, CenterConvention);                                                      \
  template std::vector<T> backward_warp(const Tensor<T>&, const Tensor<T>&);                                \
  template std::vector<T> sliding_attention(const SlidingAttentionSpec<T>&);                                \
  template std::vector<T> window_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                           const Tensor<T>&, int, int, int, T);

BIMOTION_INSTANTIATE_REFERENCE(float)
BIMOTION_INSTANTIATE_REFERENCE(double)

}  // namespace bimotion::reference
