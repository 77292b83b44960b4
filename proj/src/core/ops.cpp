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
#include "bimotion/core/ops.hpp"

#include "bimotion/core/branch_trace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bimotion {

namespace {

template <typename T>
using Node = detail::Node<T>;

void require_rank3(const Shape& s, const char* what) {
  if (s.size() != 3) throw ShapeError(std::string(what) + ": expected C×H×W, got " + shape_str(s));
}

template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary(const char* op, const Tensor<T>& x, Fwd fwd, Bwd dfdx) {
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return Tensor<T>::from_op(op, x.shape(), std::move(out), {x}, [dfdx](Node<T>& self) {
    T* g = self.parent_grad(0);
    if (!g) return;
    const auto& xin = self.parents[0]->value;
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * dfdx(xin[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor<T>::from_op("add", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (T* g = self.parent_grad(p)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return Tensor<T>::from_op("sub", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    if (T* g = self.parent_grad(0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (T* g = self.parent_grad(1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return Tensor<T>::from_op("mul", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (T* g = self.parent_grad(0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (T* g = self.parent_grad(1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  return unary<T>("scale", x, [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& x) {
  return unary<T>("neg", x, [](T v) { return -v; }, [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T s) {
  return unary<T>("add_scalar", x, [s](T v) { return v + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  if (BranchTrace* trace = BranchTrace::active()) {
    const std::uint64_t site = trace->next_site() << 40;
    for (std::size_t i = 0; i < x.numel(); ++i) {
      if (x[i] > T(0)) trace->note(site ^ i);
    }
  }
  return unary<T>("relu", x, [](T v) { return v > T(0) ? v : T(0); },
                  [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T kInvSqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  constexpr T kInvSqrt2Pi = std::numbers::inv_sqrtpi_v<T> * kInvSqrt2;
  return unary<T>(
      "gelu", x, [](T v) { return T(0.5) * v * (T(1) + std::erf(v * kInvSqrt2)); },
      [](T v, T) {
        const T cdf = T(0.5) * (T(1) + std::erf(v * kInvSqrt2));
        return cdf + v * kInvSqrt2Pi * std::exp(T(-0.5) * v * v);
      });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.data()) acc += v;
  return Tensor<T>::from_op("sum", Shape{1}, {acc}, {x}, [](Node<T>& self) {
    if (T* g = self.parent_grad(0)) {
      const T s = self.grad[0];
      for (std::size_t i = 0; i < self.parents[0]->value.size(); ++i) g[i] += s;
    }
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) throw ShapeError("mean of empty tensor");
  T acc = T(0);
  for (T v : x.data()) acc += v;
  const T inv = T(1) / static_cast<T>(x.numel());
  return Tensor<T>::from_op("mean", Shape{1}, {acc * inv}, {x}, [inv](Node<T>& self) {
    if (T* g = self.parent_grad(0)) {
      const T s = self.grad[0] * inv;
      for (std::size_t i = 0; i < self.parents[0]->value.size(); ++i) g[i] += s;
    }
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(static_cast<std::size_t>(m) * n);
  detail::gemm(false, false, m, n, k, T(1), a.data().data(), b.data().data(), T(0), out.data());
  return Tensor<T>::from_op("matmul", Shape{m, n}, std::move(out), {a, b},
                            [m, n, k](Node<T>& self) {
    const T* av = self.parents[0]->value.data();
    const T* bv = self.parents[1]->value.data();
    if (T* g = self.parent_grad(0)) {
      detail::gemm(false, true, m, k, n, T(1), self.grad.data(), bv, T(1), g);
    }
    if (T* g = self.parent_grad(1)) {
      detail::gemm(true, false, k, n, m, T(1), av, self.grad.data(), T(1), g);
    }
  });
}

namespace {

template <typename T>
void im2col(const T* x, int ci, int h, int w, int kh, int kw, int stride, int pad, int ho,
            int wo, T* col) {
#pragma omp parallel for
  for (int c = 0; c < ci; ++c) {
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        T* row = col + (static_cast<std::size_t>((c * kh + i) * kw + j)) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + i;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + j;
            row[oy * wo + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                    ? x[(static_cast<std::size_t>(c) * h + iy) * w + ix]
                                    : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int ci, int h, int w, int kh, int kw, int stride, int pad, int ho,
            int wo, T* x) {
  // Parallel over input channels: each channel's rows are disjoint.
#pragma omp parallel for
  for (int c = 0; c < ci; ++c) {
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        const T* row = col + (static_cast<std::size_t>((c * kh + i) * kw + j)) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + i;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + j;
            if (ix < 0 || ix >= w) continue;
            x[(static_cast<std::size_t>(c) * h + iy) * w + ix] += row[oy * wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride, int pad) {
  require_rank3(x.shape(), "conv2d");
  if (weight.rank() != 4 || weight.dim(1) != x.dim(0)) {
    throw ShapeError("conv2d: weight " + shape_str(weight.shape()) + " incompatible with input " +
                     shape_str(x.shape()));
  }
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: invalid stride/padding");
  const int ci = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int co = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != co)) {
    throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()));
  }
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (w + 2 * pad - kw) / stride + 1;
  if (ho <= 0 || wo <= 0) throw ShapeError("conv2d: kernel larger than padded input");
  const int kdim = ci * kh * kw;
  const int npix = ho * wo;
  const bool direct = kh == 1 && kw == 1 && stride == 1 && pad == 0;

  std::vector<T> col;
  if (!direct) {
    col.resize(static_cast<std::size_t>(kdim) * npix);
    im2col(x.data().data(), ci, h, w, kh, kw, stride, pad, ho, wo, col.data());
  }
  const T* colp = direct ? x.data().data() : col.data();
  std::vector<T> out(static_cast<std::size_t>(co) * npix);
  detail::gemm(false, false, co, npix, kdim, T(1), weight.data().data(), colp, T(0), out.data());
  if (has_bias) {
    for (int o = 0; o < co; ++o) {
      const T b = bias[o];
      T* row = out.data() + static_cast<std::size_t>(o) * npix;
      for (int p = 0; p < npix; ++p) row[p] += b;
    }
  }

  std::vector<Tensor<T>> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return Tensor<T>::from_op(
      "conv2d", Shape{co, ho, wo}, std::move(out), parents,
      [col = std::move(col), direct, ci, h, w, co, kh, kw, stride, pad, ho, wo, kdim, npix,
       has_bias](Node<T>& self) {
        const T* dy = self.grad.data();
        const T* colp = direct ? self.parents[0]->value.data() : col.data();
        if (T* gw = self.parent_grad(1)) {
          detail::gemm(false, true, co, kdim, npix, T(1), dy, colp, T(1), gw);
        }
        if (has_bias) {
          if (T* gb = self.parent_grad(2)) {
            for (int o = 0; o < co; ++o) {
              T acc = T(0);
              const T* row = dy + static_cast<std::size_t>(o) * npix;
              for (int p = 0; p < npix; ++p) acc += row[p];
              gb[o] += acc;
            }
          }
        }
        if (T* gx = self.parent_grad(0)) {
          const T* wv = self.parents[1]->value.data();
          if (direct) {
            detail::gemm(true, false, kdim, npix, co, T(1), wv, dy, T(1), gx);
          } else {
            std::vector<T> dcol(static_cast<std::size_t>(kdim) * npix);
            detail::gemm(true, false, kdim, npix, co, T(1), wv, dy, T(0), dcol.data());
            col2im(dcol.data(), ci, h, w, kh, kw, stride, pad, ho, wo, gx);
          }
        }
      });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (x.rank() < 1) throw ShapeError("softmax on rank-0 tensor");
  const int n = x.dim(-1);
  const std::size_t rows = n ? x.numel() / n : 0;
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = in.data() + r * n;
    T* dst = out.data() + r * n;
    const T mx = *std::max_element(src, src + n);
    T z = T(0);
    for (int i = 0; i < n; ++i) z += (dst[i] = std::exp(src[i] - mx));
    for (int i = 0; i < n; ++i) dst[i] /= z;
  }
  return Tensor<T>::from_op("softmax", x.shape(), std::move(out), {x}, [n, rows](Node<T>& self) {
    T* g = self.parent_grad(0);
    if (!g) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.value.data() + r * n;
      const T* dy = self.grad.data() + r * n;
      T dot = T(0);
      for (int i = 0; i < n; ++i) dot += y[i] * dy[i];
      for (int i = 0; i < n; ++i) g[r * n + i] += y[i] * (dy[i] - dot);
    }
  });
}

template <typename T>
Tensor<T> layer_norm_channels(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                              T eps) {
  require_rank3(x.shape(), "layer_norm_channels");
  const int c = x.dim(0);
  const std::size_t npix = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  if (gamma.numel() != static_cast<std::size_t>(c) || beta.numel() != static_cast<std::size_t>(c)) {
    throw ShapeError("layer_norm_channels: affine parameters must have C entries");
  }
  std::vector<T> out(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(npix);
  auto in = x.data();
  for (std::size_t p = 0; p < npix; ++p) {
    T mu = T(0);
    for (int k = 0; k < c; ++k) mu += in[k * npix + p];
    mu /= static_cast<T>(c);
    T var = T(0);
    for (int k = 0; k < c; ++k) {
      const T d = in[k * npix + p] - mu;
      var += d * d;
    }
    var /= static_cast<T>(c);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[p] = is;
    for (int k = 0; k < c; ++k) {
      const std::size_t i = k * npix + p;
      xhat[i] = (in[i] - mu) * is;
      out[i] = xhat[i] * gamma[k] + beta[k];
    }
  }
  return Tensor<T>::from_op(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), c, npix](Node<T>& self) {
        const T* dy = self.grad.data();
        const auto& gam = self.parents[1]->value;
        if (T* gg = self.parent_grad(1)) {
          for (int k = 0; k < c; ++k) {
            T acc = T(0);
            for (std::size_t p = 0; p < npix; ++p) acc += dy[k * npix + p] * xhat[k * npix + p];
            gg[k] += acc;
          }
        }
        if (T* gb = self.parent_grad(2)) {
          for (int k = 0; k < c; ++k) {
            T acc = T(0);
            for (std::size_t p = 0; p < npix; ++p) acc += dy[k * npix + p];
            gb[k] += acc;
          }
        }
        if (T* gx = self.parent_grad(0)) {
          const T inv_c = T(1) / static_cast<T>(c);
          for (std::size_t p = 0; p < npix; ++p) {
            T m1 = T(0), m2 = T(0);
            for (int k = 0; k < c; ++k) {
              const T d = dy[k * npix + p] * gam[k];
              m1 += d;
              m2 += d * xhat[k * npix + p];
            }
            m1 *= inv_c;
            m2 *= inv_c;
            for (int k = 0; k < c; ++k) {
              const std::size_t i = k * npix + p;
              gx[i] += inv_std[p] * (dy[i] * gam[k] - m1 - xhat[i] * m2);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  for (const auto& p : parts) require_rank3(p.shape(), "concat_channels");
  const int h = parts[0].dim(1), w = parts[0].dim(2);
  int c = 0;
  for (const auto& p : parts) {
    if (p.dim(1) != h || p.dim(2) != w) {
      throw ShapeError("concat_channels: spatial mismatch " + shape_str(p.shape()) + " vs " +
                       shape_str(parts[0].shape()));
    }
    c += p.dim(0);
  }
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(c) * h * w);
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    out.insert(out.end(), p.data().begin(), p.data().end());
    sizes.push_back(p.numel());
  }
  return Tensor<T>::from_op("concat_channels", Shape{c, h, w}, std::move(out), parts,
                            [sizes](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (T* g = self.parent_grad(i)) {
        for (std::size_t j = 0; j < sizes[i]; ++j) g[j] += self.grad[off + j];
      }
      off += sizes[i];
    }
  });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int begin, int end) {
  require_rank3(x.shape(), "slice_channels");
  if (begin < 0 || end > x.dim(0) || begin >= end) throw ShapeError("slice_channels: bad range");
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  std::vector<T> out(x.data().begin() + begin * plane, x.data().begin() + end * plane);
  return Tensor<T>::from_op("slice_channels", Shape{end - begin, x.dim(1), x.dim(2)},
                            std::move(out), {x}, [begin, plane](Node<T>& self) {
    if (T* g = self.parent_grad(0)) {
      for (std::size_t j = 0; j < self.grad.size(); ++j) g[begin * plane + j] += self.grad[j];
    }
  });
}

namespace {

struct Tap {
  int i0, i1;
  double f;  // weight of i1
};

// Half-pixel source coordinate with edge clamping.
std::vector<Tap> resize_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double s = (o + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, s - i0};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w) {
  require_rank3(x.shape(), "resize_bilinear");
  if (out_h <= 0 || out_w <= 0 || x.dim(1) <= 0 || x.dim(2) <= 0) {
    throw ShapeError("resize_bilinear: empty size");
  }
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  auto ty = resize_taps(h, out_h);
  auto tx = resize_taps(w, out_w);
  std::vector<T> out(static_cast<std::size_t>(c) * out_h * out_w);
  auto in = x.data();
#pragma omp parallel for
  for (int k = 0; k < c; ++k) {
    const T* src = in.data() + static_cast<std::size_t>(k) * h * w;
    T* dst = out.data() + static_cast<std::size_t>(k) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const Tap& a = ty[oy];
      const T fy = static_cast<T>(a.f);
      for (int ox = 0; ox < out_w; ++ox) {
        const Tap& b = tx[ox];
        const T fx = static_cast<T>(b.f);
        const T top = src[a.i0 * w + b.i0] * (T(1) - fx) + src[a.i0 * w + b.i1] * fx;
        const T bot = src[a.i1 * w + b.i0] * (T(1) - fx) + src[a.i1 * w + b.i1] * fx;
        dst[oy * out_w + ox] = top * (T(1) - fy) + bot * fy;
      }
    }
  }
  return Tensor<T>::from_op(
      "resize_bilinear", Shape{c, out_h, out_w}, std::move(out), {x},
      [ty = std::move(ty), tx = std::move(tx), c, h, w, out_h, out_w](Node<T>& self) {
        T* g = self.parent_grad(0);
        if (!g) return;
#pragma omp parallel for
        for (int k = 0; k < c; ++k) {
          T* dst = g + static_cast<std::size_t>(k) * h * w;
          const T* dy = self.grad.data() + static_cast<std::size_t>(k) * out_h * out_w;
          for (int oy = 0; oy < out_h; ++oy) {
            const Tap& a = ty[oy];
            const T fy = static_cast<T>(a.f);
            for (int ox = 0; ox < out_w; ++ox) {
              const Tap& b = tx[ox];
              const T fx = static_cast<T>(b.f);
              const T d = dy[oy * out_w + ox];
              dst[a.i0 * w + b.i0] += d * (T(1) - fy) * (T(1) - fx);
              dst[a.i0 * w + b.i1] += d * (T(1) - fy) * fx;
              dst[a.i1 * w + b.i0] += d * fy * (T(1) - fx);
              dst[a.i1 * w + b.i1] += d * fy * fx;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> avg_pool(const Tensor<T>& x, int factor) {
  require_rank3(x.shape(), "avg_pool");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (factor < 1 || h % factor || w % factor) {
    throw ShapeError("avg_pool: " + shape_str(x.shape()) + " not divisible by " +
                     std::to_string(factor));
  }
  const int oh = h / factor, ow = w / factor;
  const T inv = T(1) / static_cast<T>(factor * factor);
  std::vector<T> out(static_cast<std::size_t>(c) * oh * ow, T(0));
  auto in = x.data();
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        out[(static_cast<std::size_t>(k) * oh + y / factor) * ow + xx / factor] +=
            in[(static_cast<std::size_t>(k) * h + y) * w + xx];
      }
    }
  }
  for (T& v : out) v *= inv;
  return Tensor<T>::from_op("avg_pool", Shape{c, oh, ow}, std::move(out), {x},
                            [c, h, w, oh, ow, factor, inv](Node<T>& self) {
    T* g = self.parent_grad(0);
    if (!g) return;
    for (int k = 0; k < c; ++k) {
      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) {
          g[(static_cast<std::size_t>(k) * h + y) * w + xx] +=
              inv * self.grad[(static_cast<std::size_t>(k) * oh + y / factor) * ow + xx / factor];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int factor) {
  require_rank3(x.shape(), "pixel_shuffle");
  const int f2 = factor * factor;
  if (factor < 1 || x.dim(0) % f2) throw ShapeError("pixel_shuffle: channels not divisible by f²");
  const int c = x.dim(0) / f2, h = x.dim(1), w = x.dim(2);
  const int oh = h * factor, ow = w * factor;
  // index[out] = in
  std::vector<std::size_t> index(x.numel());
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < factor; ++i) {
      for (int j = 0; j < factor; ++j) {
        for (int y = 0; y < h; ++y) {
          for (int xx = 0; xx < w; ++xx) {
            const std::size_t src = ((static_cast<std::size_t>(k) * f2 + i * factor + j) * h + y) * w + xx;
            const std::size_t dst = (static_cast<std::size_t>(k) * oh + y * factor + i) * ow + xx * factor + j;
            index[dst] = src;
          }
        }
      }
    }
  }
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[index[i]];
  return Tensor<T>::from_op("pixel_shuffle", Shape{c, oh, ow}, std::move(out), {x},
                            [index = std::move(index)](Node<T>& self) {
    if (T* g = self.parent_grad(0)) {
      for (std::size_t i = 0; i < index.size(); ++i) g[index[i]] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> pad2d(const Tensor<T>& x, int top, int bottom, int left, int right, PadMode mode) {
  require_rank3(x.shape(), "pad2d");
  if (top < 0 || bottom < 0 || left < 0 || right < 0) throw ShapeError("pad2d: negative padding");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = h + top + bottom, ow = w + left + right;
  // src index per output element, or -1 for a zero.
  std::vector<long> index(static_cast<std::size_t>(c) * oh * ow);
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        int sy = y - top, sx = xx - left;
        long src = -1;
        if (mode == PadMode::kReplicate) {
          sy = std::clamp(sy, 0, h - 1);
          sx = std::clamp(sx, 0, w - 1);
          src = (static_cast<long>(k) * h + sy) * w + sx;
        } else if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
          src = (static_cast<long>(k) * h + sy) * w + sx;
        }
        index[(static_cast<std::size_t>(k) * oh + y) * ow + xx] = src;
      }
    }
  }
  std::vector<T> out(index.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = index[i] >= 0 ? in[index[i]] : T(0);
  return Tensor<T>::from_op("pad2d", Shape{c, oh, ow}, std::move(out), {x},
                            [index = std::move(index)](Node<T>& self) {
    if (T* g = self.parent_grad(0)) {
      for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= 0) g[index[i]] += self.grad[i];
      }
    }
  });
}

template <typename T>
Tensor<T> crop2d(const Tensor<T>& x, int top, int left, int height, int width) {
  require_rank3(x.shape(), "crop2d");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (top < 0 || left < 0 || height <= 0 || width <= 0 || top + height > h || left + width > w) {
    throw ShapeError("crop2d: window outside " + shape_str(x.shape()));
  }
  std::vector<T> out(static_cast<std::size_t>(c) * height * width);
  auto in = x.data();
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < height; ++y) {
      std::copy_n(in.data() + (static_cast<std::size_t>(k) * h + top + y) * w + left, width,
                  out.data() + (static_cast<std::size_t>(k) * height + y) * width);
    }
  }
  return Tensor<T>::from_op("crop2d", Shape{c, height, width}, std::move(out), {x},
                            [c, h, w, top, left, height, width](Node<T>& self) {
    T* g = self.parent_grad(0);
    if (!g) return;
    for (int k = 0; k < c; ++k) {
      for (int y = 0; y < height; ++y) {
        for (int xx = 0; xx < width; ++xx) {
          g[(static_cast<std::size_t>(k) * h + top + y) * w + left + xx] +=
              self.grad[(static_cast<std::size_t>(k) * height + y) * width + xx];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return Tensor<T>::from_op("reshape", std::move(shape), std::move(out), {x}, [](Node<T>& self) {
    if (T* g = self.parent_grad(0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

#define BIMOTION_INSTANTIATE_OPS(T)                                                         \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> scale(const Tensor<T>&, T);                                           \
  template Tensor<T> neg(const Tensor<T>&);                                                \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                      \
  template Tensor<T> relu(const Tensor<T>&);                                               \
  template Tensor<T> gelu(const Tensor<T>&);                                               \
  template Tensor<T> sum(const Tensor<T>&);                                                \
  template Tensor<T> mean(const Tensor<T>&);                                               \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int); \
  template Tensor<T> softmax(const Tensor<T>&);                                            \
  template Tensor<T> layer_norm_channels(const Tensor<T>&, const Tensor<T>&,               \
                                         const Tensor<T>&, T);                             \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);                       \
  template Tensor<T> slice_channels(const Tensor<T>&, int, int);                           \
  template Tensor<T> resize_bilinear(const Tensor<T>&, int, int);                          \
  template Tensor<T> avg_pool(const Tensor<T>&, int);                                      \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, int);                                 \
  template Tensor<T> pad2d(const Tensor<T>&, int, int, int, int, PadMode);                 \
  template Tensor<T> crop2d(const Tensor<T>&, int, int, int, int);                         \
  template Tensor<T> reshape(const Tensor<T>&, Shape);

BIMOTION_INSTANTIATE_OPS(float)
BIMOTION_INSTANTIATE_OPS(double)

}  // namespace bimotion
