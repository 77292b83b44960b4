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
#include "bimotion/costvol.hpp"

#include "bimotion/detail/bilinear.hpp"

namespace bimotion {

template <typename T>
CostVolume<T> bilateral_correlation(const Tensor<T>& f0, const Tensor<T>& f1, int radius) {
  if (radius < 0) throw std::invalid_argument("bilateral_correlation: negative radius");
  if (f0.rank() != 3) throw ShapeError("bilateral_correlation: expected C×H×W features");
  require_same_shape(f0.shape(), f1.shape(), "bilateral_correlation");
  const int c = f0.dim(0), h = f0.dim(1), w = f0.dim(2);
  const DisplacementWindow win{radius};
  const int nd = win.size();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const T* a = f0.data().data();
  const T* b = f1.data().data();
  std::vector<T> out(static_cast<std::size_t>(nd) * plane, T(0));

  // Output planes per displacement are disjoint.
#pragma omp parallel for
  for (int d = 0; d < nd; ++d) {
    const auto [dx, dy] = win.offset(d);
    T* dst = out.data() + d * plane;
    // Rows/cols where both x - d and x + d are inside the frame.
    const int y_lo = std::max(dy, -dy), y_hi = std::min(h - dy, h + dy);
    const int x_lo = std::max(dx, -dx), x_hi = std::min(w - dx, w + dx);
    for (int k = 0; k < c; ++k) {
      const T* pa = a + k * plane;
      const T* pb = b + k * plane;
      for (int y = y_lo; y < y_hi; ++y) {
        const T* ra = pa + (y - dy) * w - dx;
        const T* rb = pb + (y + dy) * w + dx;
        T* ro = dst + y * w;
        for (int x = x_lo; x < x_hi; ++x) ro[x] += ra[x] * rb[x];
      }
    }
  }

  auto t = Tensor<T>::from_op(
      "bilateral_correlation", Shape{nd, h, w}, std::move(out), {f0, f1},
      [c, h, w, nd, plane, win](detail::Node<T>& self) {
        const T* a = self.parents[0]->value.data();
        const T* b = self.parents[1]->value.data();
        const T* g = self.grad.data();
        T* ga = self.parent_grad(0);
        T* gb = self.parent_grad(1);
#pragma omp parallel for
        for (int k = 0; k < c; ++k) {
          for (int d = 0; d < nd; ++d) {
            const auto [dx, dy] = win.offset(d);
            const int y_lo = std::max(dy, -dy), y_hi = std::min(h - dy, h + dy);
            const int x_lo = std::max(dx, -dx), x_hi = std::min(w - dx, w + dx);
            const T* gd = g + d * plane;
            for (int y = y_lo; y < y_hi; ++y) {
              for (int x = x_lo; x < x_hi; ++x) {
                const std::size_t ia = k * plane + (y - dy) * w + (x - dx);
                const std::size_t ib = k * plane + (y + dy) * w + (x + dx);
                const T gv = gd[y * w + x];
                if (ga) ga[ia] += gv * b[ib];
                if (gb) gb[ib] += gv * a[ia];
              }
            }
          }
        }
      });
  return {t, radius, 0, CenterConvention::kIndex};
}

namespace {

template <typename T>
struct CenterMap {
  T inv;    // 1 / 2^k
  T shift;  // 0 or 0.5
  T operator()(int x, T v) const { return (static_cast<T>(x) + shift + v) * inv - shift; }
};

}  // namespace

template <typename T>
CostVolume<T> bbcv(const Tensor<T>& s0k, const Tensor<T>& s1k, const BilateralField<T>& motion,
                   int block_index, int radius, CenterConvention centers) {
  if (block_index < 0 || block_index > 2) {
    throw std::invalid_argument("bbcv: block index must be 0, 1 or 2");
  }
  if (radius < 0) throw std::invalid_argument("bbcv: negative radius");
  if (s0k.rank() != 3) throw ShapeError("bbcv: expected C×H×W block features");
  require_same_shape(s0k.shape(), s1k.shape(), "bbcv");
  const Tensor<T>& v0 = motion.to0.data;
  const Tensor<T>& v1 = motion.to1.data;
  if (v1.rank() != 3 || v1.dim(0) != 2) throw ShapeError("bbcv: expected 2×H×W motion");
  if (!motion.symmetric()) throw std::invalid_argument("bbcv: motion pair is not symmetric");
  const int h = v1.dim(1), w = v1.dim(2);
  const int stride = 1 << block_index;
  const int c = s0k.dim(0), hk = s0k.dim(1), wk = s0k.dim(2);
  if (h % stride || w % stride || hk != h / stride || wk != w / stride) {
    throw ShapeError("bbcv: block features " + shape_str(s0k.shape()) + " inconsistent with " +
                     std::to_string(h) + "x" + std::to_string(w) + " motion at k=" +
                     std::to_string(block_index));
  }
  const DisplacementWindow win{radius};
  const int nd = win.size();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t kplane = static_cast<std::size_t>(hk) * wk;
  const CenterMap<T> cmap{T(1) / static_cast<T>(stride),
                          centers == CenterConvention::kHalfPixel ? T(0.5) : T(0)};
  const T* a = s0k.data().data();
  const T* b = s1k.data().data();
  const T* f0 = v0.data().data();
  const T* f1 = v1.data().data();
  std::vector<T> out(static_cast<std::size_t>(nd) * plane);

#pragma omp parallel for
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const T c0x = cmap(x, f0[p]), c0y = cmap(y, f0[plane + p]);
      const T c1x = cmap(x, f1[p]), c1y = cmap(y, f1[plane + p]);
      for (int d = 0; d < nd; ++d) {
        const auto [dx, dy] = win.offset(d);
        const detail::BilinearTap<T> t0(c0y - dy, c0x - dx);
        const detail::BilinearTap<T> t1(c1y + dy, c1x + dx);
        T acc = T(0);
        for (int k = 0; k < c; ++k) {
          acc += detail::bilinear_read(a + k * kplane, hk, wk, t0) *
                 detail::bilinear_read(b + k * kplane, hk, wk, t1);
        }
        out[d * plane + p] = acc;
      }
    }
  }

  auto t = Tensor<T>::from_op(
      "bbcv", Shape{nd, h, w}, std::move(out), {s0k, s1k, v0, v1},
      [=](detail::Node<T>& self) {
        const T* a = self.parents[0]->value.data();
        const T* b = self.parents[1]->value.data();
        const T* f0 = self.parents[2]->value.data();
        const T* f1 = self.parents[3]->value.data();
        const T* g = self.grad.data();
        T* ga = self.parent_grad(0);
        T* gb = self.parent_grad(1);
        T* gf0 = self.parent_grad(2);
        T* gf1 = self.parent_grad(3);
        if (ga || gb) {
#pragma omp parallel for
          for (int k = 0; k < c; ++k) {
            const T* pa = a + k * kplane;
            const T* pb = b + k * kplane;
            for (int y = 0; y < h; ++y) {
              for (int x = 0; x < w; ++x) {
                const std::size_t p = static_cast<std::size_t>(y) * w + x;
                const T c0x = cmap(x, f0[p]), c0y = cmap(y, f0[plane + p]);
                const T c1x = cmap(x, f1[p]), c1y = cmap(y, f1[plane + p]);
                for (int d = 0; d < nd; ++d) {
                  const T gv = g[d * plane + p];
                  if (gv == T(0)) continue;
                  const auto [dx, dy] = win.offset(d);
                  const detail::BilinearTap<T> t0(c0y - dy, c0x - dx);
                  const detail::BilinearTap<T> t1(c1y + dy, c1x + dx);
                  if (ga) detail::bilinear_scatter(ga + k * kplane, hk, wk, t0, gv * detail::bilinear_read(pb, hk, wk, t1));
                  if (gb) detail::bilinear_scatter(gb + k * kplane, hk, wk, t1, gv * detail::bilinear_read(pa, hk, wk, t0));
                }
              }
            }
          }
        }
        if (gf0 || gf1) {
#pragma omp parallel for
          for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
              const std::size_t p = static_cast<std::size_t>(y) * w + x;
              const T c0x = cmap(x, f0[p]), c0y = cmap(y, f0[plane + p]);
              const T c1x = cmap(x, f1[p]), c1y = cmap(y, f1[plane + p]);
              T g0x = T(0), g0y = T(0), g1x = T(0), g1y = T(0);
              for (int d = 0; d < nd; ++d) {
                const T gv = g[d * plane + p];
                if (gv == T(0)) continue;
                const auto [dx, dy] = win.offset(d);
                const detail::BilinearTap<T> t0(c0y - dy, c0x - dx);
                const detail::BilinearTap<T> t1(c1y + dy, c1x + dx);
                for (int k = 0; k < c; ++k) {
                  const T* pa = a + k * kplane;
                  const T* pb = b + k * kplane;
                  T day, dax, dby, dbx;
                  detail::bilinear_coord_grad(pa, hk, wk, t0, day, dax);
                  detail::bilinear_coord_grad(pb, hk, wk, t1, dby, dbx);
                  const T va = detail::bilinear_read(pa, hk, wk, t0);
                  const T vb = detail::bilinear_read(pb, hk, wk, t1);
                  g0x += gv * dax * vb;
                  g0y += gv * day * vb;
                  g1x += gv * dbx * va;
                  g1y += gv * dby * va;
                }
              }
              if (gf0) {
                gf0[p] += g0x * cmap.inv;
                gf0[plane + p] += g0y * cmap.inv;
              }
              if (gf1) {
                gf1[p] += g1x * cmap.inv;
                gf1[plane + p] += g1y * cmap.inv;
              }
            }
          }
        }
      });
  return {t, radius, block_index, centers};
}

std::size_t memory_report(int height, int width, int radius, VolumeMode mode,
                          std::size_t scalar_bytes, int blocks) {
  if (height < 0 || width < 0 || radius < 0 || blocks < 0) {
    throw std::invalid_argument("memory_report: negative argument");
  }
  const std::size_t entries = static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1);
  const std::size_t per_volume = static_cast<std::size_t>(height) * width * entries * scalar_bytes;
  return mode == VolumeMode::kFull ? per_volume : per_volume * static_cast<std::size_t>(blocks);
}

int block_window_pixels(int radius, int block_index) { return (2 * radius + 1) << block_index; }

#define BIMOTION_INSTANTIATE_COSTVOL(T)                                                   \
  template CostVolume<T> bilateral_correlation(const Tensor<T>&, const Tensor<T>&, int); \
  template CostVolume<T> bbcv(const Tensor<T>&, const Tensor<T>&, const BilateralField<T>&, \
                              int, int, CenterConvention);

BIMOTION_INSTANTIATE_COSTVOL(float)
BIMOTION_INSTANTIATE_COSTVOL(double)

}  // namespace bimotion
