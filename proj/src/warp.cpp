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
#include "bimotion/warp.hpp"

#include <cmath>

#include "bimotion/detail/bilinear.hpp"

namespace bimotion {

std::string endpoint_name(Endpoint e) {
  switch (e) {
    case Endpoint::kTto0: return "t->0";
    case Endpoint::kTto1: return "t->1";
    case Endpoint::k0to1: return "0->1";
    case Endpoint::k1to0: return "1->0";
    case Endpoint::k0toT: return "0->t";
    case Endpoint::k1toT: return "1->t";
  }
  return "?";
}

namespace {

void check_warp_shapes(const Shape& src, const Shape& flow, const char* what) {
  if (src.size() != 3 || flow.size() != 3 || flow[0] != 2) {
    throw ShapeError(std::string(what) + ": expected C×H×W source and 2×H×W flow, got " +
                     shape_str(src) + " and " + shape_str(flow));
  }
  if (src[1] != flow[1] || src[2] != flow[2]) {
    throw ShapeError(std::string(what) + ": resolution mismatch " + shape_str(src) + " vs " +
                     shape_str(flow));
  }
}

}  // namespace

template <typename T>
Tensor<T> backward_warp(const Tensor<T>& source, const Tensor<T>& flow) {
  check_warp_shapes(source.shape(), flow.shape(), "backward_warp");
  const int c = source.dim(0), h = source.dim(1), w = source.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const T* src = source.data().data();
  const T* fl = flow.data().data();
  std::vector<T> out(source.numel());

#pragma omp parallel for
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const detail::BilinearTap<T> tap(y + fl[plane + p], x + fl[p]);
      for (int k = 0; k < c; ++k) out[k * plane + p] = detail::bilinear_read(src + k * plane, h, w, tap);
    }
  }

  return Tensor<T>::from_op("backward_warp", source.shape(), std::move(out), {source, flow},
                            [c, h, w, plane](detail::Node<T>& self) {
    const T* src = self.parents[0]->value.data();
    const T* fl = self.parents[1]->value.data();
    const T* g = self.grad.data();
    if (T* gs = self.parent_grad(0)) {
      // Channels own disjoint planes, so the scatter is race-free.
#pragma omp parallel for
      for (int k = 0; k < c; ++k) {
        for (std::size_t p = 0; p < plane; ++p) {
          const int y = static_cast<int>(p / w), x = static_cast<int>(p % w);
          const detail::BilinearTap<T> tap(y + fl[plane + p], x + fl[p]);
          detail::bilinear_scatter(gs + k * plane, h, w, tap, g[k * plane + p]);
        }
      }
    }
    if (T* gf = self.parent_grad(1)) {
#pragma omp parallel for
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          const detail::BilinearTap<T> tap(y + fl[plane + p], x + fl[p]);
          T ax = T(0), ay = T(0);
          for (int k = 0; k < c; ++k) {
            T dy, dx;
            detail::bilinear_coord_grad(src + k * plane, h, w, tap, dy, dx);
            ax += g[k * plane + p] * dx;
            ay += g[k * plane + p] * dy;
          }
          gf[p] += ax;
          gf[plane + p] += ay;
        }
      }
    }
  });
}

template <typename T>
Splat<T> forward_warp(const Tensor<T>& source, const Tensor<T>& flow) {
  check_warp_shapes(source.shape(), flow.shape(), "forward_warp");
  const int c = source.dim(0), h = source.dim(1), w = source.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const T* src = source.data().data();
  const T* fl = flow.data().data();
  Tensor<T> acc(source.shape());
  Tensor<T> weight(Shape{1, h, w});
  T* a = acc.data_mut().data();
  T* wt = weight.data_mut().data();
  // Serial scatter: many sources may land on one target and the
  // accumulation order must stay fixed.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const detail::BilinearTap<T> tap(y + fl[plane + p], x + fl[p]);
      detail::bilinear_scatter(wt, h, w, tap, T(1));
      for (int k = 0; k < c; ++k) detail::bilinear_scatter(a + k * plane, h, w, tap, src[k * plane + p]);
    }
  }
  return {acc, weight};
}

template <typename T>
Tensor<T> normalize_splat(const Splat<T>& splat, T tau) {
  const int c = splat.accumulated.dim(0);
  const std::size_t plane = splat.weight.numel();
  std::vector<T> out(splat.accumulated.numel(), T(0));
  auto acc = splat.accumulated.data();
  auto wt = splat.weight.data();
  for (int k = 0; k < c; ++k) {
    for (std::size_t p = 0; p < plane; ++p) {
      if (wt[p] > tau) out[k * plane + p] = acc[k * plane + p] / wt[p];
    }
  }
  return Tensor<T>(splat.accumulated.shape(), std::move(out));
}

template <typename T>
MotionField<T> scale_flow(const MotionField<T>& flow, double t) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("scale_flow: t must lie in (0, 1)");
  Endpoint e;
  if (flow.endpoint == Endpoint::k0to1) {
    e = Endpoint::k0toT;
  } else if (flow.endpoint == Endpoint::k1to0) {
    e = Endpoint::k1toT;
  } else {
    throw std::invalid_argument("scale_flow: endpoint must be 0->1 or 1->0, got " +
                                endpoint_name(flow.endpoint));
  }
  return {scale(flow.data, static_cast<T>(t)), flow.scale, e};
}

template <typename T>
Tensor<T> rescale_flow(const Tensor<T>& flow, Rescale factor) {
  if (flow.rank() != 3 || flow.dim(0) != 2) throw ShapeError("rescale_flow: expected 2×H×W field");
  const int h = flow.dim(1), w = flow.dim(2);
  if (factor == Rescale::kUp2) return scale(resize_bilinear(flow, 2 * h, 2 * w), T(2));
  if (h % 2 || w % 2) {
    throw ShapeError("rescale_flow: ÷2 needs even dims, got " + shape_str(flow.shape()));
  }
  return scale(resize_bilinear(flow, h / 2, w / 2), T(0.5));
}

template <typename T>
MotionField<T> rescale_field(const MotionField<T>& flow, Rescale factor) {
  const int s = factor == Rescale::kUp2 ? flow.scale / 2 : flow.scale * 2;
  return {rescale_flow(flow.data, factor), s, flow.endpoint};
}

#define BIMOTION_INSTANTIATE_WARP(T)                                              \
  template Tensor<T> backward_warp(const Tensor<T>&, const Tensor<T>&);           \
  template Splat<T> forward_warp(const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> normalize_splat(const Splat<T>&, T);                         \
  template MotionField<T> scale_flow(const MotionField<T>&, double);              \
  template Tensor<T> rescale_flow(const Tensor<T>&, Rescale);                     \
  template MotionField<T> rescale_field(const MotionField<T>&, Rescale);

BIMOTION_INSTANTIATE_WARP(float)
BIMOTION_INSTANTIATE_WARP(double)

}  // namespace bimotion
