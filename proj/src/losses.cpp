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
#include "bimotion/losses.hpp"

#include <array>
#include <cmath>

#include "bimotion/warp.hpp"

namespace bimotion {

void LossConfig::validate() const {
  if (!(alpha > 0.0) || !(eps > 0.0)) throw std::invalid_argument("LossConfig: alpha and eps must be positive");
  if (census_patch < 1 || census_patch % 2 == 0) throw std::invalid_argument("LossConfig: census patch must be odd");
  if (!(census_squash > 0.0) || !(census_hamming > 0.0) || !(census_robust_eps > 0.0)) {
    throw std::invalid_argument("LossConfig: census constants must be positive");
  }
}

template <typename T>
Tensor<T> charbonnier(const Tensor<T>& x, const LossConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.numel();
  if (n == 0) throw ShapeError("charbonnier: empty tensor");
  const double e2 = cfg.eps * cfg.eps;
  const double alpha = cfg.alpha;
  double acc = 0.0;
  for (T v : x.data()) acc += std::pow(static_cast<double>(v) * v + e2, alpha);
  return Tensor<T>::from_op("charbonnier", Shape{1}, {static_cast<T>(acc / n)}, {x},
                            [e2, alpha, n](detail::Node<T>& self) {
    T* g = self.parent_grad(0);
    if (!g) return;
    const auto& xv = self.parents[0]->value;
    const double go = static_cast<double>(self.grad[0]) / n;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double v = xv[i];
      g[i] += static_cast<T>(go * 2.0 * alpha * v * std::pow(v * v + e2, alpha - 1.0));
    }
  });
}

namespace {

constexpr std::array<double, 3> kLuma{0.299, 0.587, 0.114};

}  // namespace

template <typename T>
Tensor<T> census_intensity(const Tensor<T>& img, const LossConfig& cfg) {
  cfg.validate();
  if (img.rank() != 3 || (img.dim(0) != 1 && img.dim(0) != 3)) {
    throw ShapeError("census_intensity: expected 1×H×W or 3×H×W images, got " + shape_str(img.shape()));
  }
  const int c = img.dim(0);
  const std::size_t plane = static_cast<std::size_t>(img.dim(1)) * img.dim(2);
  const double scale = cfg.census_intensity;
  std::vector<T> out(plane);
  auto v = img.data();
  for (std::size_t p = 0; p < plane; ++p) {
    double acc = 0.0;
    if (c == 1) {
      acc = v[p];
    } else {
      for (int k = 0; k < 3; ++k) acc += kLuma[k] * v[k * plane + p];
    }
    out[p] = static_cast<T>(scale * acc);
  }
  return Tensor<T>::from_op("luma", Shape{1, img.dim(1), img.dim(2)}, std::move(out), {img},
                            [c, plane, scale](detail::Node<T>& self) {
    T* g = self.parent_grad(0);
    if (!g) return;
    for (std::size_t p = 0; p < plane; ++p) {
      const double go = scale * self.grad[p];
      if (c == 1) {
        g[p] += static_cast<T>(go);
      } else {
        for (int k = 0; k < 3; ++k) g[k * plane + p] += static_cast<T>(kLuma[k] * go);
      }
    }
  });
}

template <typename T>
Tensor<T> census_distance(const Tensor<T>& a, const Tensor<T>& b, const LossConfig& cfg) {
  cfg.validate();
  if (a.rank() != 3 || a.dim(0) != 1) {
    throw ShapeError("census_distance: expected 1×H×W intensities, got " + shape_str(a.shape()));
  }
  require_same_shape(a.shape(), b.shape(), "census_distance");
  const int h = a.dim(1), w = a.dim(2);
  const int half = cfg.census_patch / 2;
  if (h < cfg.census_patch || w < cfg.census_patch) {
    throw ShapeError("census_distance: image smaller than the census patch");
  }
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const double sq = cfg.census_squash, hm = cfg.census_hamming, re = cfg.census_robust_eps;
  const double neighbours = static_cast<double>(cfg.census_patch) * cfg.census_patch;
  const double interior = static_cast<double>(h - 2 * half) * (w - 2 * half);

  const std::vector<double> la(a.data().begin(), a.data().end());
  const std::vector<double> lb(b.data().begin(), b.data().end());
  std::vector<double> dist(plane, 0.0);  // soft Hamming per interior pixel

#pragma omp parallel for
  for (int y = half; y < h - half; ++y) {
    for (int x = half; x < w - half; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      double acc = 0.0;
      for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
          const std::size_t q = p + static_cast<long>(dy) * w + dx;
          const double da = la[q] - la[p], db = lb[q] - lb[p];
          const double delta = da / std::sqrt(sq + da * da) - db / std::sqrt(sq + db * db);
          acc += delta * delta / (hm + delta * delta);
        }
      }
      dist[p] = acc / neighbours;
    }
  }
  double total = 0.0;
  for (int y = half; y < h - half; ++y) {
    for (int x = half; x < w - half; ++x) {
      const double d = dist[static_cast<std::size_t>(y) * w + x];
      total += std::sqrt(d * d + re * re) - re;
    }
  }

  return Tensor<T>::from_op(
      "census", Shape{1}, {static_cast<T>(total / interior)}, {a, b},
      [=, la = std::move(la), lb = std::move(lb), dist = std::move(dist)](detail::Node<T>& self) {
        T* ga = self.parent_grad(0);
        T* gb = self.parent_grad(1);
        if (!ga && !gb) return;
        const double go = static_cast<double>(self.grad[0]) / interior;
        std::vector<double> gla(plane, 0.0), glb(plane, 0.0);
        // Serial: neighbourhood scatters overlap between pixels.
        for (int y = half; y < h - half; ++y) {
          for (int x = half; x < w - half; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            const double d = dist[p];
            const double gd = go * d / std::sqrt(d * d + re * re) / neighbours;
            if (gd == 0.0) continue;
            for (int dy = -half; dy <= half; ++dy) {
              for (int dx = -half; dx <= half; ++dx) {
                const std::size_t q = p + static_cast<long>(dy) * w + dx;
                const double da = la[q] - la[p], db = lb[q] - lb[p];
                const double na = std::sqrt(sq + da * da), nb = std::sqrt(sq + db * db);
                const double delta = da / na - db / nb;
                const double den = hm + delta * delta;
                const double gdelta = gd * 2.0 * delta * hm / (den * den);
                const double gda = gdelta * sq / (na * na * na);
                const double gdb = -gdelta * sq / (nb * nb * nb);
                gla[q] += gda;
                gla[p] -= gda;
                glb[q] += gdb;
                glb[p] -= gdb;
              }
            }
          }
        }
        for (std::size_t p = 0; p < plane; ++p) {
          if (ga) ga[p] += static_cast<T>(gla[p]);
          if (gb) gb[p] += static_cast<T>(glb[p]);
        }
      });
}

template <typename T>
Tensor<T> census_loss(const Tensor<T>& a, const Tensor<T>& b, const LossConfig& cfg) {
  require_same_shape(a.shape(), b.shape(), "census_loss");
  return census_distance(census_intensity(a, cfg), census_intensity(b, cfg), cfg);
}

template <typename T>
Tensor<T> photometric_loss(const Tensor<T>& target, const Tensor<T>& frame0,
                           const Tensor<T>& frame1, const BilateralField<T>& motion,
                           const LossConfig& cfg) {
  require_same_shape(target.shape(), frame0.shape(), "photometric_loss");
  require_same_shape(target.shape(), frame1.shape(), "photometric_loss");
  if (motion.to1.data.dim(1) != target.dim(1) || motion.to1.data.dim(2) != target.dim(2)) {
    throw ShapeError("photometric_loss: motion resolution differs from the target");
  }
  if (!motion.symmetric()) throw std::invalid_argument("photometric_loss: motion pair is not symmetric");
  const Tensor<T> w0 = backward_warp(frame0, motion.to0.data);
  const Tensor<T> w1 = backward_warp(frame1, motion.to1.data);
  Tensor<T> loss = add(charbonnier(sub(target, w0), cfg), charbonnier(sub(target, w1), cfg));
  loss = add(loss, census_loss(target, w0, cfg));
  return add(loss, census_loss(target, w1, cfg));
}

template <typename T>
Tensor<T> synthesis_loss(const Tensor<T>& target, const Tensor<T>& prediction,
                         const LossConfig& cfg) {
  require_same_shape(target.shape(), prediction.shape(), "synthesis_loss");
  return add(charbonnier(sub(target, prediction), cfg), census_loss(target, prediction, cfg));
}

#define BIMOTION_INSTANTIATE_LOSSES(T)                                                          \
  template Tensor<T> charbonnier(const Tensor<T>&, const LossConfig&);                          \
  template Tensor<T> census_intensity(const Tensor<T>&, const LossConfig&);                     \
  template Tensor<T> census_distance(const Tensor<T>&, const Tensor<T>&, const LossConfig&);    \
  template Tensor<T> census_loss(const Tensor<T>&, const Tensor<T>&, const LossConfig&);        \
  template Tensor<T> photometric_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                      const BilateralField<T>&, const LossConfig&);             \
  template Tensor<T> synthesis_loss(const Tensor<T>&, const Tensor<T>&, const LossConfig&);

BIMOTION_INSTANTIATE_LOSSES(float)
BIMOTION_INSTANTIATE_LOSSES(double)

}  // namespace bimotion
