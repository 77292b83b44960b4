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
#include "bimotion/synthesis.hpp"

namespace bimotion {

void SynthesisConfig::validate() const {
  for (int w : widths) {
    if (w <= 0) throw std::invalid_argument("SynthesisConfig: widths must be positive");
  }
}

template <typename T>
Synthesis<T>::Synthesis(ParamStore<T>& store, const std::string& name, const SynthesisConfig& cfg,
                        Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  const auto& wd = cfg.widths;
  int in = 3;
  for (int l = 0; l < 3; ++l) {
    const std::string level = name + ".encoder.level" + std::to_string(l);
    down_[l] = nn::Conv<T>(store, level + ".down", in, wd[l], 3, 2, 1, rng);
    enc_[l] = nn::Conv<T>(store, level + ".conv", wd[l], wd[l], 3, 1, 1, rng);
    in = wd[l];
  }
  // Decoder, coarsest first: level 2 sees only the warped skips, finer
  // levels also see the upsampled decoder state from below.
  for (int l = 2; l >= 0; --l) {
    const std::string level = name + ".decoder.level" + std::to_string(l);
    const int from_below = l == 2 ? 0 : wd[l + 1];
    fuse_[l] = nn::Conv<T>(store, level + ".fuse", from_below + 2 * wd[l], wd[l], 3, 1, 1, rng);
    dec_[l] = nn::Conv<T>(store, level + ".conv", wd[l], wd[l], 3, 1, 1, rng);
  }
  shuffle_ = nn::Conv<T>(store, name + ".upsample", wd[0], 3 * 4, 3, 1, 1, rng);
  const int out_in = cfg.warped_frames ? 9 : 3;
  out_ = nn::Conv<T>(store, name + ".output", out_in, 3, 3, 1, 1, rng, false);
}

template <typename T>
std::array<Tensor<T>, 3> Synthesis<T>::encode(const Tensor<T>& frame) const {
  std::array<Tensor<T>, 3> g;
  Tensor<T> x = frame;
  for (int l = 0; l < 3; ++l) {
    x = relu(enc_[l](relu(down_[l](x))));
    g[l] = x;
  }
  return g;
}

template <typename T>
SynthesisSkips<T> Synthesis<T>::skips(const Tensor<T>& frame0, const Tensor<T>& frame1,
                                      const BilateralField<T>& half_scale) const {
  const auto g0 = encode(frame0);
  const auto g1 = encode(frame1);
  SynthesisSkips<T> s;
  BilateralField<T> v = half_scale;
  for (int l = 0; l < 3; ++l) {
    if (l > 0) v = rescale_bilateral(v, Rescale::kDown2);
    s.warped0[l] = backward_warp(g0[l], v.to0.data);
    s.warped1[l] = backward_warp(g1[l], v.to1.data);
  }
  return s;
}

template <typename T>
Tensor<T> Synthesis<T>::operator()(const Tensor<T>& frame0, const Tensor<T>& frame1,
                                   const BilateralField<T>& half_scale) const {
  require_same_shape(frame0.shape(), frame1.shape(), "synthesize");
  const int h = frame0.dim(1), w = frame0.dim(2);
  if (h % 8 || w % 8) throw ShapeError("synthesize: frame dims must be divisible by 8, got " + shape_str(frame0.shape()));
  if (half_scale.to1.height() != h / 2 || half_scale.to1.width() != w / 2) {
    throw ShapeError("synthesize: motion must be at half the frame resolution");
  }
  if (!half_scale.symmetric()) throw std::invalid_argument("synthesize: motion pair is not symmetric");

  const auto s = skips(frame0, frame1, half_scale);
  Tensor<T> x;
  for (int l = 2; l >= 0; --l) {
    std::vector<Tensor<T>> parts;
    if (l < 2) parts.push_back(resize_bilinear(x, s.warped0[l].dim(1), s.warped0[l].dim(2)));
    parts.push_back(s.warped0[l]);
    parts.push_back(s.warped1[l]);
    x = relu(dec_[l](relu(fuse_[l](concat_channels(parts)))));
  }
  Tensor<T> y = pixel_shuffle(shuffle_(x), 2);
  if (cfg_.warped_frames) {
    const auto full = rescale_bilateral(half_scale, Rescale::kUp2);
    y = concat_channels<T>({y, backward_warp(frame0, full.to0.data), backward_warp(frame1, full.to1.data)});
  }
  return out_(y);
}

template class Synthesis<float>;
template class Synthesis<double>;

}  // namespace bimotion
