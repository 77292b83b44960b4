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
#include "bimotion/global_estimator.hpp"

#include <cmath>

namespace bimotion {

void GlobalConfig::validate() const {
  attention.validate();
  if (encoder.widths[2] != attention.channels) {
    throw std::invalid_argument("GlobalConfig: last encoder width must equal the attention channels");
  }
  for (int i = 0; i < 3; ++i) {
    if (encoder.widths[i] <= 0 || encoder.heads[i] <= 0 || encoder.widths[i] % encoder.heads[i]) {
      throw std::invalid_argument("GlobalConfig: encoder widths must be positive multiples of heads");
    }
  }
  if (encoder.window <= 0) throw std::invalid_argument("GlobalConfig: encoder window must be positive");
  if (correlation_radius < 0) throw std::invalid_argument("GlobalConfig: negative correlation radius");
}

namespace {

const GlobalConfig& checked(const GlobalConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

template <typename T>
GlobalEstimator<T>::GlobalEstimator(ParamStore<T>& store, const std::string& name,
                                    const GlobalConfig& cfg, Rng& rng)
    : cfg_(checked(cfg)), stack_(store, name + ".attention", cfg.attention, rng) {
  int in = 3;
  for (int i = 0; i < 3; ++i) {
    const std::string stage = name + ".encoder.stage" + std::to_string(i);
    const int width = cfg.encoder.widths[i];
    embed_.emplace_back(store, stage + ".embed", in, width, 3, 2, 1, rng);
    stages_.emplace_back(store, stage + ".attn", width, cfg.encoder.heads[i], cfg.encoder.window,
                         cfg.encoder.mlp_ratio, rng);
    in = width;
  }
  const int side = 2 * cfg.correlation_radius + 1;
  const int head_in = side * side + cfg.attention.channels;
  head1_ = nn::Conv<T>(store, name + ".head.conv1", head_in, cfg.head_widths[0], 3, 1, 1, rng);
  head2_ = nn::Conv<T>(store, name + ".head.conv2", cfg.head_widths[0], cfg.head_widths[1], 3, 1, 1, rng);
  head3_ = nn::Conv<T>(store, name + ".head.conv3", cfg.head_widths[1], 2, 3, 1, 1, rng);
}

template <typename T>
FeatureMap<T> GlobalEstimator<T>::encode(const Tensor<T>& image) const {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("encode: expected a 3×H×W frame, got " + shape_str(image.shape()));
  }
  if (image.dim(1) % EncoderConfig::kStride || image.dim(2) % EncoderConfig::kStride) {
    throw ShapeError("encode: frame dims must be divisible by 8, got " + shape_str(image.shape()));
  }
  Tensor<T> x = image;
  for (std::size_t i = 0; i < embed_.size(); ++i) x = stages_[i](embed_[i](x), false);
  return {x, EncoderConfig::kStride};
}

template <typename T>
BilateralField<T> GlobalEstimator<T>::predict(const CostVolume<T>& cost, const Tensor<T>& bilateral) const {
  if (cost.height() != bilateral.dim(1) || cost.width() != bilateral.dim(2)) {
    throw ShapeError("predict: cost volume and bilateral features are not aligned");
  }
  Tensor<T> c = cost.data;
  if (cfg_.scale_cost) c = scale(c, T(1) / std::sqrt(static_cast<T>(cfg_.attention.channels)));
  Tensor<T> x = relu(head1_(concat_channels<T>({c, bilateral})));
  x = relu(head2_(x));
  return BilateralField<T>::from_to1(head3_(x), EncoderConfig::kStride);
}

template <typename T>
GlobalOutput<T> GlobalEstimator<T>::run(const Tensor<T>& frame0, const Tensor<T>& frame1) const {
  require_same_shape(frame0.shape(), frame1.shape(), "biformer");
  GlobalOutput<T> out;
  out.f0 = encode(frame0);
  out.f1 = encode(frame1);
  out.cost = bilateral_correlation(out.f0.data, out.f1.data, cfg_.correlation_radius);
  out.bilateral = stack_(out.f0.data, out.f1.data);
  out.motion = predict(out.cost, out.bilateral);
  return out;
}

template class GlobalEstimator<float>;
template class GlobalEstimator<double>;

}  // namespace bimotion
