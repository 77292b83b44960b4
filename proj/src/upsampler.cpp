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
#include "bimotion/upsampler.hpp"

namespace bimotion {

void UpsamplerConfig::validate() const {
  if (shallow_channels <= 0 || match_channels <= 0) {
    throw std::invalid_argument("UpsamplerConfig: channel counts must be positive");
  }
  if (cost_radius < 0) throw std::invalid_argument("UpsamplerConfig: negative cost radius");
  for (int w : decoder_widths) {
    if (w <= 0) throw std::invalid_argument("UpsamplerConfig: decoder widths must be positive");
  }
}

template <typename T>
Upsampler<T>::Upsampler(ParamStore<T>& store, const std::string& name, const UpsamplerConfig& cfg,
                        Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  const int cs = cfg.shallow_channels;
  shallow1_ = nn::Conv<T>(store, name + ".shallow.conv1", 3, cs, 3, 1, 1, rng);
  shallow2_ = nn::Conv<T>(store, name + ".shallow.conv2", cs, cs, 3, 1, 1, rng);
  const int nd = DisplacementWindow{cfg.cost_radius}.size();
  for (int k = 0; k < 3; ++k) {
    const std::string suffix = std::to_string(k);
    embed_[k] = nn::Conv<T>(store, name + ".embed" + suffix, cs, cs, 1 << k, 1 << k, 0, rng);
    match_[k] = nn::Conv<T>(store, name + ".match" + suffix, nd + 2, cfg.match_channels, 3, 1, 1, rng);
  }
  aggregate_ = nn::Conv<T>(store, name + ".aggregate", 3 * cfg.match_channels, cfg.match_channels, 1, 1, 0, rng);
  int in = 2 * cs + cfg.match_channels + 2;
  for (std::size_t i = 0; i < cfg.decoder_widths.size(); ++i) {
    decoder_.emplace_back(store, name + ".decoder.conv" + std::to_string(i), in,
                          cfg.decoder_widths[i], 3, 1, 1, rng);
    in = cfg.decoder_widths[i];
  }
  // Zero start: the untrained upsampler passes the rescaled field through.
  decoder_.emplace_back(store, name + ".decoder.out", in, 2, 3, 1, 1, rng, true, nn::WeightInit::kZero);
}

template <typename T>
Tensor<T> Upsampler<T>::shallow_encode(const Tensor<T>& image) const {
  return relu(shallow2_(relu(shallow1_(image))));
}

template <typename T>
std::array<Tensor<T>, 3> Upsampler<T>::block_embed(const Tensor<T>& features) const {
  if (features.dim(1) % 4 || features.dim(2) % 4) {
    throw ShapeError("block_embed: feature dims must be divisible by 4, got " + shape_str(features.shape()));
  }
  return {embed_[0](features), embed_[1](features), embed_[2](features)};
}

template <typename T>
Tensor<T> Upsampler<T>::matching_features(const std::array<CostVolume<T>, 3>& costs,
                                          const Tensor<T>& motion_to1) const {
  std::vector<Tensor<T>> parts;
  for (int k = 0; k < 3; ++k) {
    if (costs[k].height() != motion_to1.dim(1) || costs[k].width() != motion_to1.dim(2)) {
      throw ShapeError("matching_features: cost volume " + std::to_string(k) + " is not on the motion grid");
    }
    parts.push_back(relu(match_[k](concat_channels<T>({costs[k].data, motion_to1}))));
  }
  return aggregate_(concat_channels(parts));
}

template <typename T>
RefineOutput<T> Upsampler<T>::refine(const BilateralField<T>& input, const Tensor<T>& frame0,
                                     const Tensor<T>& frame1) const {
  if (!input.symmetric()) throw std::invalid_argument("refine: input motion pair is not symmetric");
  require_same_shape(frame0.shape(), frame1.shape(), "refine");
  if (frame0.dim(1) != 2 * input.to1.height() || frame0.dim(2) != 2 * input.to1.width()) {
    throw ShapeError("refine: frames must be at twice the input field resolution");
  }
  RefineOutput<T> out;
  out.upsampled = rescale_bilateral(input, Rescale::kUp2);
  const Tensor<T> s0 = shallow_encode(frame0);
  const Tensor<T> s1 = shallow_encode(frame1);
  const auto b0 = block_embed(s0);
  const auto b1 = block_embed(s1);
  for (int k = 0; k < 3; ++k) {
    out.costs[k] = bbcv(b0[k], b1[k], out.upsampled, k, cfg_.cost_radius, cfg_.centers);
  }
  const Tensor<T> matched = matching_features(out.costs, out.upsampled.to1.data);
  const Tensor<T> w0 = backward_warp(s0, out.upsampled.to0.data);
  const Tensor<T> w1 = backward_warp(s1, out.upsampled.to1.data);

  Tensor<T> x = concat_channels<T>({w0, w1, matched, out.upsampled.to1.data});
  for (std::size_t i = 0; i + 1 < decoder_.size(); ++i) x = relu(decoder_[i](x));
  out.residual = decoder_.back()(x);
  out.motion = BilateralField<T>::from_to1(add(out.upsampled.to1.data, out.residual),
                                           out.upsampled.to1.scale);
  return out;
}

template class Upsampler<float>;
template class Upsampler<double>;

}  // namespace bimotion
