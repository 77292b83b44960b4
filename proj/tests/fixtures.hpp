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
// Small model configurations that keep whole-pipeline tests fast.
#pragma once

#include "bimotion/pipeline.hpp"

namespace fixtures {

inline bimotion::PipelineConfig tiny_config(std::uint64_t seed = 0) {
  bimotion::PipelineConfig cfg;
  cfg.seed = seed;
  cfg.global.encoder.widths = {8, 16, 16};
  cfg.global.encoder.heads = {1, 2, 2};
  cfg.global.encoder.window = 4;
  cfg.global.attention.channels = 16;
  cfg.global.attention.heads = 2;
  cfg.global.attention.window_radius = 2;
  cfg.global.attention.swin_window = 2;
  cfg.global.correlation_radius = 2;
  cfg.global.head_widths = {16, 16};
  cfg.upsampler.shallow_channels = 8;
  cfg.upsampler.match_channels = 8;
  cfg.upsampler.decoder_widths = {16, 16, 16};
  cfg.synthesis.widths = {8, 8, 16};
  return cfg;
}

}  // namespace fixtures
