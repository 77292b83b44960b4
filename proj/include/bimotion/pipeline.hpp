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
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bimotion/global_estimator.hpp"
#include "bimotion/losses.hpp"
#include "bimotion/synthesis.hpp"
#include "bimotion/core/optim.hpp"
#include "bimotion/upsampler.hpp"

namespace bimotion {

// Scale chain is fixed: global 1/8, refinements to 1/4 and 1/2, synthesis at
// full resolution. t is fixed at 1/2.
struct PipelineConfig {
  GlobalConfig global;
  UpsamplerConfig upsampler;
  SynthesisConfig synthesis;
  LossConfig loss;
  std::uint64_t seed = 0;  // weight initialization
  int pad_multiple = 16;

  void validate() const;
};

// key = value lines; '#' starts a comment. Unknown keys are an error.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::string& path, PipelineConfig base = {});

// Parameter layout: "biformer.*", "upsampler.*", "synthesis.*".
template <typename T>
class Model {
 public:
  explicit Model(const PipelineConfig& cfg);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }
  const PipelineConfig& config() const { return cfg_; }
  const GlobalEstimator<T>& biformer() const { return biformer_; }
  const Upsampler<T>& upsampler() const { return upsampler_; }
  const Synthesis<T>& synthesis() const { return synthesis_; }

 private:
  PipelineConfig cfg_;
  ParamStore<T> store_;
  Rng rng_;
  GlobalEstimator<T> biformer_;
  Upsampler<T> upsampler_;
  Synthesis<T> synthesis_;
};

template <typename T>
struct MotionStages {
  BilateralField<T> global;   // 1/8
  BilateralField<T> quarter;  // 1/4
  BilateralField<T> half;     // 1/2
};

// All stages on frames whose dims are multiples of 16.
template <typename T>
MotionStages<T> estimate_motion(const Model<T>& model, const Tensor<T>& frame0, const Tensor<T>& frame1);

template <typename T>
struct Interpolation {
  Tensor<T> frame;  // unclamped
  MotionStages<T> motion;  // cropped to the input's scale-aligned extent
};

// Pads to the configured multiple (replicate), runs every stage and crops.
template <typename T>
Interpolation<T> interpolate(const Model<T>& model, const Tensor<T>& frame0, const Tensor<T>& frame1);

// ---------------------------------------------------------------------------
// Synthetic translation data.
// ---------------------------------------------------------------------------
template <typename T>
struct SyntheticSample {
  Tensor<T> frame0, middle, frame1;  // 3×S×S in [0, 1]
  double shift_x = 0, shift_y = 0;   // full-res displacement of frame 1 relative to frame 0

  // Ground-truth V_{t->1} in pixels of the given scale denominator.
  double flow_x(int scale) const { return shift_x / 2.0 / scale; }
  double flow_y(int scale) const { return shift_y / 2.0 / scale; }
};

struct SyntheticConfig {
  int size = 64;
  double max_shift = 8.0;  // |shift| per axis, full resolution
  double blur_sigma = 2.0;
  int squares = 3;
};

// Gaussian-filtered colour noise with a few flat squares; frames 0 and 1 are
// the texture shifted by ±shift/2 around the middle frame.
template <typename T>
SyntheticSample<T> make_sample(Rng& rng, const SyntheticConfig& cfg);

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------
struct TrainConfig {
  int iterations = 2000;
  int batch = 4;
  double lr = 1e-4;
  std::uint64_t seed = 1;  // data order
  SyntheticConfig data;
  std::vector<int> sizes{64};  // working sizes drawn per batch
  // Weight of a photometric term on the refined half-scale field, added to
  // the synthesis loss in the refinement phase (0 disables).
  double refine_photometric = 0.0;
  int log_every = 0;
};

struct TrainReport {
  std::vector<double> losses;  // per iteration, batch mean
  double initial() const { return losses.empty() ? 0.0 : losses.front(); }
  // Mean of the last min(50, n) iterations.
  double final_window() const;
};

using TrainLogger = std::function<void(int iteration, double loss)>;

// Phase 1: photometric loss on the global field upsampled to full resolution.
template <typename T>
TrainReport train_biformer(Model<T>& model, const TrainConfig& cfg, const TrainLogger& log = {});

// Phase 2: BiFormer frozen, upsampler and synthesis trained on the synthesis
// loss. BiFormer stays frozen on return.
template <typename T>
TrainReport train_refinement(Model<T>& model, const TrainConfig& cfg, const TrainLogger& log = {});

// ---------------------------------------------------------------------------
// Metrics.
// ---------------------------------------------------------------------------
// Mean end-point error of a 2×H×W field against a constant ground truth.
template <typename T>
double endpoint_error(const Tensor<T>& flow, double gt_x, double gt_y);

// PSNR in dB for intensities in [0, 1]; the prediction is clamped first.
template <typename T>
double psnr(const Tensor<T>& prediction, const Tensor<T>& reference);

}  // namespace bimotion
