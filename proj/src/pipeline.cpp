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
#include "bimotion/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bimotion {

void PipelineConfig::validate() const {
  global.validate();
  upsampler.validate();
  synthesis.validate();
  loss.validate();
  if (pad_multiple <= 0 || pad_multiple % 16) {
    throw std::invalid_argument("PipelineConfig: pad multiple must be a positive multiple of 16");
  }
}

// ---------------------------------------------------------------------------
// Config text

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument("config: " + key + " expects a boolean, got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& text, PipelineConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    auto& att = cfg.global.attention;
    if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, v));
    } else if (key == "pad_multiple") {
      cfg.pad_multiple = parse_int(key, v);
    } else if (key == "global.correlation_radius") {
      cfg.global.correlation_radius = parse_int(key, v);
    } else if (key == "global.scale_cost") {
      cfg.global.scale_cost = parse_bool(key, v);
    } else if (key == "encoder.window") {
      cfg.global.encoder.window = parse_int(key, v);
    } else if (key == "attention.channels") {
      att.channels = parse_int(key, v);
      cfg.global.encoder.widths[2] = att.channels;
    } else if (key == "attention.heads") {
      att.heads = parse_int(key, v);
    } else if (key == "attention.window_radius") {
      att.window_radius = parse_int(key, v);
    } else if (key == "attention.swin_window") {
      att.swin_window = parse_int(key, v);
    } else if (key == "attention.mlp_ratio") {
      att.mlp_ratio = parse_int(key, v);
    } else if (key == "attention.bca_no_anchor") {
      att.use_bca_no_anchor = parse_bool(key, v);
    } else if (key == "attention.bca_anchor_1") {
      att.use_bca_anchor_1 = parse_bool(key, v);
    } else if (key == "attention.bca_anchor_2") {
      att.use_bca_anchor_2 = parse_bool(key, v);
    } else if (key == "upsampler.cost_radius") {
      cfg.upsampler.cost_radius = parse_int(key, v);
    } else if (key == "upsampler.shallow_channels") {
      cfg.upsampler.shallow_channels = parse_int(key, v);
    } else if (key == "upsampler.match_channels") {
      cfg.upsampler.match_channels = parse_int(key, v);
    } else if (key == "upsampler.centers") {
      if (v == "index") {
        cfg.upsampler.centers = CenterConvention::kIndex;
      } else if (v == "half_pixel") {
        cfg.upsampler.centers = CenterConvention::kHalfPixel;
      } else {
        throw std::invalid_argument("config: upsampler.centers must be 'index' or 'half_pixel'");
      }
    } else if (key == "synthesis.warped_frames") {
      cfg.synthesis.warped_frames = parse_bool(key, v);
    } else if (key == "loss.alpha") {
      cfg.loss.alpha = parse_double(key, v);
    } else if (key == "loss.eps") {
      cfg.loss.eps = parse_double(key, v);
    } else if (key == "loss.census_patch") {
      cfg.loss.census_patch = parse_int(key, v);
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path, PipelineConfig base) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), base);
}

// ---------------------------------------------------------------------------
// Model

namespace {

const PipelineConfig& checked(const PipelineConfig& cfg) {
  cfg.validate();
  return cfg;
}

template <typename T>
Tensor<T> crop_to(const Tensor<T>& x, int h, int w) {
  if (x.dim(1) == h && x.dim(2) == w) return x;
  return crop2d(x, 0, 0, h, w);
}

template <typename T>
BilateralField<T> crop_field(const BilateralField<T>& f, int h, int w) {
  return BilateralField<T>::from_to1(crop_to(f.to1.data, h, w), f.to1.scale);
}

}  // namespace

template <typename T>
Model<T>::Model(const PipelineConfig& cfg)
    : cfg_(checked(cfg)),
      rng_(cfg.seed),
      biformer_(store_, "biformer", cfg.global, rng_),
      upsampler_(store_, "upsampler", cfg.upsampler, rng_),
      synthesis_(store_, "synthesis", cfg.synthesis, rng_) {}

template <typename T>
MotionStages<T> estimate_motion(const Model<T>& model, const Tensor<T>& frame0, const Tensor<T>& frame1) {
  require_same_shape(frame0.shape(), frame1.shape(), "estimate_motion");
  if (frame0.dim(1) % 16 || frame0.dim(2) % 16) {
    throw ShapeError("estimate_motion: frame dims must be multiples of 16, got " + shape_str(frame0.shape()));
  }
  MotionStages<T> m;
  m.global = model.biformer()(frame0, frame1);
  m.quarter = model.upsampler().refine(m.global, avg_pool(frame0, 4), avg_pool(frame1, 4)).motion;
  m.half = model.upsampler().refine(m.quarter, avg_pool(frame0, 2), avg_pool(frame1, 2)).motion;
  return m;
}

template <typename T>
Interpolation<T> interpolate(const Model<T>& model, const Tensor<T>& frame0, const Tensor<T>& frame1) {
  if (frame0.rank() != 3 || frame0.dim(0) != 3) {
    throw ShapeError("interpolate: expected 3×H×W frames, got " + shape_str(frame0.shape()));
  }
  if (frame0.shape() != frame1.shape()) {
    throw ShapeError("interpolate: frame sizes differ (" + shape_str(frame0.shape()) + " vs " +
                     shape_str(frame1.shape()) + ")");
  }
  const int h = frame0.dim(1), w = frame0.dim(2);
  const int m = model.config().pad_multiple;
  const int ph = (m - h % m) % m, pw = (m - w % m) % m;
  auto pad = [&](const Tensor<T>& x) { return (ph || pw) ? pad2d(x, 0, ph, 0, pw, PadMode::kReplicate) : x; };
  const Tensor<T> p0 = pad(frame0), p1 = pad(frame1);

  Interpolation<T> out;
  const MotionStages<T> motion = estimate_motion(model, p0, p1);
  out.frame = crop_to(model.synthesis()(p0, p1, motion.half), h, w);
  auto ceil_div = [](int a, int b) { return (a + b - 1) / b; };
  out.motion.global = crop_field(motion.global, ceil_div(h, 8), ceil_div(w, 8));
  out.motion.quarter = crop_field(motion.quarter, ceil_div(h, 4), ceil_div(w, 4));
  out.motion.half = crop_field(motion.half, ceil_div(h, 2), ceil_div(w, 2));
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) total += (k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma)));
  for (double& v : k) v /= total;
  return k;
}

// Separable blur with clamped borders, in place on an n×n plane.
void blur(std::vector<double>& img, int n, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(img.size());
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * img[y * n + std::clamp(x + i, 0, n - 1)];
      tmp[y * n + x] = acc;
    }
  }
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[std::clamp(y + i, 0, n - 1) * n + x];
      img[y * n + x] = acc;
    }
  }
}

double sample(const std::vector<double>& img, int n, double y, double x) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double ax = x - x0, ay = y - y0;
  auto at = [&](int yy, int xx) { return img[std::clamp(yy, 0, n - 1) * n + std::clamp(xx, 0, n - 1)]; };
  return (1 - ay) * ((1 - ax) * at(y0, x0) + ax * at(y0, x0 + 1)) +
         ay * ((1 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1));
}

}  // namespace

template <typename T>
SyntheticSample<T> make_sample(Rng& rng, const SyntheticConfig& cfg) {
  if (cfg.size <= 0 || cfg.max_shift < 0) throw std::invalid_argument("make_sample: bad synthetic config");
  const int s = cfg.size;
  const int margin = static_cast<int>(std::ceil(cfg.max_shift / 2.0)) + 2;
  const int n = s + 2 * margin;
  const auto kernel = gaussian_kernel(cfg.blur_sigma);

  std::vector<std::vector<double>> tex(3, std::vector<double>(static_cast<std::size_t>(n) * n));
  for (auto& ch : tex) {
    for (double& v : ch) v = rng.normal();
    blur(ch, n, kernel);
    double mean = 0.0, var = 0.0;
    for (double v : ch) mean += v;
    mean /= ch.size();
    for (double v : ch) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / ch.size()) + 1e-12;
    for (double& v : ch) v = std::clamp(0.5 + 0.18 * (v - mean) / sd, 0.0, 1.0);
  }
  for (int q = 0; q < cfg.squares; ++q) {
    const int side = rng.uniform_int(4, std::max(4, s / 5));
    const int y0 = rng.uniform_int(0, n - side), x0 = rng.uniform_int(0, n - side);
    for (int c = 0; c < 3; ++c) {
      const double colour = rng.uniform();
      for (int y = y0; y < y0 + side; ++y) {
        for (int x = x0; x < x0 + side; ++x) tex[c][y * n + x] = colour;
      }
    }
  }

  SyntheticSample<T> out;
  out.shift_x = rng.uniform(-cfg.max_shift, cfg.max_shift);
  out.shift_y = rng.uniform(-cfg.max_shift, cfg.max_shift);
  auto render = [&](double ox, double oy) {
    std::vector<T> v(static_cast<std::size_t>(3) * s * s);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
          v[(static_cast<std::size_t>(c) * s + y) * s + x] =
              static_cast<T>(sample(tex[c], n, y + margin + oy, x + margin + ox));
        }
      }
    }
    return Tensor<T>(Shape{3, s, s}, std::move(v));
  };
  // I_t(x) = I_0(x - shift/2) = I_1(x + shift/2).
  out.middle = render(0, 0);
  out.frame0 = render(out.shift_x / 2, out.shift_y / 2);
  out.frame1 = render(-out.shift_x / 2, -out.shift_y / 2);
  return out;
}

// ---------------------------------------------------------------------------
// Training

double TrainReport::final_window() const {
  if (losses.empty()) return 0.0;
  const std::size_t n = std::min<std::size_t>(50, losses.size());
  double acc = 0.0;
  for (std::size_t i = losses.size() - n; i < losses.size(); ++i) acc += losses[i];
  return acc / n;
}

namespace {

template <typename T>
BilateralField<T> upsample_to_full(BilateralField<T> f) {
  while (f.to1.scale > 1) f = rescale_bilateral(f, Rescale::kUp2);
  return f;
}

template <typename T, typename Step>
TrainReport run_training(const TrainConfig& cfg, std::vector<Tensor<T>> params, const char* phase,
                         const TrainLogger& log, Step&& step) {
  if (cfg.iterations < 0 || cfg.batch <= 0 || cfg.sizes.empty()) {
    throw std::invalid_argument(std::string(phase) + ": bad training config");
  }
  Adam<T> opt(std::move(params), AdamOptions{cfg.lr});
  Rng data_rng(cfg.seed);
  TrainReport report;
  for (int it = 0; it < cfg.iterations; ++it) {
    const int size = cfg.sizes[data_rng.uniform_int(0, static_cast<int>(cfg.sizes.size()) - 1)];
    SyntheticConfig dc = cfg.data;
    dc.size = size;
    double total = 0.0;
    opt.zero_grad();
    try {
      for (int b = 0; b < cfg.batch; ++b) {
        const auto sample = make_sample<T>(data_rng, dc);
        const Tensor<T> loss = step(sample);
        total += static_cast<double>(loss.item());
        scale(loss, static_cast<T>(1.0 / cfg.batch)).backward();
      }
    } catch (const NumericError& e) {
      throw NumericError(std::string(phase) + ": diverged at iteration " + std::to_string(it) + " (" + e.what() + ")");
    }
    opt.step();
    report.losses.push_back(total / cfg.batch);
    if (log && (cfg.log_every <= 0 ? false : (it % cfg.log_every == 0 || it + 1 == cfg.iterations))) {
      log(it, report.losses.back());
    }
  }
  opt.zero_grad();
  return report;
}

template <typename T>
std::vector<Tensor<T>> join(std::vector<Tensor<T>> a, const std::vector<Tensor<T>>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

template <typename T>
TrainReport train_biformer(Model<T>& model, const TrainConfig& cfg, const TrainLogger& log) {
  model.params().set_trainable("biformer", true);
  model.params().set_trainable("upsampler", false);
  model.params().set_trainable("synthesis", false);
  const LossConfig loss_cfg = model.config().loss;
  auto report = run_training<T>(cfg, model.params().tensors("biformer"), "train_biformer", log,
                                [&](const SyntheticSample<T>& s) {
    const auto motion = upsample_to_full(model.biformer()(s.frame0, s.frame1));
    return photometric_loss(s.middle, s.frame0, s.frame1, motion, loss_cfg);
  });
  model.params().set_trainable("upsampler", true);
  model.params().set_trainable("synthesis", true);
  return report;
}

template <typename T>
TrainReport train_refinement(Model<T>& model, const TrainConfig& cfg, const TrainLogger& log) {
  model.params().set_trainable("biformer", false);
  model.params().set_trainable("upsampler", true);
  model.params().set_trainable("synthesis", true);
  const LossConfig loss_cfg = model.config().loss;
  const double aux = cfg.refine_photometric;
  return run_training<T>(cfg, join(model.params().tensors("upsampler"), model.params().tensors("synthesis")),
                         "train_refinement", log, [&](const SyntheticSample<T>& s) {
    const auto motion = estimate_motion(model, s.frame0, s.frame1);
    Tensor<T> loss = synthesis_loss(s.middle, model.synthesis()(s.frame0, s.frame1, motion.half), loss_cfg);
    if (aux > 0.0) {
      const auto full = upsample_to_full(motion.half);
      loss = add(loss, scale(photometric_loss(s.middle, s.frame0, s.frame1, full, loss_cfg), static_cast<T>(aux)));
    }
    return loss;
  });
}

// ---------------------------------------------------------------------------
// Metrics

template <typename T>
double endpoint_error(const Tensor<T>& flow, double gt_x, double gt_y) {
  if (flow.rank() != 3 || flow.dim(0) != 2) throw ShapeError("endpoint_error: expected 2×H×W flow");
  const std::size_t plane = static_cast<std::size_t>(flow.dim(1)) * flow.dim(2);
  auto v = flow.data();
  double acc = 0.0;
  for (std::size_t p = 0; p < plane; ++p) {
    acc += std::hypot(static_cast<double>(v[p]) - gt_x, static_cast<double>(v[plane + p]) - gt_y);
  }
  return acc / plane;
}

template <typename T>
double psnr(const Tensor<T>& prediction, const Tensor<T>& reference) {
  require_same_shape(prediction.shape(), reference.shape(), "psnr");
  auto a = prediction.data();
  auto b = reference.data();
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::clamp(static_cast<double>(a[i]), 0.0, 1.0) - static_cast<double>(b[i]);
    mse += d * d;
  }
  mse /= a.size();
  return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
}

#define BIMOTION_INSTANTIATE_PIPELINE(T)                                                              \
  template class Model<T>;                                                                            \
  template MotionStages<T> estimate_motion(const Model<T>&, const Tensor<T>&, const Tensor<T>&);      \
  template Interpolation<T> interpolate(const Model<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template SyntheticSample<T> make_sample(Rng&, const SyntheticConfig&);                              \
  template TrainReport train_biformer(Model<T>&, const TrainConfig&, const TrainLogger&);             \
  template TrainReport train_refinement(Model<T>&, const TrainConfig&, const TrainLogger&);           \
  template double endpoint_error(const Tensor<T>&, double, double);                                   \
  template double psnr(const Tensor<T>&, const Tensor<T>&);

BIMOTION_INSTANTIATE_PIPELINE(float)
BIMOTION_INSTANTIATE_PIPELINE(double)

}  // namespace bimotion
