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
// Command-line front end: interpolation, flow export, toy training, gradient
// checks and benchmarks.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bimotion/core/parallel.hpp"
#include "bimotion/gradcheck_suite.hpp"
#include "bimotion/io.hpp"
#include "bimotion/pipeline.hpp"

namespace {

using namespace bimotion;
using Clock = std::chrono::steady_clock;

struct ModelOptions {
  std::string weights;
  std::string config;
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--weights", m.weights, "Weight container (.bimw)")->check(CLI::ExistingFile);
  cmd->add_option("--config", m.config, "key = value configuration file")->check(CLI::ExistingFile);
}

PipelineConfig config_from(const ModelOptions& m) {
  return m.config.empty() ? PipelineConfig{} : load_config(m.config);
}

std::unique_ptr<Model<float>> load_model(const ModelOptions& m) {
  auto model = std::make_unique<Model<float>>(config_from(m));
  if (!m.weights.empty()) {
    model->params().load(m.weights);
  } else {
    std::cerr << "warning: no --weights given, using untrained initialization\n";
  }
  return model;
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct FrameOptions {
  std::string frame0, frame1;
};

void add_frame_options(CLI::App* cmd, FrameOptions& f) {
  cmd->add_option("--frame0", f.frame0, "First frame (PNG or PPM)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--frame1", f.frame1, "Second frame (PNG or PPM)")->required()->check(CLI::ExistingFile);
}

void dump_flow(const Tensor<float>& flow, const std::string& flo, const std::string& vis) {
  if (!flo.empty()) io::write_flo(flo, flow);
  if (!vis.empty()) io::write_image(vis, io::flow_colorize(flow));
}

int run_interpolate(const FrameOptions& frames, const ModelOptions& mo, const std::string& out,
                    const std::string& flo, const std::string& vis) {
  auto model = load_model(mo);
  const auto i0 = io::read_image(frames.frame0);
  const auto i1 = io::read_image(frames.frame1);
  const auto result = interpolate(*model, i0, i1);
  io::write_image(out, result.frame);
  dump_flow(result.motion.half.to1.data, flo, vis);
  return 0;
}

int run_flow(const FrameOptions& frames, const ModelOptions& mo, const std::string& stage,
             const std::string& flo, const std::string& vis) {
  auto model = load_model(mo);
  const auto result = interpolate(*model, io::read_image(frames.frame0), io::read_image(frames.frame1));
  const auto& m = result.motion;
  const auto& field = stage == "global" ? m.global : stage == "quarter" ? m.quarter : m.half;
  dump_flow(field.to1.data, flo, vis);
  return 0;
}

struct TrainOptions {
  std::string phase = "global";
  int iters = 2000;
  std::uint64_t seed = 1;
  std::string out;
  std::string init;
  int batch = 4;
  double lr = 1e-4;
  double max_shift = 8.0;
  std::vector<int> sizes;
  double refine_photometric = 0.0;
  int log_every = 50;
};

int run_train(const TrainOptions& t, const ModelOptions& mo) {
  Model<float> model(config_from(mo));
  if (!t.init.empty()) model.params().load(t.init);
  TrainConfig cfg;
  cfg.iterations = t.iters;
  cfg.seed = t.seed;
  cfg.batch = t.batch;
  cfg.lr = t.lr;
  cfg.data.max_shift = t.max_shift;
  cfg.refine_photometric = t.refine_photometric;
  cfg.log_every = t.log_every;
  if (!t.sizes.empty()) {
    cfg.sizes = t.sizes;
  } else {
    cfg.sizes = t.phase == "global" ? std::vector<int>{64} : std::vector<int>{48, 64};
  }
  const auto logger = [](int it, double loss) { std::cerr << "iter " << it << " loss " << loss << "\n"; };
  const auto start = Clock::now();
  const TrainReport report = t.phase == "global" ? train_biformer(model, cfg, logger) : train_refinement(model, cfg, logger);
  model.params().save(t.out);
  std::cout << "phase=" << t.phase << " iters=" << t.iters << " initial_loss=" << report.initial()
            << " final_loss=" << report.final_window() << " seconds=" << elapsed_ms(start) / 1000.0 << "\n";
  return 0;
}

int run_gradcheck_cmd(const std::string& module, int seeds, const std::string& fault, double factor) {
  std::optional<GradientFault> injected;
  if (!fault.empty()) injected.emplace(fault, factor);
  const auto cases = run_gradcheck(module, seeds);
  int failures = 0;
  for (const auto& c : cases) {
    std::printf("%-4s %-10s %-32s seed=%llu err=%.3e\n", c.passed() ? "ok" : "FAIL", c.module.c_str(),
                c.name.c_str(), static_cast<unsigned long long>(c.seed), c.error);
    failures += c.passed() ? 0 : 1;
  }
  std::printf("%zu checks, %d failed\n", cases.size(), failures);
  return failures == 0 ? 0 : 1;
}

Tensor<float> random_tensor(Rng& rng, Shape shape) {
  std::vector<float> v(shape_numel(shape));
  for (float& x : v) x = static_cast<float>(rng.uniform());
  return Tensor<float>(std::move(shape), std::move(v));
}

template <typename F>
double time_ms(F&& f, int reps = 3) {
  f();  // warm-up
  const auto start = Clock::now();
  for (int i = 0; i < reps; ++i) f();
  return elapsed_ms(start) / reps;
}

int run_bench(const std::string& mode, const std::vector<int>& sizes, const ModelOptions& mo) {
  Rng rng(7);
  std::cout << "size,mode,bytes,ms\n";
  if (mode == "costvol") {
    constexpr int kBlockRadius = 2, kChannels = 32;
    // The k = 2 block window spans ((2r+1)·2^k)² pixels; a full volume
    // needs a pixel radius of half that side to cover it.
    const int cover = block_window_pixels(kBlockRadius, 2);
    const int full_radius = cover / 2;
    for (int k = 0; k < 3; ++k) {
      const int side = block_window_pixels(kBlockRadius, k);
      std::cerr << "# k=" << k << ": ((2*" << kBlockRadius << "+1)*2^" << k << ")^2 = " << side << "^2 = "
                << side * side << " px\n";
    }
    std::cerr << "# full volume radius " << full_radius << ": (2*" << full_radius << "+1)^2 = "
              << (2 * full_radius + 1) * (2 * full_radius + 1) << " displacements\n";
    for (int s : sizes) {
      const auto f0 = random_tensor(rng, {kChannels, s, s}), f1 = random_tensor(rng, {kChannels, s, s});
      const double full_ms = time_ms([&] { bilateral_correlation(f0, f1, full_radius); });
      std::cout << s << ",full," << memory_report(s, s, full_radius, VolumeMode::kFull) << "," << full_ms << "\n";
      std::vector<Tensor<float>> b0, b1;
      for (int k = 0; k < 3; ++k) {
        b0.push_back(random_tensor(rng, {kChannels, s >> k, s >> k}));
        b1.push_back(random_tensor(rng, {kChannels, s >> k, s >> k}));
      }
      const auto motion = BilateralField<float>::from_to1(Tensor<float>(Shape{2, s, s}), 1);
      const double block_ms = time_ms([&] {
        for (int k = 0; k < 3; ++k) bbcv(b0[k], b1[k], motion, k, kBlockRadius);
      });
      std::cout << s << ",blockwise," << memory_report(s, s, kBlockRadius, VolumeMode::kBlockwise) << ","
                << block_ms << "\n";
    }
    return 0;
  }
  auto model = load_model(mo);
  const std::size_t param_bytes = model->params().count() * sizeof(float);
  for (int s : sizes) {
    const auto i0 = random_tensor(rng, {3, s, s}), i1 = random_tensor(rng, {3, s, s});
    const double ms = time_ms([&] { interpolate(*model, i0, i1); }, 1);
    std::cout << s << ",pipeline," << param_bytes << "," << ms << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  bimotion::configure_threads_from_env();
  CLI::App app{"Bilateral motion estimation and frame interpolation"};
  app.require_subcommand(1);

  FrameOptions frames;
  ModelOptions model_opts;
  std::string out, flo, vis, stage = "half";

  auto* interp = app.add_subcommand("interpolate", "Synthesize the middle frame");
  add_frame_options(interp, frames);
  add_model_options(interp, model_opts);
  interp->add_option("--out", out, "Output image")->required();
  interp->add_option("--dump-flow", flo, "Write V_{t->1} at 1/2 scale as .flo");
  interp->add_option("--dump-flow-vis", vis, "Write a colour-coded V_{t->1}");

  auto* flow = app.add_subcommand("flow", "Estimate the bilateral motion only");
  add_frame_options(flow, frames);
  add_model_options(flow, model_opts);
  flow->add_option("--out", flo, "Output .flo (V_{t->1})")->required();
  flow->add_option("--vis", vis, "Colour-coded visualization");
  flow->add_option("--stage", stage, "Field to export")->check(CLI::IsMember({"global", "quarter", "half"}));

  TrainOptions train;
  auto* tr = app.add_subcommand("train-toy", "Train on synthetic translation data");
  add_model_options(tr, model_opts);
  tr->add_option("--phase", train.phase)->check(CLI::IsMember({"global", "refine"}));
  tr->add_option("--iters", train.iters)->check(CLI::NonNegativeNumber);
  tr->add_option("--seed", train.seed);
  tr->add_option("--out", train.out, "Output weights")->required();
  tr->add_option("--init", train.init, "Start from these weights")->check(CLI::ExistingFile);
  tr->add_option("--batch", train.batch)->check(CLI::PositiveNumber);
  tr->add_option("--lr", train.lr)->check(CLI::PositiveNumber);
  tr->add_option("--max-shift", train.max_shift)->check(CLI::NonNegativeNumber);
  tr->add_option("--sizes", train.sizes, "Working sizes (multiples of 16)");
  tr->add_option("--refine-photometric", train.refine_photometric, "Photometric weight on refined fields");
  tr->add_option("--log-every", train.log_every);

  std::string module = "all", fault;
  int seeds = 3;
  double factor = 1.1;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks; nonzero exit on failure");
  gc->add_option("--module", module)->check(CLI::IsMember([] {
    auto m = bimotion::gradcheck_modules();
    m.push_back("all");
    return m;
  }()));
  gc->add_option("--seeds", seeds)->check(CLI::PositiveNumber);
  gc->add_option("--inject-fault", fault, "Scale the gradient flowing into this op");
  gc->add_option("--fault-factor", factor);

  std::string bench_mode = "costvol";
  std::vector<int> sizes{128};
  auto* bench = app.add_subcommand("bench", "Timing and memory CSV");
  add_model_options(bench, model_opts);
  bench->add_option("--mode", bench_mode)->check(CLI::IsMember({"costvol", "pipeline"}));
  bench->add_option("--sizes", sizes)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*interp) return run_interpolate(frames, model_opts, out, flo, vis);
    if (*flow) return run_flow(frames, model_opts, stage, flo, vis);
    if (*tr) return run_train(train, model_opts);
    if (*gc) return run_gradcheck_cmd(module, seeds, fault, factor);
    if (*bench) return run_bench(bench_mode, sizes, model_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
