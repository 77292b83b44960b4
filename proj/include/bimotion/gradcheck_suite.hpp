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
#include <string>
#include <vector>

namespace bimotion {

struct GradcheckCase {
  std::string module;
  std::string name;
  std::uint64_t seed = 0;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return error < tolerance; }
};

// Module names accepted by run_gradcheck.
std::vector<std::string> gradcheck_modules();

// Central-difference checks (f64) of every differentiable op and block of
// `module` ("" or "all" for everything), once per seed. Scalar readouts are
// random weighted sums of the op outputs; flows are kept away from integer
// coordinates. Throws std::invalid_argument for an unknown module.
std::vector<GradcheckCase> run_gradcheck(const std::string& module, int seeds, std::uint64_t base_seed = 0);

}  // namespace bimotion
