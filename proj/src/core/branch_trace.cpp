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
#include "bimotion/core/branch_trace.hpp"

#include <stdexcept>

namespace bimotion {

std::atomic<BranchTrace*> BranchTrace::active_{nullptr};

BranchTrace::BranchTrace() {
  BranchTrace* expected = nullptr;
  if (!active_.compare_exchange_strong(expected, this)) {
    throw std::logic_error("BranchTrace: another trace is already active");
  }
}

BranchTrace::~BranchTrace() { active_.store(nullptr); }

}  // namespace bimotion
