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

#include <atomic>
#include <cstdint>

namespace bimotion {

// Order-independent digest of the piecewise branches (ReLU signs, bilinear
// cells) taken by forward kernels while the trace is alive. Two evaluations
// with equal digests lie on the same smooth piece, so finite differences
// between them are free of kinks. One trace at a time, process-wide, so that
// OpenMP workers report into it too.
class BranchTrace {
 public:
  BranchTrace();
  ~BranchTrace();
  BranchTrace(const BranchTrace&) = delete;
  BranchTrace& operator=(const BranchTrace&) = delete;

  std::uint64_t digest() const { return digest_.load(std::memory_order_relaxed); }

  static BranchTrace* active() { return active_.load(std::memory_order_relaxed); }
  // Identifies the next traced kernel call; calls happen in program order.
  std::uint64_t next_site() { return ++sites_; }
  void note(std::uint64_t v) { digest_.fetch_add(mix(v), std::memory_order_relaxed); }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::atomic<BranchTrace*> active_;
  std::atomic<std::uint64_t> digest_{0};
  std::uint64_t sites_ = 0;
};

}  // namespace bimotion
