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
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bimotion/core/tensor.hpp"

namespace bimotion {

// Deterministic generator: the sampling transforms are written out here so
// streams do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);
  double normal();                        // Box-Muller
  double truncated_normal(double stddev); // resampled outside ±2σ
  int uniform_int(int lo, int hi);        // inclusive
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class Init { kZeros, kOnes, kTruncNormal, kKaimingFanIn };

struct WeightEntry {
  Shape shape;
  std::vector<float> values;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "BIMW" container: magic, u32 version, u32 count, then per entry
// u16 name length, UTF-8 name, u8 rank, u32 dims, little-endian f32 payload.
std::vector<std::uint8_t> encode_weights(const std::map<std::string, WeightEntry>& entries);
std::map<std::string, WeightEntry> decode_weights(const std::vector<std::uint8_t>& bytes);

// Named learnable tensors. Iteration is in name order.
template <typename T>
class ParamStore {
 public:
  static constexpr double kProjectionStd = 0.02;

  Tensor<T> add(const std::string& name, Shape shape, Init init, Rng& rng);
  Tensor<T> get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::vector<std::string> names() const;
  std::vector<Tensor<T>> tensors(const std::string& prefix = "") const;
  // Number of scalar parameters under `prefix`.
  std::size_t count(const std::string& prefix = "") const;

  void set_trainable(const std::string& prefix, bool on);
  void zero_grad();

  std::map<std::string, WeightEntry> export_entries() const;
  // Copies values into the existing tensors; every stored name must match.
  void import_entries(const std::map<std::string, WeightEntry>& entries);

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::map<std::string, Tensor<T>> params_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace bimotion
