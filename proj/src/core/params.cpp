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
#include "bimotion/core/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

namespace bimotion {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  spare_ = rad * std::sin(ang);
  has_spare_ = true;
  return rad * std::cos(ang);
}

double Rng::truncated_normal(double stddev) {
  double z = normal();
  while (std::abs(z) > 2.0) z = normal();
  return z * stddev;
}

int Rng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(engine_() % span);
}

namespace {

constexpr char kMagic[4] = {'B', 'I', 'M', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("weights: truncated container");
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  std::uint16_t u16() {
    const std::uint8_t* p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint8_t u8() { return *take(1); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_weights(const std::map<std::string, WeightEntry>& entries) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, e] : entries) {
    if (name.size() > 0xffff) throw FormatError("weights: name too long: " + name);
    if (e.shape.size() > 0xff) throw FormatError("weights: rank too large for " + name);
    if (shape_numel(e.shape) != e.values.size()) throw FormatError("weights: size mismatch for " + name);
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<std::uint8_t>(e.shape.size()));
    for (int d : e.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : e.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::map<std::string, WeightEntry> decode_weights(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (std::memcmp(in.take(4), kMagic, 4) != 0) throw FormatError("weights: bad magic");
  const std::uint32_t version = in.u32();
  if (version != kVersion) throw FormatError("weights: unsupported version " + std::to_string(version));
  const std::uint32_t count = in.u32();
  std::map<std::string, WeightEntry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = in.u16();
    const std::uint8_t* p = in.take(len);
    std::string name(reinterpret_cast<const char*>(p), len);
    WeightEntry e;
    const std::uint8_t rank = in.u8();
    for (int r = 0; r < rank; ++r) e.shape.push_back(static_cast<int>(in.u32()));
    e.values.resize(shape_numel(e.shape));
    for (float& v : e.values) v = std::bit_cast<float>(in.u32());
    if (!entries.emplace(std::move(name), std::move(e)).second) {
      throw FormatError("weights: duplicate entry");
    }
  }
  if (!in.done()) throw FormatError("weights: trailing bytes");
  return entries;
}

template <typename T>
Tensor<T> ParamStore<T>::add(const std::string& name, Shape shape, Init init, Rng& rng) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  Tensor<T> t(shape, true);
  auto data = t.data_mut();
  const std::size_t n = data.size();
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      for (T& v : data) v = T(1);
      break;
    case Init::kTruncNormal:
      for (T& v : data) v = static_cast<T>(rng.truncated_normal(kProjectionStd));
      break;
    case Init::kKaimingFanIn: {
      const std::size_t fan_in = shape.empty() || shape[0] == 0 ? 1 : n / shape[0];
      const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (T& v : data) v = static_cast<T>(rng.normal() * stddev);
      break;
    }
  }
  params_.emplace(name, t);
  return t;
}

template <typename T>
Tensor<T> ParamStore<T>::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

template <typename T>
std::vector<std::string> ParamStore<T>::names() const {
  std::vector<std::string> out;
  for (const auto& kv : params_) out.push_back(kv.first);
  return out;
}

template <typename T>
std::vector<Tensor<T>> ParamStore<T>::tensors(const std::string& prefix) const {
  std::vector<Tensor<T>> out;
  for (const auto& [name, t] : params_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(t);
  }
  return out;
}

template <typename T>
std::size_t ParamStore<T>::count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& t : tensors(prefix)) n += t.numel();
  return n;
}

template <typename T>
void ParamStore<T>::set_trainable(const std::string& prefix, bool on) {
  for (auto t : tensors(prefix)) t.set_requires_grad(on);
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& kv : params_) kv.second.zero_grad();
}

template <typename T>
std::map<std::string, WeightEntry> ParamStore<T>::export_entries() const {
  std::map<std::string, WeightEntry> out;
  for (const auto& [name, t] : params_) {
    WeightEntry e{t.shape(), {}};
    e.values.reserve(t.numel());
    for (T v : t.data()) e.values.push_back(static_cast<float>(v));
    out.emplace(name, std::move(e));
  }
  return out;
}

template <typename T>
void ParamStore<T>::import_entries(const std::map<std::string, WeightEntry>& entries) {
  for (const auto& [name, e] : entries) {
    auto it = params_.find(name);
    if (it == params_.end()) throw FormatError("weights: unknown parameter " + name);
    if (it->second.shape() != e.shape) {
      throw FormatError("weights: shape mismatch for " + name + ": " + shape_str(e.shape) +
                        " vs " + shape_str(it->second.shape()));
    }
  }
  for (const auto& [name, e] : entries) {
    auto dst = params_.at(name).data_mut();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(e.values[i]);
  }
}

template <typename T>
void ParamStore<T>::save(const std::filesystem::path& path) const {
  const auto bytes = encode_weights(export_entries());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

template <typename T>
void ParamStore<T>::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  import_entries(decode_weights(bytes));
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace bimotion
