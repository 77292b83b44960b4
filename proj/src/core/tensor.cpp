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
#include "bimotion/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace bimotion {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
}

namespace {

std::string g_fault_op;
double g_fault_factor = 1.0;

}  // namespace

GradientFault::GradientFault(std::string op, double factor) {
  g_fault_op = std::move(op);
  g_fault_factor = factor;
}

GradientFault::~GradientFault() {
  g_fault_op.clear();
  g_fault_factor = 1.0;
}

const std::string& GradientFault::active_op() { return g_fault_op; }
double GradientFault::factor() { return g_fault_factor; }

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad)
    : node_(std::make_shared<detail::Node<T>>()) {
  node_->value.assign(shape_numel(shape), T(0));
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<detail::Node<T>>()) {
  if (values.size() != shape_numel(shape)) {
    throw ShapeError("tensor: " + std::to_string(values.size()) +
                     " values for shape " + shape_str(shape));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T v) {
  Tensor t(std::move(shape));
  std::fill(t.node_->value.begin(), t.node_->value.end(), v);
  return t;
}

template <typename T>
int Tensor<T>::dim(int i) const {
  const int r = rank();
  if (i < 0) i += r;
  if (i < 0 || i >= r) throw ShapeError("dim index out of range for " + shape_str(shape()));
  return node_->shape[static_cast<std::size_t>(i)];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  node_->requires_grad = on;
  if (!on) node_->grad.clear();
}

template <typename T>
std::span<T> Tensor<T>::grad_mut() {
  node_->ensure_grad();
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::backward() const {
  using NodeT = detail::Node<T>;
  if (!node_->requires_grad) throw std::logic_error("backward() on a tensor without grad");

  // Iterative post-order DFS; parents are visited before children.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> seen;
  std::vector<std::pair<NodeT*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      NodeT* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (NodeT* n : order) {
    if (!n->leaf) n->grad.assign(n->value.size(), T(0));
  }
  node_->ensure_grad();
  for (T& g : node_->grad) g += T(1);

  const std::string& fault = GradientFault::active_op();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (!n->backward) continue;
    if (!fault.empty() && fault == n->op) {
      const T f = static_cast<T>(GradientFault::factor());
      for (T& g : n->grad) g *= f;
    }
    n->backward(*n);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  auto n = std::make_shared<detail::Node<T>>();
  n->shape = node_->shape;
  n->value = node_->value;
  return Tensor(std::move(n));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  Tensor t = detach();
  t.node_->requires_grad = node_->requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from_op(const char* op, Shape shape, std::vector<T> values,
                             std::initializer_list<Tensor> parents, Backward bw) {
  return from_op(op, std::move(shape), std::move(values), std::vector<Tensor>(parents),
                 std::move(bw));
}

template <typename T>
Tensor<T> Tensor<T>::from_op(const char* op, Shape shape, std::vector<T> values,
                             const std::vector<Tensor>& parents, Backward bw) {
  if (values.size() != shape_numel(shape)) {
    throw ShapeError(std::string(op) + ": produced " + std::to_string(values.size()) +
                     " values for shape " + shape_str(shape));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(std::string(op) + ": non-finite output at index " +
                         std::to_string(i));
    }
  }
  auto n = std::make_shared<detail::Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->op = op;
  n->leaf = false;
  bool needs_grad = false;
  for (const Tensor& p : parents) needs_grad = needs_grad || p.requires_grad();
  if (needs_grad) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const Tensor& p : parents) n->parents.push_back(p.node_);
    n->backward = std::move(bw);
  }
  return Tensor(std::move(n));
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace bimotion
