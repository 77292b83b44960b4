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

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bimotion {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an op produces NaN/Inf. Carries the op name in what().
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
class Tensor;

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into self.parents[i]->grad.
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
  // Gradient slot of parent i, allocated on demand, or nullptr if the parent
  // does not take gradients.
  T* parent_grad(std::size_t i) {
    Node& p = *parents[i];
    if (!p.requires_grad) return nullptr;
    p.ensure_grad();
    return p.grad.data();
  }
};

}  // namespace detail

// Dense row-major N-d array with an optional gradient slot.
//
// A Tensor is a shared handle: copies alias the same storage. Ops build a
// graph on the fly when any operand requires gradients; backward() runs the
// recorded rules in reverse topological order. Graphs are confined to one
// thread.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using Backward = std::function<void(detail::Node<T>&)>;

  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }
  static Tensor full(Shape shape, T v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  // Mutable view of the values. Only meaningful on leaves (inputs, params).
  std::span<T> data_mut() { return node_->value; }
  T operator[](std::size_t i) const { return node_->value[i]; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> grad_mut();
  void zero_grad();

  // Reverse-mode sweep seeded with ones. Leaf gradients accumulate across
  // calls; intermediate gradients are reset at the start of every call.
  void backward() const;

  Tensor detach() const;
  Tensor clone() const;

  const char* op_name() const { return node_->op; }
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  // Builds an op result. Checks finiteness; records `bw` only when an
  // operand requires gradients.
  static Tensor from_op(const char* op, Shape shape, std::vector<T> values,
                        std::initializer_list<Tensor> parents, Backward bw);
  static Tensor from_op(const char* op, Shape shape, std::vector<T> values,
                        const std::vector<Tensor>& parents, Backward bw);

  detail::Node<T>& node() const { return *node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node<T>> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node<T>> node_;
};

// Scales the incoming gradient of every node produced by `op` during
// backward(). Used to inject faults into gradient checks.
class GradientFault {
 public:
  GradientFault(std::string op, double factor);
  ~GradientFault();
  GradientFault(const GradientFault&) = delete;
  GradientFault& operator=(const GradientFault&) = delete;

  static const std::string& active_op();
  static double factor();
};

void require_same_shape(const Shape& a, const Shape& b, const char* what);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace bimotion
