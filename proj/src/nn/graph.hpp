// Copyright 2026 The VIDNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode differentiation over NCHW tensors.
//
// Every op returns a Var that owns its value and, when any input requires a
// gradient, a closure that scatters the output gradient into its parents.
// Parameters are leaf Vars with requires_grad set; their grad tensors survive
// backward() and are cleared by the optimizer.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "nn/tensor.hpp"

namespace vidnet::nn {

struct Node {
  Tensor value;
  Tensor grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  static Var leaf(Tensor value, bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  // Gradient accumulated by backward(); empty tensor when none flowed here.
  const Tensor& grad() const { return node_->grad; }
  void zero_grad() { node_->grad = Tensor(); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& ptr() const { return node_; }

  // Same node identity (used to assert parameter sharing).
  bool same_node(const Var& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Builds an op result. When gradients are disabled or no parent requires one,
// the result is a constant and the closure is dropped.
Var make_result(Tensor value, std::vector<Var> parents,
                std::function<void(Node&)> backward_fn);

// Seeds d(root)/d(root) = 1 and runs every closure in reverse topological
// order. root must hold exactly one element.
void backward(const Var& root);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace vidnet::nn
