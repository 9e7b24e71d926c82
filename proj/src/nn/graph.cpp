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

#include "nn/graph.hpp"

#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace vidnet::nn {
namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

Tensor& Node::ensure_grad() {
  if (grad.empty() && value.size() > 0) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

Var make_result(Tensor value, std::vector<Var> parents,
                std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (!g_grad_enabled) return Var(std::move(node));
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (!any) return Var(std::move(node));
  node->requires_grad = true;
  node->parents.reserve(parents.size());
  for (auto& p : parents) node->parents.push_back(p.ptr());
  node->backward_fn = std::move(backward_fn);
  return Var(std::move(node));
}

void backward(const Var& root) {
  if (!root.defined()) throw std::invalid_argument("backward on undefined Var");
  if (root.value().size() != 1)
    throw std::invalid_argument("backward root must be a scalar, got " +
                                root.shape().str());
  if (!root.requires_grad()) return;

  // Iterative post-order DFS; deep recurrent graphs would overflow recursion.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad().fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
  // Intermediate grads are not needed once propagated.
  for (Node* node : order)
    if (node->backward_fn) node->grad = Tensor();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace vidnet::nn
