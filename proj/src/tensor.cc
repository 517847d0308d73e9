/*
 * Copyright 2026 The mmfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mmfuse/tensor.h"

#include <sstream>
#include <unordered_set>

#include "mmfuse/common.h"

namespace mmfuse::nn {

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream s;
  s << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s << (i ? "," : "") << shape[i];
  s << "]";
  return s.str();
}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  const std::size_t n = NumElements(shape);
  return FromData(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::FromData(Shape shape, std::vector<double> data, bool requires_grad) {
  if (NumElements(shape) != data.size()) {
    throw ValidationError("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + ShapeString(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::Scalar(double v, bool requires_grad) {
  return FromData({1}, {v}, requires_grad);
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.size() == node_->value.size()) return node_->grad;
  return std::vector<double>(node_->value.size(), 0.0);
}

double Tensor::item() const {
  if (size() != 1) throw ValidationError("item() on tensor of shape " + ShapeString(shape()));
  return node_->value[0];
}

Tensor Tensor::MakeResult(Shape shape, std::vector<double> value,
                          std::vector<Tensor> parents,
                          std::function<void(Node& self)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  for (auto& p : parents) {
    node->requires_grad = node->requires_grad || p.requires_grad();
    node->parents.push_back(p.node_);
  }
  if (node->requires_grad) node->backward = std::move(backward);
  return Tensor(std::move(node));
}

void Backward(const Tensor& loss) {
  if (!loss.defined() || loss.node()->parents.empty()) {
    throw RuntimeError("backward called without a recorded forward graph");
  }
  if (loss.size() != 1) {
    throw RuntimeError("backward needs a scalar loss, got shape " + ShapeString(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node(), 0}};
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Interior gradients start from zero on every sweep.
  for (Node* n : order) {
    if (!n->parents.empty()) n->grad.assign(n->value.size(), 0.0);
  }
  loss.node()->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

}  // namespace mmfuse::nn
