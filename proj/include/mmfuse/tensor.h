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

#ifndef MMFUSE_TENSOR_H_
#define MMFUSE_TENSOR_H_

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mmfuse::nn {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Graph node. Interior nodes keep their parents alive and know how to push
// their gradient into them; leaves (parameters, inputs) have no parents.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node& self)> backward;

  std::vector<double>& EnsureGrad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

// Shared handle to a node. Copies alias the same storage; every op records a
// new node so a forward pass builds a fresh graph over persistent leaves.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor FromData(Shape shape, std::vector<double> data,
                         bool requires_grad = false);
  static Tensor Scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  // Gradient after Backward; zeros when nothing reached this tensor.
  std::vector<double> grad() const;
  void ZeroGrad() { node_->grad.clear(); }
  double item() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared_node() const { return node_; }

  // Records an op result: parents, value and backward rule.
  static Tensor MakeResult(Shape shape, std::vector<double> value,
                           std::vector<Tensor> parents,
                           std::function<void(Node& self)> backward);

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
// reachable tensor with requires_grad. Throws RuntimeError when the loss was
// not produced by a recorded forward pass or is not a scalar.
void Backward(const Tensor& loss);

}  // namespace mmfuse::nn

#endif  // MMFUSE_TENSOR_H_
