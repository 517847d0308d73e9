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

#ifndef MMFUSE_OPS_H_
#define MMFUSE_OPS_H_

#include <vector>

#include "mmfuse/tensor.h"

namespace mmfuse::nn {

// Differentiable primitives. Shapes use a leading batch dimension B where
// noted. Every op throws ValidationError naming expected and actual shapes.

// x[B,in] * w[out,in]^T + b[out] -> [B,out].
Tensor Linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Valid (unpadded) cross-correlation. x[B,Cin,L], w[Cout,Cin,K], b[Cout]
// -> [B,Cout,floor((L-K)/stride)+1].
Tensor Conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride);

// Non-overlapping max pooling over the last axis: x[B,C,L] ->
// [B,C,floor((L-width)/width)+1]. Ties route the gradient to the first max.
Tensor MaxPool1d(const Tensor& x, std::size_t width);

Tensor Relu(const Tensor& x);
Tensor LeakyRelu(const Tensor& x, double negative_slope = 0.01);

Tensor Reshape(const Tensor& x, Shape shape);
// [B, ...] -> [B, prod(rest)].
Tensor Flatten(const Tensor& x);

// Single-sequence LSTM with zero initial state, gate order (input, forget,
// cell, output). x[T,in], w_ih[4H,in], w_hh[4H,H], b[4H] -> hidden states
// [T,H]. Zero entries of x are skipped in the input projection.
Tensor Lstm(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& b);

// Row t of a [T,D] tensor as [1,D].
Tensor Row(const Tensor& x, std::size_t t);
// Concatenation along axis 1 of [B,*] tensors.
Tensor ConcatCols(const std::vector<Tensor>& parts);
// Stacks [1,D] tensors into [B,D].
Tensor StackRows(const std::vector<Tensor>& rows);
// Time-major sequence x[T,D] to channel-major [1,D,length], truncating or
// zero-padding the time axis.
Tensor ToChannels(const Tensor& x, std::size_t length);

// Column means of [N,D] -> [1,D].
Tensor MeanRows(const Tensor& x);

// Row-wise softmax of [B,K].
Tensor Softmax(const Tensor& x);

// Mean over the batch of -log p[label]. Probabilities below 1e-12 are clamped
// (with a warning).
Tensor CrossEntropy(const Tensor& probs, const std::vector<int>& labels);

// Scalar helpers.
Tensor Pick(const Tensor& x, std::size_t flat_index);
Tensor WeightedSum(const Tensor& x, const std::vector<double>& weights);
Tensor Sum(const Tensor& x);

}  // namespace mmfuse::nn

#endif  // MMFUSE_OPS_H_
