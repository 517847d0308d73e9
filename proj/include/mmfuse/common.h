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

#ifndef MMFUSE_COMMON_H_
#define MMFUSE_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmfuse {

// Input or configuration rejected before any work was done. Maps to CLI exit
// code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure while computing (non-finite gradients, I/O, leakage). Maps to CLI
// exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix used for feature payloads (token embeddings,
// spectrogram frames). Numerical work on graphs goes through nn::Tensor.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  bool empty() const { return rows == 0 || cols == 0; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Derives an independent stream seed from a base seed and an index
// (splitmix64 finalizer). Used for per-repeat, per-fold and per-member seeds so
// results never depend on scheduling order.
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t index);

}  // namespace mmfuse

#endif  // MMFUSE_COMMON_H_
