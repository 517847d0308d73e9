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

#ifndef MMFUSE_LAYERS_H_
#define MMFUSE_LAYERS_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmfuse/ops.h"
#include "mmfuse/tensor.h"

namespace mmfuse::nn {

// Defaults for the convolutional blocks: kernel 3, stride 2, pool width 3.
inline constexpr std::size_t kConvKernel = 3;
inline constexpr std::size_t kConvStride = 2;
inline constexpr std::size_t kPoolWidth = 3;
inline constexpr double kLeakySlope = 0.01;

enum class LayerKind { kConv1d, kFc, kLstm, kLeakyRelu, kRelu, kMaxPool1d, kSoftmax };

struct LayerSpec {
  LayerKind kind = LayerKind::kFc;
  nlohmann::json params = nlohmann::json::object();

  nlohmann::json ToJson() const;
  static LayerSpec FromJson(const nlohmann::json& j);
};

std::string LayerKindName(LayerKind kind);

// A trainable leaf. decay == false exempts the tensor from L2 (biases).
struct Parameter {
  std::string name;
  Tensor value;
  bool decay = true;
};

// Output length of the valid conv / pool used by the blocks.
constexpr std::size_t ConvOutLength(std::size_t len, std::size_t kernel = kConvKernel,
                                    std::size_t stride = kConvStride) {
  return len < kernel ? 0 : (len - kernel) / stride + 1;
}
constexpr std::size_t PoolOutLength(std::size_t len, std::size_t width = kPoolWidth) {
  return len < width ? 0 : (len - width) / width + 1;
}

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
Tensor InitUniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

class FcLayer {
 public:
  FcLayer() = default;
  FcLayer(std::string name, std::size_t in, std::size_t out, std::mt19937_64& rng);
  Tensor Forward(const Tensor& x) const { return Linear(x, weight_.value, bias_.value); }
  std::vector<Parameter*> Parameters() { return {&weight_, &bias_}; }
  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  LayerSpec Spec() const;

 private:
  std::size_t in_ = 0, out_ = 0;
  Parameter weight_, bias_;
};

class Conv1dLayer {
 public:
  Conv1dLayer() = default;
  Conv1dLayer(std::string name, std::size_t in_channels, std::size_t out_channels,
              std::mt19937_64& rng, std::size_t kernel = kConvKernel,
              std::size_t stride = kConvStride);
  Tensor Forward(const Tensor& x) const {
    return Conv1d(x, weight_.value, bias_.value, stride_);
  }
  std::vector<Parameter*> Parameters() { return {&weight_, &bias_}; }
  std::size_t kernel() const { return kernel_; }
  std::size_t stride() const { return stride_; }
  std::size_t out_channels() const { return out_channels_; }
  LayerSpec Spec() const;
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t in_channels_ = 0, out_channels_ = 0, kernel_ = kConvKernel,
              stride_ = kConvStride;
  Parameter weight_, bias_;
};

class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(std::string name, std::size_t in, std::size_t hidden, std::mt19937_64& rng);
  // Full hidden-state sequence [T,H].
  Tensor Sequence(const Tensor& x) const {
    return Lstm(x, w_ih_.value, w_hh_.value, bias_.value);
  }
  // Final hidden state [1,H].
  Tensor Final(const Tensor& x) const { return Row(Sequence(x), x.dim(0) - 1); }
  std::vector<Parameter*> Parameters() { return {&w_ih_, &w_hh_, &bias_}; }
  std::size_t hidden() const { return hidden_; }
  LayerSpec Spec() const;

 private:
  std::size_t in_ = 0, hidden_ = 0;
  Parameter w_ih_, w_hh_, bias_;
};

// Conv1D -> LeakyReLU -> MaxPool block, the building unit of the tabular
// encoder, the audio condenser and the early-fusion encoder.
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(std::string name, std::size_t in_channels, std::size_t out_channels,
            std::mt19937_64& rng);
  // x[B,Cin,L] -> [B,Cout,PoolOut(ConvOut(L))].
  Tensor Forward(const Tensor& x) const;
  std::vector<Parameter*> Parameters() { return conv_.Parameters(); }
  std::size_t OutputLength(std::size_t len) const {
    return PoolOutLength(ConvOutLength(len, conv_.kernel(), conv_.stride()), pool_width_);
  }
  std::size_t out_channels() const { return conv_.out_channels(); }
  std::size_t pool_width() const { return pool_width_; }
  const Conv1dLayer& conv() const { return conv_; }
  std::vector<LayerSpec> Specs() const;

 private:
  Conv1dLayer conv_;
  std::size_t pool_width_ = kPoolWidth;
};

// Generic forward for activation-style specs (relu, leaky_relu, max_pool1d,
// softmax). Parameterized kinds are run through their layer objects.
Tensor ForwardSpec(const LayerSpec& spec, const Tensor& input);

}  // namespace mmfuse::nn

#endif  // MMFUSE_LAYERS_H_
