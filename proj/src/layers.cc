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

#include "mmfuse/layers.h"

#include <cmath>

#include "mmfuse/common.h"

namespace mmfuse::nn {

std::string LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kFc: return "fc";
    case LayerKind::kLstm: return "lstm";
    case LayerKind::kLeakyRelu: return "leaky_relu";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool1d: return "max_pool1d";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "unknown";
}

nlohmann::json LayerSpec::ToJson() const {
  return {{"kind", LayerKindName(kind)}, {"params", params}};
}

LayerSpec LayerSpec::FromJson(const nlohmann::json& j) {
  LayerSpec s;
  const auto name = j.at("kind").get<std::string>();
  for (auto k : {LayerKind::kConv1d, LayerKind::kFc, LayerKind::kLstm, LayerKind::kLeakyRelu,
                 LayerKind::kRelu, LayerKind::kMaxPool1d, LayerKind::kSoftmax}) {
    if (LayerKindName(k) == name) {
      s.kind = k;
      s.params = j.value("params", nlohmann::json::object());
      return s;
    }
  }
  throw ValidationError("unknown layer kind '" + name + "'");
}

Tensor InitUniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(NumElements(shape));
  for (double& v : data) v = dist(rng);
  return Tensor::FromData(std::move(shape), std::move(data), true);
}

FcLayer::FcLayer(std::string name, std::size_t in, std::size_t out, std::mt19937_64& rng)
    : in_(in), out_(out) {
  weight_ = {name + ".weight", InitUniform({out, in}, in, rng), true};
  bias_ = {name + ".bias", InitUniform({out}, in, rng), false};
}

LayerSpec FcLayer::Spec() const {
  return {LayerKind::kFc, {{"in", in_}, {"out", out_}}};
}

Conv1dLayer::Conv1dLayer(std::string name, std::size_t in_channels,
                         std::size_t out_channels, std::mt19937_64& rng,
                         std::size_t kernel, std::size_t stride)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel),
      stride_(stride) {
  const std::size_t fan_in = in_channels * kernel;
  weight_ = {name + ".weight", InitUniform({out_channels, in_channels, kernel}, fan_in, rng), true};
  bias_ = {name + ".bias", InitUniform({out_channels}, fan_in, rng), false};
}

LayerSpec Conv1dLayer::Spec() const {
  return {LayerKind::kConv1d,
          {{"in_channels", in_channels_}, {"out_channels", out_channels_},
           {"kernel", kernel_}, {"stride", stride_}}};
}

LstmLayer::LstmLayer(std::string name, std::size_t in, std::size_t hidden,
                     std::mt19937_64& rng)
    : in_(in), hidden_(hidden) {
  w_ih_ = {name + ".w_ih", InitUniform({4 * hidden, in}, hidden, rng), true};
  w_hh_ = {name + ".w_hh", InitUniform({4 * hidden, hidden}, hidden, rng), true};
  bias_ = {name + ".bias", InitUniform({4 * hidden}, hidden, rng), false};
}

LayerSpec LstmLayer::Spec() const {
  return {LayerKind::kLstm, {{"in", in_}, {"hidden", hidden_}}};
}

ConvBlock::ConvBlock(std::string name, std::size_t in_channels, std::size_t out_channels,
                     std::mt19937_64& rng)
    : conv_(std::move(name), in_channels, out_channels, rng) {}

Tensor ConvBlock::Forward(const Tensor& x) const {
  return MaxPool1d(LeakyRelu(conv_.Forward(x), kLeakySlope), pool_width_);
}

std::vector<LayerSpec> ConvBlock::Specs() const {
  return {conv_.Spec(),
          {LayerKind::kLeakyRelu, {{"negative_slope", kLeakySlope}}},
          {LayerKind::kMaxPool1d, {{"width", pool_width_}}}};
}

Tensor ForwardSpec(const LayerSpec& spec, const Tensor& input) {
  switch (spec.kind) {
    case LayerKind::kRelu: return Relu(input);
    case LayerKind::kLeakyRelu:
      return LeakyRelu(input, spec.params.value("negative_slope", kLeakySlope));
    case LayerKind::kMaxPool1d:
      return MaxPool1d(input, spec.params.value("width", kPoolWidth));
    case LayerKind::kSoftmax: return Softmax(input);
    default:
      throw ValidationError("layer kind '" + LayerKindName(spec.kind) +
                            "' carries parameters; run it through its layer object");
  }
}

}  // namespace mmfuse::nn
