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

#include "mmfuse/networks.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmfuse/common.h"

namespace mmfuse {
namespace nn {

VectorEncoder::VectorEncoder(const std::string& conv_name, const std::string& fc_name,
                             std::size_t width, std::size_t channels, std::size_t latent,
                             std::mt19937_64& rng)
    : width_(width), block_(conv_name, 1, channels, rng) {
  const std::size_t len = block_.OutputLength(width);
  if (len == 0) {
    throw ValidationError(conv_name + ": input width " + std::to_string(width) +
                          " too short for the conv block");
  }
  flat_ = len * channels;
  fc_ = FcLayer(fc_name, flat_, latent, rng);
}

Tensor VectorEncoder::Forward(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != width_) {
    throw ValidationError("vector encoder: expected shape [B," + std::to_string(width_) +
                          "], got " + ShapeString(x.shape()));
  }
  Tensor h = block_.Forward(Reshape(x, {x.dim(0), 1, width_}));
  return Relu(fc_.Forward(Flatten(h)));
}

std::vector<Parameter*> VectorEncoder::Parameters() {
  auto p = block_.Parameters();
  for (auto* q : fc_.Parameters()) p.push_back(q);
  return p;
}

std::vector<LayerSpec> VectorEncoder::Specs() const {
  auto s = block_.Specs();
  s.push_back(fc_.Spec());
  s.push_back({LayerKind::kRelu, nlohmann::json::object()});
  return s;
}

SequenceEncoder::SequenceEncoder(std::string name, std::size_t in, std::size_t hidden,
                                 std::size_t latent, std::mt19937_64& rng)
    : lstm_(name + ".lstm", in, hidden, rng), fc_(name + ".fc", hidden, latent, rng) {}

Tensor SequenceEncoder::Forward(const std::vector<Tensor>& sequences) const {
  if (sequences.empty()) throw ValidationError("sequence encoder: empty batch");
  std::vector<Tensor> finals;
  finals.reserve(sequences.size());
  for (const auto& s : sequences) {
    if (!s.defined() || s.rank() != 2 || s.dim(0) == 0) {
      throw ValidationError("sequence encoder: expected a non-empty [T,D] sequence");
    }
    finals.push_back(lstm_.Final(s));
  }
  return Relu(fc_.Forward(StackRows(finals)));
}

std::vector<Parameter*> SequenceEncoder::Parameters() {
  auto p = lstm_.Parameters();
  for (auto* q : fc_.Parameters()) p.push_back(q);
  return p;
}

std::vector<LayerSpec> SequenceEncoder::Specs() const {
  return {lstm_.Spec(), fc_.Spec(), {LayerKind::kRelu, nlohmann::json::object()}};
}

AudioCondenser::AudioCondenser(std::size_t bins, std::size_t max_frames, std::mt19937_64& rng)
    : max_frames_(max_frames), block_("cnn_condense", bins, kCondenseChannels, rng) {
  const std::size_t len = block_.OutputLength(max_frames);
  if (len == 0) {
    throw ValidationError("cnn_condense: max_frames " + std::to_string(max_frames) +
                          " too short for the conv block");
  }
  out_ = len * kCondenseChannels;
}

Tensor AudioCondenser::Forward(const std::vector<Tensor>& utterances) const {
  if (utterances.empty()) throw ValidationError("cnn_condense: patient has no utterances");
  std::vector<Tensor> rows;
  rows.reserve(utterances.size());
  for (const auto& u : utterances) {
    rows.push_back(Flatten(block_.Forward(ToChannels(u, max_frames_))));
  }
  return MeanRows(StackRows(rows));
}

ClassifierHead::ClassifierHead(std::size_t in, std::mt19937_64& rng)
    : fc_("classifier.fc", in, kClasses, rng) {}

std::vector<LayerSpec> ClassifierHead::Specs() const {
  return {fc_.Spec(), {LayerKind::kSoftmax, nlohmann::json::object()}};
}

}  // namespace nn

nlohmann::json SpecsToJson(const std::vector<nn::LayerSpec>& specs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : specs) out.push_back(s.ToJson());
  return out;
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"optimizer", optimizer.kind == nn::OptimizerKind::kAdam ? "adam" : "sgd"},
          {"lr", optimizer.lr},
          {"l2", optimizer.l2},
          {"epochs", epochs},
          {"batch_size", batch_size}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("optimizer")) {
    const auto kind = j["optimizer"].get<std::string>();
    if (kind == "adam") {
      c.optimizer.kind = nn::OptimizerKind::kAdam;
    } else if (kind == "sgd") {
      c.optimizer.kind = nn::OptimizerKind::kSgd;
    } else {
      throw ValidationError("unknown optimizer '" + kind + "' (expected adam or sgd)");
    }
  }
  c.optimizer.lr = j.value("lr", c.optimizer.lr);
  c.optimizer.l2 = j.value("l2", c.optimizer.l2);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (c.epochs < 0 || c.batch_size < 0 || !(c.optimizer.lr > 0) || c.optimizer.l2 < 0) {
    throw ValidationError("invalid training config");
  }
  return c;
}

namespace {

std::vector<const PatientInputs*> Pointers(const std::vector<PatientInputs>& samples,
                                           const std::vector<std::size_t>& idx) {
  std::vector<const PatientInputs*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&samples[i]);
  return out;
}

void CheckLabels(const std::vector<PatientInputs>& samples, const std::vector<int>& labels) {
  if (samples.size() != labels.size()) throw ValidationError("sample/label count mismatch");
  if (samples.size() < 2) throw ValidationError("training needs at least 2 samples");
  bool seen[2] = {false, false};
  for (int y : labels) {
    if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
    seen[y] = true;
  }
  if (!seen[0] || !seen[1]) throw ValidationError("training labels contain a single class");
}

}  // namespace

double EvaluateLoss(const Network& net, const std::vector<PatientInputs>& samples,
                    const std::vector<int>& labels) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  return nn::CrossEntropy(net.Forward(Pointers(samples, idx)), labels).item();
}

LossCurve TrainNetwork(Network& net, const std::vector<PatientInputs>& samples,
                       const std::vector<int>& labels, const TrainConfig& config,
                       std::uint64_t seed, const std::vector<PatientInputs>* validation,
                       const std::vector<int>* validation_labels) {
  CheckLabels(samples, labels);
  if (validation && (!validation_labels || validation->size() != validation_labels->size() ||
                     validation->empty())) {
    throw ValidationError("validation samples and labels must be non-empty and aligned");
  }
  nn::Optimizer opt(net.Parameters(), config.optimizer);
  std::mt19937_64 rng(seed);
  const std::size_t n = samples.size();
  const std::size_t batch =
      config.batch_size > 0 ? std::min<std::size_t>(config.batch_size, n) : n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  LossCurve curve;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
      std::vector<int> y;
      y.reserve(idx.size());
      for (auto i : idx) y.push_back(labels[i]);
      opt.ZeroGrad();
      nn::Tensor loss = nn::CrossEntropy(net.Forward(Pointers(samples, idx)), y);
      nn::Backward(loss);
      opt.Step();
      total += loss.item() * static_cast<double>(idx.size());
    }
    curve.train.push_back(total / static_cast<double>(n));
    if (validation) curve.validation.push_back(EvaluateLoss(net, *validation, *validation_labels));
  }
  return curve;
}

}  // namespace mmfuse
