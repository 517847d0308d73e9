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

#ifndef MMFUSE_NETWORKS_H_
#define MMFUSE_NETWORKS_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmfuse/layers.h"
#include "mmfuse/optimizer.h"

namespace mmfuse {

// Network inputs for one patient (or one utterance for per-utterance audio
// training). Unused modalities stay undefined.
struct PatientInputs {
  nn::Tensor tabular;               // [1, W] scaled tabular vector
  nn::Tensor text;                  // [T, D] token embeddings
  std::vector<nn::Tensor> audio;    // each [frames, bins]
};

namespace nn {

inline constexpr std::size_t kTabularConvChannels = 8;
inline constexpr std::size_t kTabularLatent = 20;
inline constexpr std::size_t kTextHidden = 20;
inline constexpr std::size_t kTextLatent = 20;
inline constexpr std::size_t kAudioHidden = 7;
inline constexpr std::size_t kAudioLatent = 10;
inline constexpr std::size_t kCondenseChannels = 4;
inline constexpr std::size_t kEarlyFusionChannels = 8;
inline constexpr std::size_t kFusionLatent = 20;
inline constexpr std::size_t kClasses = 2;

// ConvBlock(1 -> 8) over the vector treated as a one-channel signal, flatten,
// FC(20) + ReLU. Also serves as en_earlyfusion + en_fusion over concatenated
// early-fusion vectors.
class VectorEncoder {
 public:
  VectorEncoder() = default;
  VectorEncoder(const std::string& conv_name, const std::string& fc_name, std::size_t width,
                std::size_t channels, std::size_t latent, std::mt19937_64& rng);
  // [B, width] -> [B, latent]
  Tensor Forward(const Tensor& x) const;
  std::vector<Parameter*> Parameters();
  std::size_t width() const { return width_; }
  std::size_t flat_width() const { return flat_; }
  std::size_t out_width() const { return fc_.out(); }
  std::vector<LayerSpec> Specs() const;

 private:
  std::size_t width_ = 0, flat_ = 0;
  ConvBlock block_;
  FcLayer fc_;
};

// LSTM over a sequence, final hidden state, FC + ReLU. Text: LSTM(20) +
// FC(20); audio: LSTM(7) + FC(10).
class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  SequenceEncoder(std::string name, std::size_t in, std::size_t hidden, std::size_t latent,
                  std::mt19937_64& rng);
  // One [T, in] sequence per batch row -> [B, latent]
  Tensor Forward(const std::vector<Tensor>& sequences) const;
  std::vector<Parameter*> Parameters();
  std::size_t hidden() const { return lstm_.hidden(); }
  std::size_t out_width() const { return fc_.out(); }
  std::vector<LayerSpec> Specs() const;

 private:
  LstmLayer lstm_;
  FcLayer fc_;
};

// Audio condenser for early fusion: each utterance is laid out with spectral
// bins as channels over max_frames time steps, passed through a ConvBlock and
// flattened; the patient vector is the mean over utterances.
class AudioCondenser {
 public:
  AudioCondenser() = default;
  AudioCondenser(std::size_t bins, std::size_t max_frames, std::mt19937_64& rng);
  // Utterances of one patient -> [1, out_width]
  Tensor Forward(const std::vector<Tensor>& utterances) const;
  std::vector<Parameter*> Parameters() { return block_.Parameters(); }
  std::size_t out_width() const { return out_; }
  std::vector<LayerSpec> Specs() const { return block_.Specs(); }

 private:
  std::size_t max_frames_ = 0, out_ = 0;
  ConvBlock block_;
};

// Classifier C: FC(2) + softmax.
class ClassifierHead {
 public:
  ClassifierHead() = default;
  ClassifierHead(std::size_t in, std::mt19937_64& rng);
  Tensor Forward(const Tensor& latent) const { return Softmax(fc_.Forward(latent)); }
  std::vector<Parameter*> Parameters() { return fc_.Parameters(); }
  std::vector<LayerSpec> Specs() const;

 private:
  FcLayer fc_;
};

}  // namespace nn

// A differentiable patient-level predictor: batch of inputs -> [B, 2] class
// probabilities, column 1 = desirable.
class Network {
 public:
  virtual ~Network() = default;
  virtual nn::Tensor Forward(const std::vector<const PatientInputs*>& batch) const = 0;
  virtual std::vector<nn::Parameter*> Parameters() = 0;
  virtual nlohmann::json Describe() const = 0;
};

struct TrainConfig {
  nn::OptimizerConfig optimizer;
  int epochs = 200;
  int batch_size = 0;  // 0 = full batch

  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct LossCurve {
  std::vector<double> train;       // mean training loss seen in each epoch
  std::vector<double> validation;  // validation loss after each epoch's updates
};

// Mean cross-entropy of the network over samples (no parameter update).
double EvaluateLoss(const Network& net, const std::vector<PatientInputs>& samples,
                    const std::vector<int>& labels);

// Cross-entropy training with the configured optimizer. Mini-batches (when
// batch_size > 0) are drawn from a seeded shuffle each epoch. Throws
// ValidationError with fewer than two samples or a single class.
LossCurve TrainNetwork(Network& net, const std::vector<PatientInputs>& samples,
                       const std::vector<int>& labels, const TrainConfig& config,
                       std::uint64_t seed,
                       const std::vector<PatientInputs>* validation = nullptr,
                       const std::vector<int>* validation_labels = nullptr);

nlohmann::json SpecsToJson(const std::vector<nn::LayerSpec>& specs);

}  // namespace mmfuse

#endif  // MMFUSE_NETWORKS_H_
