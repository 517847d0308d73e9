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

#ifndef MMFUSE_MODELS_H_
#define MMFUSE_MODELS_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mmfuse/features.h"
#include "mmfuse/gbdt.h"
#include "mmfuse/networks.h"
#include "mmfuse/tabular.h"

namespace mmfuse {

enum class Strategy { kUnimodal, kGbdt, kEf, kJf, kLf, kEfLf, kJfLf, kMixture };

// "unimodal", "gbdt", "ef", "jf", "lf", "ef+lf", "jf+lf", "mixture".
std::string_view StrategyName(Strategy s);
Strategy ParseStrategy(std::string_view name);

enum class Backend { kNn, kGbdt };

struct ModelSpec {
  Strategy strategy = Strategy::kUnimodal;
  // Order is normalized to (tabular, text, audio) by Normalize().
  std::vector<Modality> modalities = {Modality::kTabular};
  Backend backend = Backend::kNn;  // early fusion only
  TrainConfig train;
  gbdt::GbdtConfig gbdt;

  bool Uses(Modality m) const;
  // Sorts and deduplicates modalities.
  void Normalize();
  // Short human-readable tag, e.g. "ef[tabular+text]/gbdt".
  std::string Label() const;
  nlohmann::json ToJson() const;
  static ModelSpec FromJson(const nlohmann::json& j);
};

struct FeatureDims {
  std::size_t tabular_width = 0;
  std::size_t text_dim = 0;
  std::size_t audio_bins = 0;
  std::size_t max_frames = 0;

  static FeatureDims FromBank(const FeatureBank& bank);
  nlohmann::json ToJson() const;
  static FeatureDims FromJson(const nlohmann::json& j);
};

struct FitOptions {
  std::uint64_t seed = 0;
  // Epochs for networks, trees for boosted ensembles; negative = configured.
  int steps = -1;
  // When set, the per-step validation loss on these patients is recorded.
  const std::vector<std::size_t>* validation = nullptr;
  // Fold assignment used by composites that cross-validate their members.
  std::vector<std::vector<std::size_t>> folds;
};

struct FitResult {
  LossCurve curve;
};

// A trainable patient-level classifier. Labels are indexed by bank position.
class Model {
 public:
  virtual ~Model() = default;

  const ModelSpec& spec() const { return spec_; }
  virtual FitResult Fit(const FeatureBank& bank, const std::vector<std::size_t>& train,
                        const std::vector<int>& labels, const FitOptions& options) = 0;
  // Probability of the desirable class.
  virtual double PredictProba(const FeatureBank& bank, std::size_t patient) const = 0;
  // Epoch or tree budget used when FitOptions::steps is negative.
  virtual int default_steps() const = 0;
  // Composites run their own cross-validation over FitOptions::folds.
  virtual bool self_validating() const { return false; }

  virtual void Save(const std::string& dir) const = 0;
  virtual void Load(const std::string& dir) = 0;

  // Differentiable path used for attribution. Null for tree ensembles and
  // composites.
  virtual const Network* network() const { return nullptr; }
  virtual PatientInputs Inputs(const FeatureBank& bank, std::size_t patient) const;
  virtual std::vector<const Model*> members() const { return {}; }

  // Every patient whose labels or features entered fitting (scalers, fold
  // models and members included).
  const std::vector<std::string>& fitted_ids() const { return fitted_ids_; }

 protected:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  void RecordFitted(const std::vector<std::string>& ids);

  ModelSpec spec_;
  std::vector<std::string> fitted_ids_;
};

// Shared machinery for network-backed models: tabular scaler fitted on the
// training patients, input assembly, training and checkpointing.
class NetworkModel : public Model {
 public:
  FitResult Fit(const FeatureBank& bank, const std::vector<std::size_t>& train,
                const std::vector<int>& labels, const FitOptions& options) override;
  double PredictProba(const FeatureBank& bank, std::size_t patient) const override;
  // Probability pair [1, 2] for one patient.
  nn::Tensor PredictPair(const FeatureBank& bank, std::size_t patient) const;
  int default_steps() const override { return spec_.train.epochs; }
  void Save(const std::string& dir) const override;
  void Load(const std::string& dir) override;
  const Network* network() const override { return net_.get(); }
  PatientInputs Inputs(const FeatureBank& bank, std::size_t patient) const override;

  // Initializes a fresh network for the given dimensions. Fit calls this; it
  // is public so architectures can be inspected before training.
  void Build(const FeatureDims& dims, std::uint64_t seed);
  Network* mutable_network() { return net_.get(); }
  const FeatureDims& dims() const { return dims_; }
  const TabularScaler& scaler() const { return scaler_; }

 protected:
  using Model::Model;
  virtual std::unique_ptr<Network> MakeNetwork(const FeatureDims& dims,
                                               std::mt19937_64& rng) const = 0;
  // Training samples for the given patients. The per-utterance audio model
  // overrides this to emit one sample per clip.
  virtual void TrainingSamples(const FeatureBank& bank, const std::vector<std::size_t>& patients,
                               const std::vector<int>& labels,
                               std::vector<PatientInputs>* samples,
                               std::vector<int>* sample_labels) const;

  TabularScaler scaler_;
  bool scaler_fitted_ = false;
  FeatureDims dims_;
  std::unique_ptr<Network> net_;
  std::string provider_id_;
};

// Unimodal architectures: tabular ConvBlock + FC(20); text LSTM(20) + FC(20);
// audio LSTM(7) + FC(10); each followed by C.
class UnimodalModel : public NetworkModel {
 public:
  UnimodalModel(Modality modality, TrainConfig config);
  Modality modality() const { return spec_.modalities.front(); }
  // Encoder output width; requires Build or Fit first.
  std::size_t encoder_width() const;

 protected:
  std::unique_ptr<Network> MakeNetwork(const FeatureDims& dims,
                                       std::mt19937_64& rng) const override;
  void TrainingSamples(const FeatureBank& bank, const std::vector<std::size_t>& patients,
                       const std::vector<int>& labels, std::vector<PatientInputs>* samples,
                       std::vector<int>* sample_labels) const override;
};

std::unique_ptr<UnimodalModel> BuildUnimodal(Modality modality, const TrainConfig& config = {});

// Gradient-boosted trees over the scaled tabular vector and/or the mean-pooled
// text embedding (early fusion with the tree backend).
class GbdtModel : public Model {
 public:
  explicit GbdtModel(ModelSpec spec);
  FitResult Fit(const FeatureBank& bank, const std::vector<std::size_t>& train,
                const std::vector<int>& labels, const FitOptions& options) override;
  double PredictProba(const FeatureBank& bank, std::size_t patient) const override;
  int default_steps() const override { return spec_.gbdt.trees; }
  void Save(const std::string& dir) const override;
  void Load(const std::string& dir) override;

  std::vector<double> Row(const FeatureBank& bank, std::size_t patient) const;
  const gbdt::BoostedEnsemble& ensemble() const { return ensemble_; }
  std::vector<std::string> FeatureNames(const FeatureBank& bank) const;

 private:
  TabularScaler scaler_;
  gbdt::BoostedEnsemble ensemble_;
};

// Fold assignment by position: train[i] goes to fold i mod k.
std::vector<std::vector<std::size_t>> RotatingFolds(const std::vector<std::size_t>& train,
                                                    int k = 5);

using ModelFactory = std::function<std::unique_ptr<Model>()>;

struct CvOutcome {
  std::unique_ptr<Model> model;     // refit on the full training set
  int selected_steps = 0;
  std::vector<double> mean_validation;  // per step, averaged over folds
  std::vector<double> out_of_fold;      // aligned with the train vector
  FitResult final_fit;
  std::vector<std::string> fitted_ids;  // union over fold and final fits
};

// k-fold protocol: each fold model trains on the other folds and records its
// validation loss per step; the step count minimizing the mean validation
// loss (earliest on ties) is used to refit on all training patients.
// Self-validating composites are fitted directly with the folds.
CvOutcome CrossValidatedFit(const ModelFactory& factory, const FeatureBank& bank,
                            const std::vector<std::size_t>& train,
                            const std::vector<int>& labels,
                            const std::vector<std::vector<std::size_t>>& folds,
                            std::uint64_t seed);

// patient_id,p_desirable,label
std::string FormatPredictionsCsv(const FeatureBank& bank, const Model& model,
                                 const std::vector<std::size_t>& patients);

}  // namespace mmfuse

#endif  // MMFUSE_MODELS_H_
