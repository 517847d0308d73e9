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

#ifndef MMFUSE_FUSION_H_
#define MMFUSE_FUSION_H_

#include <memory>
#include <string>
#include <vector>

#include "mmfuse/models.h"

namespace mmfuse {

struct LfWeights {
  double first = 0.5;
  double second = 0.5;
};

// The member with the higher validation AUROC gets 0.6, the other 0.4; an
// exact tie splits evenly. Throws ValidationError outside [0, 1].
LfWeights ChooseLfWeights(double perf_first, double perf_second);

// w1 * p1 + w2 * p2 with weights from ChooseLfWeights.
double CombineLf(double p_first, double p_second, double perf_first, double perf_second);
double CombineLf(double p_first, double p_second, const LfWeights& weights);

// Early fusion, network backend: tabular vector, mean-pooled text embedding
// and the condensed audio vector (mean over utterances) are concatenated in
// that order, then en_earlyfusion (ConvBlock), en_fusion (FC 20 + ReLU) and C.
// The condenser trains jointly with the rest.
class EarlyFusionModel : public NetworkModel {
 public:
  EarlyFusionModel(std::vector<Modality> modalities, TrainConfig config);
  // Width of the concatenated vector; requires Build or Fit.
  std::size_t concat_width() const;

 protected:
  std::unique_ptr<Network> MakeNetwork(const FeatureDims& dims,
                                       std::mt19937_64& rng) const override;
};

// Joint fusion: each modality's unimodal encoder (classifier removed) yields a
// latent (tabular 20, text 20, audio 10 mean-pooled over utterances); latents
// are concatenated and passed through en_fusion (FC 20 + ReLU) and C, trained
// end to end. A single modality is accepted here and degenerates to the
// unimodal encoder plus en_fusion.
class JointFusionModel : public NetworkModel {
 public:
  JointFusionModel(std::vector<Modality> modalities, TrainConfig config);
  // Width of the concatenated latents; requires Build or Fit.
  std::size_t fused_width() const;

 protected:
  std::unique_ptr<Network> MakeNetwork(const FeatureDims& dims,
                                       std::mt19937_64& rng) const override;
};

// Late fusion of two independently trained members. Each member is
// cross-validated on the training patients; its out-of-fold AUROC decides the
// weighting.
class LateFusionModel : public Model {
 public:
  LateFusionModel(ModelSpec spec, ModelSpec first, ModelSpec second);
  // Composite over already-built members (used for reloading and scripted
  // scenarios); weights must be set separately.
  LateFusionModel(ModelSpec spec, std::unique_ptr<Model> first, std::unique_ptr<Model> second);

  FitResult Fit(const FeatureBank& bank, const std::vector<std::size_t>& train,
                const std::vector<int>& labels, const FitOptions& options) override;
  double PredictProba(const FeatureBank& bank, std::size_t patient) const override;
  int default_steps() const override { return 0; }
  bool self_validating() const override { return true; }
  void Save(const std::string& dir) const override;
  void Load(const std::string& dir) override;
  std::vector<const Model*> members() const override;

  void SetWeights(LfWeights w, double perf_first, double perf_second);
  const LfWeights& weights() const { return weights_; }
  double perf_first() const { return perf_[0]; }
  double perf_second() const { return perf_[1]; }

 private:
  ModelSpec member_specs_[2];
  std::unique_ptr<Model> members_[2];
  LfWeights weights_;
  double perf_[2] = {0.0, 0.0};
};

// Member specs of a composite: lf pairs the two modalities' best unimodal
// learners (trees for tabular, networks otherwise); ef+lf = nn early fusion
// over text+audio with trees on tabular; jf+lf = joint fusion over text+audio
// with trees on tabular; mixture = tree early fusion over tabular+text with
// the audio network.
std::vector<ModelSpec> CompositeMembers(const ModelSpec& spec);

// Validates a model spec against the strategy rules and builds an untrained model.
// Early and joint fusion need at least two modalities; the tree backend
// rejects audio.
std::unique_ptr<Model> MakeModel(ModelSpec spec);

// Rebuilds a saved model (any strategy) from its directory.
std::unique_ptr<Model> LoadModel(const std::string& dir);

}  // namespace mmfuse

#endif  // MMFUSE_FUSION_H_
