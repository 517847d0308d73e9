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

#include "mmfuse/fusion.h"

#include <cmath>
#include <filesystem>

#include "mmfuse/cohort_io.h"
#include "mmfuse/common.h"
#include "mmfuse/metrics.h"

namespace mmfuse {
namespace fs = std::filesystem;

namespace {

void CheckUnit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

ModelSpec SpecFor(Strategy s, std::vector<Modality> mods, TrainConfig config) {
  ModelSpec spec;
  spec.strategy = s;
  spec.modalities = std::move(mods);
  spec.train = config;
  spec.Normalize();
  return spec;
}

nlohmann::json ReadJson(const std::string& path) {
  try {
    return nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

nn::Tensor StackOrSingle(const std::vector<nn::Tensor>& rows) {
  return rows.size() == 1 ? rows.front() : nn::StackRows(rows);
}

class EarlyFusionNet : public Network {
 public:
  EarlyFusionNet(const std::vector<Modality>& mods, const FeatureDims& dims, std::mt19937_64& rng)
      : mods_(mods) {
    for (auto m : mods_) {
      switch (m) {
        case Modality::kTabular: width_ += dims.tabular_width; break;
        case Modality::kText: width_ += dims.text_dim; break;
        case Modality::kAudio:
          condenser_ = nn::AudioCondenser(dims.audio_bins, dims.max_frames, rng);
          width_ += condenser_.out_width();
          has_audio_ = true;
          break;
      }
    }
    encoder_ = nn::VectorEncoder("en_earlyfusion.conv", "en_fusion.fc", width_,
                                 nn::kEarlyFusionChannels, nn::kFusionLatent, rng);
    head_ = nn::ClassifierHead(nn::kFusionLatent, rng);
  }

  nn::Tensor Forward(const std::vector<const PatientInputs*>& batch) const override {
    std::vector<nn::Tensor> rows;
    rows.reserve(batch.size());
    for (const auto* p : batch) {
      std::vector<nn::Tensor> parts;
      for (auto m : mods_) {
        switch (m) {
          case Modality::kTabular: parts.push_back(p->tabular); break;
          case Modality::kText: parts.push_back(nn::MeanRows(p->text)); break;
          case Modality::kAudio: parts.push_back(condenser_.Forward(p->audio)); break;
        }
      }
      rows.push_back(parts.size() == 1 ? parts.front() : nn::ConcatCols(parts));
    }
    return head_.Forward(encoder_.Forward(StackOrSingle(rows)));
  }

  std::vector<nn::Parameter*> Parameters() override {
    std::vector<nn::Parameter*> p;
    if (has_audio_) p = condenser_.Parameters();
    for (auto* q : encoder_.Parameters()) p.push_back(q);
    for (auto* q : head_.Parameters()) p.push_back(q);
    return p;
  }

  nlohmann::json Describe() const override {
    nlohmann::json order = nlohmann::json::array();
    for (auto m : mods_) order.push_back(std::string(ModalityName(m)));
    nlohmann::json j = {{"concat_order", order},
                        {"concat_width", width_},
                        {"en_earlyfusion_and_en_fusion", SpecsToJson(encoder_.Specs())},
                        {"classifier", SpecsToJson(head_.Specs())}};
    if (has_audio_) j["cnn_condense"] = SpecsToJson(condenser_.Specs());
    return j;
  }

  std::size_t width() const { return width_; }

 private:
  std::vector<Modality> mods_;
  std::size_t width_ = 0;
  bool has_audio_ = false;
  nn::AudioCondenser condenser_;
  nn::VectorEncoder encoder_;
  nn::ClassifierHead head_;
};

class JointFusionNet : public Network {
 public:
  JointFusionNet(const std::vector<Modality>& mods, const FeatureDims& dims, std::mt19937_64& rng)
      : mods_(mods) {
    for (auto m : mods_) {
      switch (m) {
        case Modality::kTabular:
          tabular_ = nn::VectorEncoder("en_tabular.conv", "en_tabular.fc", dims.tabular_width,
                                       nn::kTabularConvChannels, nn::kTabularLatent, rng);
          width_ += tabular_.out_width();
          break;
        case Modality::kText:
          text_ = nn::SequenceEncoder("en_text", dims.text_dim, nn::kTextHidden, nn::kTextLatent,
                                      rng);
          width_ += text_.out_width();
          break;
        case Modality::kAudio:
          audio_ = nn::SequenceEncoder("en_audio", dims.audio_bins, nn::kAudioHidden,
                                       nn::kAudioLatent, rng);
          width_ += audio_.out_width();
          break;
      }
    }
    fusion_ = nn::FcLayer("en_fusion.fc", width_, nn::kFusionLatent, rng);
    head_ = nn::ClassifierHead(nn::kFusionLatent, rng);
  }

  nn::Tensor Forward(const std::vector<const PatientInputs*>& batch) const override {
    std::vector<nn::Tensor> parts;
    for (auto m : mods_) {
      switch (m) {
        case Modality::kTabular: {
          std::vector<nn::Tensor> rows;
          for (const auto* p : batch) rows.push_back(p->tabular);
          parts.push_back(tabular_.Forward(StackOrSingle(rows)));
          break;
        }
        case Modality::kText: {
          std::vector<nn::Tensor> seqs;
          for (const auto* p : batch) seqs.push_back(p->text);
          parts.push_back(text_.Forward(seqs));
          break;
        }
        case Modality::kAudio: {
          std::vector<nn::Tensor> rows;
          for (const auto* p : batch) {
            if (p->audio.empty()) throw ValidationError("joint fusion: patient has no utterances");
            rows.push_back(nn::MeanRows(audio_.Forward(p->audio)));
          }
          parts.push_back(StackOrSingle(rows));
          break;
        }
      }
    }
    nn::Tensor fused = parts.size() == 1 ? parts.front() : nn::ConcatCols(parts);
    return head_.Forward(nn::Relu(fusion_.Forward(fused)));
  }

  std::vector<nn::Parameter*> Parameters() override {
    std::vector<nn::Parameter*> p;
    auto add = [&p](std::vector<nn::Parameter*> q) { p.insert(p.end(), q.begin(), q.end()); };
    for (auto m : mods_) {
      switch (m) {
        case Modality::kTabular: add(tabular_.Parameters()); break;
        case Modality::kText: add(text_.Parameters()); break;
        case Modality::kAudio: add(audio_.Parameters()); break;
      }
    }
    add(fusion_.Parameters());
    add(head_.Parameters());
    return p;
  }

  nlohmann::json Describe() const override {
    nlohmann::json j = {{"fused_width", width_}};
    for (auto m : mods_) {
      switch (m) {
        case Modality::kTabular: j["en_tabular"] = SpecsToJson(tabular_.Specs()); break;
        case Modality::kText: j["en_text"] = SpecsToJson(text_.Specs()); break;
        case Modality::kAudio: j["en_audio"] = SpecsToJson(audio_.Specs()); break;
      }
    }
    j["en_fusion"] = SpecsToJson({fusion_.Spec(), {nn::LayerKind::kRelu, nlohmann::json::object()}});
    j["classifier"] = SpecsToJson(head_.Specs());
    return j;
  }

  std::size_t width() const { return width_; }

 private:
  std::vector<Modality> mods_;
  std::size_t width_ = 0;
  nn::VectorEncoder tabular_;
  nn::SequenceEncoder text_, audio_;
  nn::FcLayer fusion_;
  nn::ClassifierHead head_;
};

}  // namespace

LfWeights ChooseLfWeights(double perf_first, double perf_second) {
  CheckUnit(perf_first, "validation AUROC");
  CheckUnit(perf_second, "validation AUROC");
  if (perf_first > perf_second) return {0.6, 0.4};
  if (perf_second > perf_first) return {0.4, 0.6};
  return {0.5, 0.5};
}

double CombineLf(double p_first, double p_second, const LfWeights& w) {
  CheckUnit(p_first, "probability");
  CheckUnit(p_second, "probability");
  return w.first * p_first + w.second * p_second;
}

double CombineLf(double p_first, double p_second, double perf_first, double perf_second) {
  return CombineLf(p_first, p_second, ChooseLfWeights(perf_first, perf_second));
}

EarlyFusionModel::EarlyFusionModel(std::vector<Modality> modalities, TrainConfig config)
    : NetworkModel(SpecFor(Strategy::kEf, std::move(modalities), config)) {}

std::unique_ptr<Network> EarlyFusionModel::MakeNetwork(const FeatureDims& dims,
                                                       std::mt19937_64& rng) const {
  return std::make_unique<EarlyFusionNet>(spec_.modalities, dims, rng);
}

std::size_t EarlyFusionModel::concat_width() const {
  const auto* net = dynamic_cast<const EarlyFusionNet*>(net_.get());
  if (!net) throw RuntimeError("early fusion model has not been built");
  return net->width();
}

JointFusionModel::JointFusionModel(std::vector<Modality> modalities, TrainConfig config)
    : NetworkModel(SpecFor(Strategy::kJf, std::move(modalities), config)) {}

std::unique_ptr<Network> JointFusionModel::MakeNetwork(const FeatureDims& dims,
                                                       std::mt19937_64& rng) const {
  return std::make_unique<JointFusionNet>(spec_.modalities, dims, rng);
}

std::size_t JointFusionModel::fused_width() const {
  const auto* net = dynamic_cast<const JointFusionNet*>(net_.get());
  if (!net) throw RuntimeError("joint fusion model has not been built");
  return net->width();
}

// ---------------------------------------------------------------------------
// Late fusion

LateFusionModel::LateFusionModel(ModelSpec spec, ModelSpec first, ModelSpec second)
    : Model(std::move(spec)), member_specs_{std::move(first), std::move(second)} {}

LateFusionModel::LateFusionModel(ModelSpec spec, std::unique_ptr<Model> first,
                                 std::unique_ptr<Model> second)
    : Model(std::move(spec)) {
  if (!first || !second) throw ValidationError("late fusion needs two members");
  member_specs_[0] = first->spec();
  member_specs_[1] = second->spec();
  members_[0] = std::move(first);
  members_[1] = std::move(second);
}

void LateFusionModel::SetWeights(LfWeights w, double perf_first, double perf_second) {
  CheckUnit(w.first, "late fusion weight");
  CheckUnit(w.second, "late fusion weight");
  if (std::abs(w.first + w.second - 1.0) > 1e-12) {
    throw ValidationError("late fusion weights must sum to 1");
  }
  weights_ = w;
  perf_[0] = perf_first;
  perf_[1] = perf_second;
}

FitResult LateFusionModel::Fit(const FeatureBank& bank, const std::vector<std::size_t>& train,
                               const std::vector<int>& labels, const FitOptions& options) {
  const auto folds = options.folds.empty() ? RotatingFolds(train) : options.folds;
  std::vector<int> train_labels;
  for (auto i : train) train_labels.push_back(labels.at(i));
  FitResult result;
  for (int k = 0; k < 2; ++k) {
    const ModelSpec member = member_specs_[k];
    CvOutcome cv = CrossValidatedFit([member] { return MakeModel(member); }, bank, train,
                                     labels, folds, DeriveSeed(options.seed, 100 + k));
    perf_[k] = Auroc(cv.out_of_fold, train_labels);
    RecordFitted(cv.fitted_ids);
    if (result.curve.train.empty() && cv.model->network()) result.curve = cv.final_fit.curve;
    members_[k] = std::move(cv.model);
  }
  weights_ = ChooseLfWeights(perf_[0], perf_[1]);
  return result;
}

double LateFusionModel::PredictProba(const FeatureBank& bank, std::size_t patient) const {
  if (!members_[0] || !members_[1]) throw RuntimeError("late fusion model is not trained");
  return CombineLf(members_[0]->PredictProba(bank, patient),
                   members_[1]->PredictProba(bank, patient), weights_);
}

std::vector<const Model*> LateFusionModel::members() const {
  return {members_[0].get(), members_[1].get()};
}

void LateFusionModel::Save(const std::string& dir) const {
  if (!members_[0] || !members_[1]) throw RuntimeError("cannot save an untrained late fusion");
  fs::create_directories(dir);
  for (int k = 0; k < 2; ++k) {
    members_[k]->Save((fs::path(dir) / "members" / std::to_string(k)).string());
  }
  const nlohmann::json weights = {{"weights", {weights_.first, weights_.second}},
                                  {"validation_auroc", {perf_[0], perf_[1]}}};
  WriteFileAtomic((fs::path(dir) / "lf_weights.json").string(), weights.dump(2) + "\n");
  const nlohmann::json meta = {{"kind", "late_fusion"},
                               {"spec", spec_.ToJson()},
                               {"members", {member_specs_[0].ToJson(), member_specs_[1].ToJson()}}};
  WriteFileAtomic((fs::path(dir) / "model.json").string(), meta.dump(2) + "\n");
}

void LateFusionModel::Load(const std::string& dir) {
  for (int k = 0; k < 2; ++k) {
    members_[k] = LoadModel((fs::path(dir) / "members" / std::to_string(k)).string());
    member_specs_[k] = members_[k]->spec();
  }
  const auto j = ReadJson((fs::path(dir) / "lf_weights.json").string());
  SetWeights({j.at("weights")[0].get<double>(), j.at("weights")[1].get<double>()},
             j.at("validation_auroc")[0].get<double>(), j.at("validation_auroc")[1].get<double>());
}

// ---------------------------------------------------------------------------
// Factory

std::vector<ModelSpec> CompositeMembers(const ModelSpec& spec) {
  auto tree = [&spec](std::vector<Modality> mods) {
    ModelSpec s = SpecFor(Strategy::kGbdt, std::move(mods), spec.train);
    s.gbdt = spec.gbdt;
    return s;
  };
  auto unimodal = [&spec](Modality m) {
    return SpecFor(Strategy::kUnimodal, {m}, spec.train);
  };
  switch (spec.strategy) {
    case Strategy::kLf: {
      if (spec.modalities.size() != 2) {
        throw ValidationError(
            "late fusion combines exactly two modalities; use ef+lf, jf+lf or mixture for three");
      }
      std::vector<ModelSpec> out;
      for (auto m : spec.modalities) {
        out.push_back(m == Modality::kTabular ? tree({m}) : unimodal(m));
      }
      return out;
    }
    case Strategy::kEfLf: {
      ModelSpec ef = SpecFor(Strategy::kEf, {Modality::kText, Modality::kAudio}, spec.train);
      return {ef, tree({Modality::kTabular})};
    }
    case Strategy::kJfLf: {
      ModelSpec jf = SpecFor(Strategy::kJf, {Modality::kText, Modality::kAudio}, spec.train);
      return {jf, tree({Modality::kTabular})};
    }
    case Strategy::kMixture: {
      ModelSpec ef = tree({Modality::kTabular, Modality::kText});
      ef.strategy = Strategy::kEf;
      ef.backend = Backend::kGbdt;
      return {ef, unimodal(Modality::kAudio)};
    }
    default:
      throw ValidationError("strategy " + std::string(StrategyName(spec.strategy)) +
                            " has no late-fusion members");
  }
}

std::unique_ptr<Model> MakeModel(ModelSpec spec) {
  spec.Normalize();
  if (spec.modalities.empty()) throw ValidationError("model spec lists no modalities");
  switch (spec.strategy) {
    case Strategy::kUnimodal:
      if (spec.modalities.size() != 1) {
        throw ValidationError("unimodal strategy takes exactly one modality");
      }
      return std::make_unique<UnimodalModel>(spec.modalities.front(), spec.train);
    case Strategy::kGbdt:
      return std::make_unique<GbdtModel>(spec);
    case Strategy::kEf:
      if (spec.modalities.size() < 2) {
        throw ValidationError(
            "early fusion needs at least two modalities; use the unimodal strategy for one");
      }
      if (spec.backend == Backend::kGbdt) return std::make_unique<GbdtModel>(spec);
      return std::make_unique<EarlyFusionModel>(spec.modalities, spec.train);
    case Strategy::kJf:
      if (spec.modalities.size() < 2) {
        throw ValidationError(
            "joint fusion needs at least two modalities; use the unimodal strategy for one");
      }
      return std::make_unique<JointFusionModel>(spec.modalities, spec.train);
    case Strategy::kLf:
    case Strategy::kEfLf:
    case Strategy::kJfLf:
    case Strategy::kMixture: {
      if (spec.strategy != Strategy::kLf) {
        spec.modalities = {Modality::kTabular, Modality::kText, Modality::kAudio};
      }
      auto members = CompositeMembers(spec);
      return std::make_unique<LateFusionModel>(spec, members[0], members[1]);
    }
  }
  throw ValidationError("unknown strategy");
}

std::unique_ptr<Model> LoadModel(const std::string& dir) {
  const auto meta = ReadJson((fs::path(dir) / "model.json").string());
  auto model = MakeModel(ModelSpec::FromJson(meta.at("spec")));
  model->Load(dir);
  return model;
}

}  // namespace mmfuse
