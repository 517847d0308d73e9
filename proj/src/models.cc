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

#include "mmfuse/models.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include "mmfuse/checkpoint.h"
#include "mmfuse/cohort_io.h"
#include "mmfuse/common.h"
#include "mmfuse/log.h"

namespace mmfuse {
namespace fs = std::filesystem;

std::string_view StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kUnimodal: return "unimodal";
    case Strategy::kGbdt: return "gbdt";
    case Strategy::kEf: return "ef";
    case Strategy::kJf: return "jf";
    case Strategy::kLf: return "lf";
    case Strategy::kEfLf: return "ef+lf";
    case Strategy::kJfLf: return "jf+lf";
    case Strategy::kMixture: return "mixture";
  }
  return "unknown";
}

Strategy ParseStrategy(std::string_view name) {
  for (auto s : {Strategy::kUnimodal, Strategy::kGbdt, Strategy::kEf, Strategy::kJf,
                 Strategy::kLf, Strategy::kEfLf, Strategy::kJfLf, Strategy::kMixture}) {
    if (StrategyName(s) == name) return s;
  }
  throw ValidationError("unknown fusion strategy '" + std::string(name) +
                        "' (expected unimodal, gbdt, ef, jf, lf, ef+lf, jf+lf or mixture)");
}

bool ModelSpec::Uses(Modality m) const {
  return std::find(modalities.begin(), modalities.end(), m) != modalities.end();
}

void ModelSpec::Normalize() {
  std::sort(modalities.begin(), modalities.end());
  modalities.erase(std::unique(modalities.begin(), modalities.end()), modalities.end());
}

std::string ModelSpec::Label() const {
  std::string out(StrategyName(strategy));
  out += "[";
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    if (i) out += "+";
    out += ModalityName(modalities[i]);
  }
  out += "]";
  if (strategy == Strategy::kEf) out += backend == Backend::kGbdt ? "/gbdt" : "/nn";
  return out;
}

nlohmann::json ModelSpec::ToJson() const {
  nlohmann::json mods = nlohmann::json::array();
  for (auto m : modalities) mods.push_back(std::string(ModalityName(m)));
  return {{"strategy", std::string(StrategyName(strategy))},
          {"modalities", mods},
          {"backend", backend == Backend::kGbdt ? "gbdt" : "nn"},
          {"train", train.ToJson()},
          {"gbdt", gbdt.ToJson()}};
}

ModelSpec ModelSpec::FromJson(const nlohmann::json& j) {
  ModelSpec s;
  s.strategy = ParseStrategy(j.value("strategy", std::string("unimodal")));
  if (j.contains("modalities")) {
    s.modalities.clear();
    for (const auto& m : j["modalities"]) s.modalities.push_back(ParseModality(m.get<std::string>()));
  }
  const auto backend = j.value("backend", std::string("nn"));
  if (backend == "nn") {
    s.backend = Backend::kNn;
  } else if (backend == "gbdt") {
    s.backend = Backend::kGbdt;
  } else {
    throw ValidationError("unknown backend '" + backend + "' (expected nn or gbdt)");
  }
  if (j.contains("train")) s.train = TrainConfig::FromJson(j["train"]);
  if (j.contains("gbdt")) s.gbdt = gbdt::GbdtConfig::FromJson(j["gbdt"]);
  s.Normalize();
  return s;
}

FeatureDims FeatureDims::FromBank(const FeatureBank& bank) {
  FeatureDims d;
  for (const auto& c : bank.schema.columns) {
    d.tabular_width += c.kind == ColumnKind::kOneHot ? c.levels.size() : 1;
  }
  d.text_dim = bank.text_dim;
  d.audio_bins = bank.audio_bins;
  d.max_frames = static_cast<std::size_t>(bank.acoustic.max_frames);
  return d;
}

nlohmann::json FeatureDims::ToJson() const {
  return {{"tabular_width", tabular_width},
          {"text_dim", text_dim},
          {"audio_bins", audio_bins},
          {"max_frames", max_frames}};
}

FeatureDims FeatureDims::FromJson(const nlohmann::json& j) {
  FeatureDims d;
  d.tabular_width = j.at("tabular_width").get<std::size_t>();
  d.text_dim = j.at("text_dim").get<std::size_t>();
  d.audio_bins = j.at("audio_bins").get<std::size_t>();
  d.max_frames = j.at("max_frames").get<std::size_t>();
  return d;
}

PatientInputs Model::Inputs(const FeatureBank&, std::size_t) const {
  throw ValidationError("model " + spec_.Label() + " is not differentiable");
}

void Model::RecordFitted(const std::vector<std::string>& ids) {
  std::set<std::string> all(fitted_ids_.begin(), fitted_ids_.end());
  all.insert(ids.begin(), ids.end());
  fitted_ids_.assign(all.begin(), all.end());
}

namespace {

void CheckTrainingLabels(const std::vector<std::size_t>& train, const std::vector<int>& labels,
                         std::size_t bank_size) {
  if (labels.size() != bank_size) {
    throw ValidationError("label vector has " + std::to_string(labels.size()) +
                          " entries for " + std::to_string(bank_size) + " patients");
  }
  if (train.size() < 2) throw ValidationError("training needs at least 2 patients");
  bool seen[2] = {false, false};
  for (auto i : train) {
    const int y = labels.at(i);
    if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
    seen[y] = true;
  }
  if (!seen[0] || !seen[1]) throw ValidationError("training labels contain a single class");
}

TabularScaler FitScaler(const FeatureBank& bank, const std::vector<std::size_t>& train) {
  std::vector<std::vector<RawValue>> rows;
  rows.reserve(train.size());
  for (auto i : train) rows.push_back(bank.patients[i].tabular_raw);
  return TabularScaler::Fit(rows, bank.schema);
}

nlohmann::json ReadJson(const std::string& path) {
  try {
    return nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

// Unimodal network: encoder followed by C.
class UnimodalNet : public Network {
 public:
  virtual std::size_t encoder_width() const = 0;
};

class TabularNet : public UnimodalNet {
 public:
  TabularNet(std::size_t width, std::mt19937_64& rng)
      : encoder_("en_tabular.conv", "en_tabular.fc", width, nn::kTabularConvChannels,
                 nn::kTabularLatent, rng),
        head_(nn::kTabularLatent, rng) {}
  nn::Tensor Forward(const std::vector<const PatientInputs*>& batch) const override {
    std::vector<nn::Tensor> rows;
    for (const auto* p : batch) rows.push_back(p->tabular);
    return head_.Forward(encoder_.Forward(nn::StackRows(rows)));
  }
  std::vector<nn::Parameter*> Parameters() override {
    auto p = encoder_.Parameters();
    for (auto* q : head_.Parameters()) p.push_back(q);
    return p;
  }
  nlohmann::json Describe() const override {
    return {{"encoder", SpecsToJson(encoder_.Specs())}, {"classifier", SpecsToJson(head_.Specs())}};
  }
  std::size_t encoder_width() const override { return encoder_.out_width(); }

 private:
  nn::VectorEncoder encoder_;
  nn::ClassifierHead head_;
};

class TextNet : public UnimodalNet {
 public:
  TextNet(std::size_t dim, std::mt19937_64& rng)
      : encoder_("en_text", dim, nn::kTextHidden, nn::kTextLatent, rng),
        head_(nn::kTextLatent, rng) {}
  nn::Tensor Forward(const std::vector<const PatientInputs*>& batch) const override {
    std::vector<nn::Tensor> seqs;
    for (const auto* p : batch) seqs.push_back(p->text);
    return head_.Forward(encoder_.Forward(seqs));
  }
  std::vector<nn::Parameter*> Parameters() override {
    auto p = encoder_.Parameters();
    for (auto* q : head_.Parameters()) p.push_back(q);
    return p;
  }
  nlohmann::json Describe() const override {
    return {{"encoder", SpecsToJson(encoder_.Specs())}, {"classifier", SpecsToJson(head_.Specs())}};
  }
  std::size_t encoder_width() const override { return encoder_.out_width(); }

 private:
  nn::SequenceEncoder encoder_;
  nn::ClassifierHead head_;
};

// Classifies each utterance; a patient's probability pair is the mean over its
// utterances.
class AudioNet : public UnimodalNet {
 public:
  AudioNet(std::size_t bins, std::mt19937_64& rng)
      : encoder_("en_audio", bins, nn::kAudioHidden, nn::kAudioLatent, rng),
        head_(nn::kAudioLatent, rng) {}
  nn::Tensor Forward(const std::vector<const PatientInputs*>& batch) const override {
    std::vector<nn::Tensor> rows;
    for (const auto* p : batch) {
      if (p->audio.empty()) throw ValidationError("audio model: sample has no utterances");
      rows.push_back(nn::MeanRows(head_.Forward(encoder_.Forward(p->audio))));
    }
    return nn::StackRows(rows);
  }
  std::vector<nn::Parameter*> Parameters() override {
    auto p = encoder_.Parameters();
    for (auto* q : head_.Parameters()) p.push_back(q);
    return p;
  }
  nlohmann::json Describe() const override {
    return {{"encoder", SpecsToJson(encoder_.Specs())}, {"classifier", SpecsToJson(head_.Specs())}};
  }
  std::size_t encoder_width() const override { return encoder_.out_width(); }

 private:
  nn::SequenceEncoder encoder_;
  nn::ClassifierHead head_;
};

}  // namespace

// ---------------------------------------------------------------------------
// NetworkModel

void NetworkModel::Build(const FeatureDims& dims, std::uint64_t seed) {
  dims_ = dims;
  std::mt19937_64 rng(seed);
  net_ = MakeNetwork(dims, rng);
}

PatientInputs NetworkModel::Inputs(const FeatureBank& bank, std::size_t patient) const {
  const PatientFeatures& f = bank.patients.at(patient);
  PatientInputs in;
  if (spec_.Uses(Modality::kTabular)) {
    if (!scaler_fitted_) throw RuntimeError("model " + spec_.Label() + " is not trained");
    const TabularVector v = scaler_.Transform(f.tabular_raw);
    in.tabular = nn::Tensor::FromData({1, v.values.size()}, v.values);
  }
  if (spec_.Uses(Modality::kText)) {
    if (!f.text.defined()) {
      throw ValidationError("patient " + f.patient_id + " has no surgical plan text");
    }
    if (!provider_id_.empty() && bank.provider_id != provider_id_) {
      throw ValidationError("embedding provider '" + bank.provider_id +
                            "' differs from the one used in training ('" + provider_id_ + "')");
    }
    in.text = f.text;
  }
  if (spec_.Uses(Modality::kAudio)) {
    if (f.utterances.empty()) {
      throw ValidationError("patient " + f.patient_id + " has no audio clips");
    }
    in.audio = f.utterances;
  }
  return in;
}

void NetworkModel::TrainingSamples(const FeatureBank& bank,
                                   const std::vector<std::size_t>& patients,
                                   const std::vector<int>& labels,
                                   std::vector<PatientInputs>* samples,
                                   std::vector<int>* sample_labels) const {
  for (auto i : patients) {
    samples->push_back(Inputs(bank, i));
    sample_labels->push_back(labels.at(i));
  }
}

FitResult NetworkModel::Fit(const FeatureBank& bank, const std::vector<std::size_t>& train,
                            const std::vector<int>& labels, const FitOptions& options) {
  CheckTrainingLabels(train, labels, bank.size());
  provider_id_ = spec_.Uses(Modality::kText) ? bank.provider_id : "";
  if (spec_.Uses(Modality::kTabular)) {
    scaler_ = FitScaler(bank, train);
    scaler_fitted_ = true;
  }
  Build(FeatureDims::FromBank(bank), DeriveSeed(options.seed, 0));

  std::vector<PatientInputs> samples;
  std::vector<int> y;
  TrainingSamples(bank, train, labels, &samples, &y);
  std::vector<PatientInputs> val;
  std::vector<int> val_y;
  if (options.validation) TrainingSamples(bank, *options.validation, labels, &val, &val_y);

  TrainConfig config = spec_.train;
  if (options.steps >= 0) config.epochs = options.steps;
  FitResult result;
  result.curve = TrainNetwork(*net_, samples, y, config, DeriveSeed(options.seed, 1),
                              options.validation ? &val : nullptr,
                              options.validation ? &val_y : nullptr);
  RecordFitted(bank.Ids(train));
  return result;
}

nn::Tensor NetworkModel::PredictPair(const FeatureBank& bank, std::size_t patient) const {
  if (!net_) throw RuntimeError("model " + spec_.Label() + " is not trained");
  const PatientInputs in = Inputs(bank, patient);
  return net_->Forward({&in});
}

double NetworkModel::PredictProba(const FeatureBank& bank, std::size_t patient) const {
  return PredictPair(bank, patient).data()[1];
}

void NetworkModel::Save(const std::string& dir) const {
  if (!net_) throw RuntimeError("cannot save an untrained model");
  fs::create_directories(dir);
  auto* self = const_cast<NetworkModel*>(this);
  nn::SaveCheckpoint((fs::path(dir) / "network.ckpt").string(), self->net_->Parameters(),
                     {{"layers", net_->Describe()}});
  nlohmann::json meta = {{"kind", "network"},
                         {"spec", spec_.ToJson()},
                         {"dims", dims_.ToJson()},
                         {"provider_id", provider_id_}};
  if (scaler_fitted_) meta["scaler"] = scaler_.ToJson();
  WriteFileAtomic((fs::path(dir) / "model.json").string(), meta.dump(2) + "\n");
}

void NetworkModel::Load(const std::string& dir) {
  const auto meta = ReadJson((fs::path(dir) / "model.json").string());
  if (meta.contains("scaler")) {
    scaler_ = TabularScaler::FromJson(meta["scaler"]);
    scaler_fitted_ = true;
  }
  provider_id_ = meta.value("provider_id", std::string());
  Build(FeatureDims::FromJson(meta.at("dims")), 0);
  nn::LoadCheckpoint((fs::path(dir) / "network.ckpt").string(), net_->Parameters());
}

// ---------------------------------------------------------------------------
// UnimodalModel

namespace {
ModelSpec UnimodalSpec(Modality m, TrainConfig config) {
  ModelSpec s;
  s.strategy = Strategy::kUnimodal;
  s.modalities = {m};
  s.train = config;
  return s;
}
}  // namespace

UnimodalModel::UnimodalModel(Modality modality, TrainConfig config)
    : NetworkModel(UnimodalSpec(modality, config)) {}

std::unique_ptr<Network> UnimodalModel::MakeNetwork(const FeatureDims& dims,
                                                    std::mt19937_64& rng) const {
  switch (modality()) {
    case Modality::kTabular: return std::make_unique<TabularNet>(dims.tabular_width, rng);
    case Modality::kText: return std::make_unique<TextNet>(dims.text_dim, rng);
    case Modality::kAudio: return std::make_unique<AudioNet>(dims.audio_bins, rng);
  }
  throw ValidationError("unknown modality");
}

std::size_t UnimodalModel::encoder_width() const {
  const auto* net = dynamic_cast<const UnimodalNet*>(net_.get());
  if (!net) throw RuntimeError("unimodal model has not been built");
  return net->encoder_width();
}

void UnimodalModel::TrainingSamples(const FeatureBank& bank,
                                    const std::vector<std::size_t>& patients,
                                    const std::vector<int>& labels,
                                    std::vector<PatientInputs>* samples,
                                    std::vector<int>* sample_labels) const {
  if (modality() != Modality::kAudio) {
    NetworkModel::TrainingSamples(bank, patients, labels, samples, sample_labels);
    return;
  }
  // Each utterance is its own record.
  for (auto i : patients) {
    const auto& f = bank.patients.at(i);
    if (f.utterances.empty()) {
      Warn("patient " + f.patient_id + " has no audio clips; skipped for audio training");
      continue;
    }
    for (const auto& u : f.utterances) {
      PatientInputs in;
      in.audio = {u};
      samples->push_back(std::move(in));
      sample_labels->push_back(labels.at(i));
    }
  }
}

std::unique_ptr<UnimodalModel> BuildUnimodal(Modality modality, const TrainConfig& config) {
  return std::make_unique<UnimodalModel>(modality, config);
}

// ---------------------------------------------------------------------------
// GbdtModel

GbdtModel::GbdtModel(ModelSpec spec) : Model(std::move(spec)) {
  spec_.Normalize();
  if (spec_.Uses(Modality::kAudio)) {
    throw ValidationError(
        "gradient-boosted trees cannot take raw audio; audio needs the jointly trained "
        "condenser of the nn backend");
  }
  if (spec_.modalities.empty()) throw ValidationError("gbdt model needs a modality");
}

std::vector<double> GbdtModel::Row(const FeatureBank& bank, std::size_t patient) const {
  const auto& f = bank.patients.at(patient);
  std::vector<double> row;
  if (spec_.Uses(Modality::kTabular)) row = scaler_.Transform(f.tabular_raw).values;
  if (spec_.Uses(Modality::kText)) {
    if (f.text_pooled.empty()) {
      throw ValidationError("patient " + f.patient_id + " has no surgical plan text");
    }
    row.insert(row.end(), f.text_pooled.begin(), f.text_pooled.end());
  }
  return row;
}

std::vector<std::string> GbdtModel::FeatureNames(const FeatureBank& bank) const {
  std::vector<std::string> names;
  if (spec_.Uses(Modality::kTabular)) names = scaler_.ColumnNames();
  if (spec_.Uses(Modality::kText)) {
    for (std::size_t d = 0; d < bank.text_dim; ++d) names.push_back("text_" + std::to_string(d));
  }
  return names;
}

FitResult GbdtModel::Fit(const FeatureBank& bank, const std::vector<std::size_t>& train,
                         const std::vector<int>& labels, const FitOptions& options) {
  CheckTrainingLabels(train, labels, bank.size());
  if (spec_.Uses(Modality::kTabular)) scaler_ = FitScaler(bank, train);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (auto i : train) {
    rows.push_back(Row(bank, i));
    y.push_back(labels[i]);
  }
  gbdt::GbdtConfig config = spec_.gbdt;
  if (options.steps >= 0) config.trees = options.steps;
  gbdt::FitTrace trace;
  ensemble_ = gbdt::Fit(rows, y, config, FeatureNames(bank), &trace);

  FitResult result;
  result.curve.train.assign(trace.training_loss.begin() + 1, trace.training_loss.end());
  if (options.validation) {
    const auto& val = *options.validation;
    std::vector<std::vector<double>> vrows;
    std::vector<int> vy;
    for (auto i : val) {
      vrows.push_back(Row(bank, i));
      vy.push_back(labels[i]);
    }
    for (std::size_t k = 1; k <= ensemble_.tree_count(); ++k) {
      result.curve.validation.push_back(
          gbdt::LogisticLoss(ensemble_.PredictProba(vrows, static_cast<int>(k)), vy));
    }
  }
  RecordFitted(bank.Ids(train));
  return result;
}

double GbdtModel::PredictProba(const FeatureBank& bank, std::size_t patient) const {
  return ensemble_.PredictProba(Row(bank, patient));
}

void GbdtModel::Save(const std::string& dir) const {
  fs::create_directories(dir);
  nlohmann::json meta = {{"kind", "gbdt"}, {"spec", spec_.ToJson()}};
  if (spec_.Uses(Modality::kTabular)) meta["scaler"] = scaler_.ToJson();
  WriteFileAtomic((fs::path(dir) / "gbdt.json").string(), ensemble_.ToJson().dump() + "\n");
  WriteFileAtomic((fs::path(dir) / "model.json").string(), meta.dump(2) + "\n");
}

void GbdtModel::Load(const std::string& dir) {
  const auto meta = ReadJson((fs::path(dir) / "model.json").string());
  if (meta.contains("scaler")) scaler_ = TabularScaler::FromJson(meta["scaler"]);
  ensemble_ = gbdt::BoostedEnsemble::FromJson(ReadJson((fs::path(dir) / "gbdt.json").string()));
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<std::vector<std::size_t>> RotatingFolds(const std::vector<std::size_t>& train,
                                                    int k) {
  if (k < 2) throw ValidationError("need at least 2 folds");
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < train.size(); ++i) folds[i % k].push_back(train[i]);
  return folds;
}

CvOutcome CrossValidatedFit(const ModelFactory& factory, const FeatureBank& bank,
                            const std::vector<std::size_t>& train,
                            const std::vector<int>& labels,
                            const std::vector<std::vector<std::size_t>>& folds,
                            std::uint64_t seed) {
  if (folds.empty()) throw ValidationError("cross-validation needs folds");
  CvOutcome out;
  std::set<std::string> fitted;
  auto probe = factory();
  if (probe->self_validating()) {
    FitOptions o;
    o.seed = DeriveSeed(seed, 0);
    o.folds = folds;
    out.final_fit = probe->Fit(bank, train, labels, o);
    out.selected_steps = probe->default_steps();
    out.fitted_ids = probe->fitted_ids();
    out.model = std::move(probe);
    return out;
  }

  std::vector<double> oof_by_patient(bank.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> sum;
  int used = 0;
  for (std::size_t k = 0; k < folds.size(); ++k) {
    const std::set<std::size_t> held(folds[k].begin(), folds[k].end());
    std::vector<std::size_t> fold_train;
    bool seen[2] = {false, false};
    for (auto i : train) {
      if (!held.count(i)) {
        fold_train.push_back(i);
        seen[labels.at(i)] = true;
      }
    }
    if (folds[k].empty() || !seen[0] || !seen[1]) {
      Warn("fold " + std::to_string(k) + " skipped: its training part lacks a class");
      continue;
    }
    auto m = factory();
    FitOptions o;
    o.seed = DeriveSeed(seed, k + 1);
    o.validation = &folds[k];
    FitResult r = m->Fit(bank, fold_train, labels, o);
    if (sum.empty()) sum.assign(r.curve.validation.size(), 0.0);
    for (std::size_t e = 0; e < sum.size() && e < r.curve.validation.size(); ++e) {
      sum[e] += r.curve.validation[e];
    }
    ++used;
    for (auto i : folds[k]) oof_by_patient[i] = m->PredictProba(bank, i);
    fitted.insert(m->fitted_ids().begin(), m->fitted_ids().end());
  }

  out.selected_steps = probe->default_steps();
  if (used > 0 && !sum.empty()) {
    for (double& v : sum) v /= used;
    out.mean_validation = sum;
    const auto best = std::min_element(sum.begin(), sum.end());
    out.selected_steps = static_cast<int>(best - sum.begin()) + 1;
  }
  FitOptions o;
  o.seed = DeriveSeed(seed, 0);
  o.steps = out.selected_steps;
  out.final_fit = probe->Fit(bank, train, labels, o);
  fitted.insert(probe->fitted_ids().begin(), probe->fitted_ids().end());
  out.model = std::move(probe);
  for (auto i : train) {
    const double p = oof_by_patient[i];
    out.out_of_fold.push_back(std::isnan(p) ? out.model->PredictProba(bank, i) : p);
  }
  out.fitted_ids.assign(fitted.begin(), fitted.end());
  return out;
}

std::string FormatPredictionsCsv(const FeatureBank& bank, const Model& model,
                                 const std::vector<std::size_t>& patients) {
  std::ostringstream out;
  out << "patient_id,p_desirable,label\n";
  for (auto i : patients) {
    const double p = model.PredictProba(bank, i);
    out << bank.patients.at(i).patient_id << "," << FormatDouble(p) << ","
        << (p >= 0.5 ? 1 : 0) << "\n";
  }
  return out.str();
}

}  // namespace mmfuse
