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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "mmfuse/cohort.h"
#include "mmfuse/common.h"
#include "mmfuse/features.h"
#include "mmfuse/fusion.h"
#include "mmfuse/models.h"
#include "mmfuse/text.h"
#include "support.h"

namespace mmfuse {
namespace {

namespace fs = std::filesystem;
using M = Modality;

struct Fixture {
  FeatureBank bank;
  std::vector<int> labels;
  std::vector<std::size_t> all;
};

const Fixture& SmallCohort() {
  static const Fixture f = [] {
    Fixture x;
    const auto cohort = SynthCohort(20, 21, 1.0);
    static const HashingEmbeddingProvider provider(16);
    x.bank = BuildFeatureBank(cohort.records, provider);
    for (const auto& l : LabelCohort(cohort.records, DefaultPolarity())) x.labels.push_back(l.desirable);
    for (std::size_t i = 0; i < x.bank.size(); ++i) x.all.push_back(i);
    return x;
  }();
  return f;
}

ModelSpec Spec(Strategy s, std::vector<M> mods, Backend b = Backend::kNn) {
  ModelSpec spec;
  spec.strategy = s;
  spec.modalities = std::move(mods);
  spec.backend = b;
  spec.train.epochs = 3;
  spec.gbdt.trees = 5;
  return spec;
}

std::vector<ModelSpec> StrategyMatrix() {
  const std::vector<M> all3 = {M::kTabular, M::kText, M::kAudio};
  return {Spec(Strategy::kUnimodal, {M::kTabular}),  Spec(Strategy::kUnimodal, {M::kText}),
          Spec(Strategy::kUnimodal, {M::kAudio}),    Spec(Strategy::kGbdt, {M::kTabular}),
          Spec(Strategy::kEf, all3),                 Spec(Strategy::kEf, {M::kTabular, M::kText}, Backend::kGbdt),
          Spec(Strategy::kJf, all3),                 Spec(Strategy::kLf, {M::kTabular, M::kText}),
          Spec(Strategy::kEfLf, all3),               Spec(Strategy::kJfLf, all3),
          Spec(Strategy::kMixture, all3)};
}

TEST(Architecture, EncoderWidthsByConstruction) {
  const FeatureDims dims = testing::SmallDims();
  const std::size_t expected[] = {20, 20, 10};
  int k = 0;
  for (M m : {M::kTabular, M::kText, M::kAudio}) {
    auto model = BuildUnimodal(m);
    model->Build(dims, 1);
    EXPECT_EQ(model->encoder_width(), expected[k++]) << ModalityName(m);
  }
  JointFusionModel jf({M::kTabular, M::kText, M::kAudio}, {});
  jf.Build(dims, 1);
  EXPECT_EQ(jf.fused_width(), 50u);
  EarlyFusionModel ef({M::kTabular, M::kText}, {});
  ef.Build(dims, 1);
  EXPECT_EQ(ef.concat_width(), dims.tabular_width + dims.text_dim);
}

TEST(Architecture, DescribedLayersUseKernel3Stride2Pool3) {
  const FeatureDims dims = testing::SmallDims();
  auto model = BuildUnimodal(M::kTabular);
  model->Build(dims, 1);
  const std::string text = model->network()->Describe().dump();
  EXPECT_NE(text.find("\"kernel\":3"), std::string::npos) << text;
  EXPECT_NE(text.find("\"stride\":2"), std::string::npos) << text;
  EXPECT_NE(text.find("\"width\":3"), std::string::npos) << text;
}

TEST(Spec, JsonRoundTripAndLabels) {
  for (const auto& s : StrategyMatrix()) {
    const ModelSpec back = ModelSpec::FromJson(s.ToJson());
    EXPECT_EQ(back.ToJson(), s.ToJson());
  }
  ModelSpec unordered = Spec(Strategy::kEf, {M::kText, M::kTabular, M::kText}, Backend::kGbdt);
  unordered.Normalize();
  EXPECT_EQ(unordered.Label(), "ef[tabular+text]/gbdt");
  EXPECT_THROW(ParseStrategy("late"), ValidationError);
}

TEST(MakeModelRules, RejectsInvalidCombinations) {
  EXPECT_THROW(MakeModel(Spec(Strategy::kEf, {M::kText})), ValidationError);
  EXPECT_THROW(MakeModel(Spec(Strategy::kJf, {M::kAudio})), ValidationError);
  EXPECT_THROW(MakeModel(Spec(Strategy::kUnimodal, {M::kText, M::kAudio})), ValidationError);
  EXPECT_THROW(MakeModel(Spec(Strategy::kLf, {M::kTabular, M::kText, M::kAudio})), ValidationError);
  EXPECT_THROW(MakeModel(Spec(Strategy::kGbdt, {M::kAudio})), ValidationError);
}

TEST(Composite, MemberAssignments) {
  const std::vector<M> all3 = {M::kTabular, M::kText, M::kAudio};
  auto lf = CompositeMembers(Spec(Strategy::kLf, {M::kTabular, M::kAudio}));
  EXPECT_EQ(lf[0].strategy, Strategy::kGbdt);
  EXPECT_EQ(lf[1].strategy, Strategy::kUnimodal);
  auto eflf = CompositeMembers(Spec(Strategy::kEfLf, all3));
  EXPECT_EQ(eflf[0].Label(), "ef[text+audio]/nn");
  EXPECT_EQ(eflf[1].Label(), "gbdt[tabular]");
  auto jflf = CompositeMembers(Spec(Strategy::kJfLf, all3));
  EXPECT_EQ(jflf[0].Label(), "jf[text+audio]");
  auto mix = CompositeMembers(Spec(Strategy::kMixture, all3));
  EXPECT_EQ(mix[0].Label(), "ef[tabular+text]/gbdt");
  EXPECT_EQ(mix[1].Label(), "unimodal[audio]");
}

TEST(LateFusion, ConvexCombinationArithmetic) {
  EXPECT_NEAR(CombineLf(0.9, 0.5, 0.8, 0.7), 0.74, 1e-15);
  EXPECT_EQ(CombineLf(0.9, 0.5, 0.8, 0.7), 0.6 * 0.9 + 0.4 * 0.5);
  EXPECT_EQ(CombineLf(0.9, 0.5, 0.7, 0.8), 0.4 * 0.9 + 0.6 * 0.5);
  EXPECT_EQ(CombineLf(0.9, 0.5, 0.75, 0.75), 0.5 * 0.9 + 0.5 * 0.5);
  EXPECT_THROW(ChooseLfWeights(1.2, 0.5), ValidationError);
}

using testing::FixedModel;

TEST(LateFusion, ScriptedScenarioTable) {
  struct Row {
    double perf_a, perf_b, p_a, p_b, expected;
  };
  const Row table[] = {
      {0.80, 0.70, 0.9, 0.5, 0.74},  // first member better
      {0.60, 0.90, 0.9, 0.5, 0.66},  // second member better
      {0.75, 0.75, 0.9, 0.5, 0.70},  // tie splits evenly
      {0.50, 0.51, 0.2, 1.0, 0.68},  // tiny margin still decides
      {1.00, 0.00, 0.0, 1.0, 0.40},
  };
  const FeatureBank bank;
  for (const auto& r : table) {
    LateFusionModel lf(Spec(Strategy::kLf, {M::kTabular, M::kText}),
                       std::make_unique<FixedModel>(std::vector<double>{r.p_a}),
                       std::make_unique<FixedModel>(std::vector<double>{r.p_b}));
    lf.SetWeights(ChooseLfWeights(r.perf_a, r.perf_b), r.perf_a, r.perf_b);
    EXPECT_NEAR(lf.PredictProba(bank, 0), r.expected, 1e-12) << r.perf_a << " vs " << r.perf_b;
    const double hi = std::max(lf.weights().first, lf.weights().second);
    EXPECT_EQ(hi, r.perf_a == r.perf_b ? 0.5 : 0.6);
    EXPECT_EQ(lf.weights().first + lf.weights().second, 1.0);
  }
}

TEST(Models, EveryStrategyFitsPredictsAndReloadsExactly) {
  const Fixture& f = SmallCohort();
  std::vector<std::size_t> train(f.all.begin(), f.all.begin() + 15);
  for (const auto& spec : StrategyMatrix()) {
    auto model = MakeModel(spec);
    FitOptions opt;
    opt.seed = 5;
    opt.folds = RotatingFolds(train, 3);
    model->Fit(f.bank, train, f.labels, opt);
    const auto dir = fs::temp_directory_path() / ("mmfuse_model_" + std::to_string(std::hash<std::string>{}(spec.Label())));
    fs::remove_all(dir);
    model->Save(dir.string());
    const auto back = LoadModel(dir.string());
    fs::remove_all(dir);
    EXPECT_EQ(back->spec().Label(), spec.Label());
    for (std::size_t i = 15; i < f.bank.size(); ++i) {
      const double p = model->PredictProba(f.bank, i);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_EQ(p, back->PredictProba(f.bank, i)) << spec.Label();
    }
    // Only training patients may enter fitting.
    for (const auto& id : model->fitted_ids()) {
      EXPECT_LT(f.bank.IndexOf(id), 15u) << spec.Label() << " fitted " << id;
    }
  }
}

TEST(Models, SameSeedSameModel) {
  const Fixture& f = SmallCohort();
  for (const auto& spec : {Spec(Strategy::kJf, {M::kTabular, M::kText}), Spec(Strategy::kGbdt, {M::kTabular})}) {
    auto a = MakeModel(spec), b = MakeModel(spec);
    FitOptions opt;
    opt.seed = 9;
    a->Fit(f.bank, f.all, f.labels, opt);
    b->Fit(f.bank, f.all, f.labels, opt);
    for (std::size_t i = 0; i < f.bank.size(); ++i) EXPECT_EQ(a->PredictProba(f.bank, i), b->PredictProba(f.bank, i));
  }
}

TEST(Models, TrainingLowersTheLoss) {
  const Fixture& f = SmallCohort();
  ModelSpec spec = Spec(Strategy::kUnimodal, {M::kTabular});
  spec.train.epochs = 100;
  auto model = MakeModel(spec);
  FitOptions opt;
  opt.seed = 1;
  const FitResult r = model->Fit(f.bank, f.all, f.labels, opt);
  ASSERT_EQ(r.curve.train.size(), 100u);
  EXPECT_LT(r.curve.train.back(), 0.7 * r.curve.train.front());
}

TEST(CrossValidation, SelectsArgminStepAndKeepsOutOfFoldAligned) {
  const Fixture& f = SmallCohort();
  std::vector<std::size_t> train(f.all.begin(), f.all.begin() + 16);
  ModelSpec spec = Spec(Strategy::kGbdt, {M::kTabular});
  spec.gbdt.trees = 25;
  const auto folds = RotatingFolds(train, 4);
  const CvOutcome cv = CrossValidatedFit([&] { return MakeModel(spec); }, f.bank, train, f.labels, folds, 3);
  ASSERT_EQ(cv.mean_validation.size(), 25u);
  const auto it = std::min_element(cv.mean_validation.begin(), cv.mean_validation.end());
  EXPECT_EQ(cv.selected_steps, static_cast<int>(it - cv.mean_validation.begin()) + 1);
  ASSERT_EQ(cv.out_of_fold.size(), train.size());
  std::set<std::string> fitted(cv.fitted_ids.begin(), cv.fitted_ids.end());
  for (std::size_t i = 16; i < f.bank.size(); ++i) EXPECT_FALSE(fitted.count(f.bank.patients[i].patient_id));
}

TEST(Predictions, CsvHasOneRowPerPatient) {
  const Fixture& f = SmallCohort();
  auto model = MakeModel(Spec(Strategy::kGbdt, {M::kTabular}));
  FitOptions opt;
  model->Fit(f.bank, f.all, f.labels, opt);
  const std::string csv = FormatPredictionsCsv(f.bank, *model, {0, 1, 2});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.rfind("patient_id,p_desirable,label\n", 0), 0u);
}

}  // namespace
}  // namespace mmfuse
