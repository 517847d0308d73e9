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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Checks reuse the independent oracles in support.h.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mmfuse/cohort.h"
#include "mmfuse/common.h"
#include "mmfuse/experiment.h"
#include "mmfuse/features.h"
#include "mmfuse/fusion.h"
#include "mmfuse/gbdt.h"
#include "mmfuse/interpret.h"
#include "mmfuse/layers.h"
#include "mmfuse/log.h"
#include "mmfuse/metrics.h"
#include "mmfuse/models.h"
#include "mmfuse/text.h"
#include "support.h"

namespace mmfuse {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Collects failed checks; the criterion passes when none fail.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ += !ok;
  }
  bool ok() const { return failed_ == 0; }
  std::string Summary(const std::string& extra) const {
    std::ostringstream s;
    s << checks_ << " checks, " << failed_ << " failed";
    if (!extra.empty()) s << "; " << extra;
    for (const auto& f : failures_) s << "\n    " << f;
    return s.str();
  }

 private:
  std::size_t checks_ = 0, failed_ = 0;
  std::vector<std::string> failures_;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<int> Labels(const std::vector<PatientRecord>& records) {
  std::vector<int> out;
  for (const auto& l : LabelCohort(records, DefaultPolarity())) out.push_back(l.desirable);
  return out;
}

ModelSpec Spec(Strategy s, std::vector<Modality> mods, Backend b = Backend::kNn) {
  ModelSpec spec;
  spec.strategy = s;
  spec.modalities = std::move(mods);
  spec.backend = b;
  return spec;
}

// Every strategy the CLI exposes, with the modality sets it uses.
std::vector<ModelSpec> StrategyMatrix() {
  using M = Modality;
  const std::vector<M> all = {M::kTabular, M::kText, M::kAudio};
  return {Spec(Strategy::kUnimodal, {M::kTabular}),
          Spec(Strategy::kUnimodal, {M::kText}),
          Spec(Strategy::kUnimodal, {M::kAudio}),
          Spec(Strategy::kGbdt, {M::kTabular}),
          Spec(Strategy::kEf, all),
          Spec(Strategy::kEf, {M::kTabular, M::kText}, Backend::kGbdt),
          Spec(Strategy::kJf, all),
          Spec(Strategy::kLf, {M::kTabular, M::kText}),
          Spec(Strategy::kEfLf, all),
          Spec(Strategy::kJfLf, all),
          Spec(Strategy::kMixture, all)};
}

// 1. Finite-difference gradients for every op, layer and fusion network.
Outcome GradientCorrectness() {
  constexpr int kSeeds = 20;
  constexpr double kTol = 1e-4;
  const auto start = Clock::now();
  Checker c;
  double worst = 0.0;
  std::size_t coords = 0, nonsmooth = 0;
  auto record = [&](const testing::GradCheck& r, const std::string& name) {
    c.Expect(r.max_rel <= kTol, name + " rel " + Fmt(r.max_rel) + " at " + r.worst);
    c.Expect(r.nonsmooth * 100 <= r.coordinates, name + " too many kink crossings");
    worst = std::max(worst, r.max_rel);
    coords += r.coordinates;
    nonsmooth += r.nonsmooth;
  };
  for (const auto& op : testing::OpGradientCases()) {
    for (int seed = 0; seed < kSeeds; ++seed) record(testing::CheckOpCase(op, seed), op.name);
  }
  const FeatureDims dims = testing::SmallDims();
  for (const auto& arch : testing::DifferentiableArchitectures()) {
    for (int seed = 0; seed < kSeeds; ++seed) {
      auto model = arch.make();
      model->Build(dims, 77 + seed);
      std::mt19937_64 rng(500 + seed);
      auto batch = testing::RandomInputs(dims, arch.modalities, 3, rng, true);
      record(testing::CheckNetworkGradients(*model->mutable_network(), batch, {1, 0, 1}), arch.name);
    }
  }
  const double secs = Seconds(start);
  c.Expect(secs < 120.0, "runtime " + Fmt(secs) + " s");
  return {c.ok(), c.Summary("max rel " + Fmt(worst) + ", " + std::to_string(nonsmooth) + "/" +
                            std::to_string(coords) + " kink coordinates excluded, " + Fmt(secs, 3) +
                            " s")};
}

// 2. Completeness, linear exactness and the zero path.
Outcome IgAxioms() {
  Checker c;
  double worst_gap = 0.0;
  const FeatureDims dims = testing::SmallDims();
  std::mt19937_64 rng(9);
  for (const auto& arch : testing::DifferentiableArchitectures()) {
    for (int seed = 0; seed < 5; ++seed) {
      auto model = arch.make();
      model->Build(dims, seed);
      const auto inputs = testing::RandomInputs(dims, arch.modalities, 1, rng, false);
      for (IgTarget t : {IgTarget::kPredictedClass, IgTarget::kDesirable}) {
        const auto rep = IntegratedGradients(*model->network(), inputs[0], 256, t);
        c.Expect(rep.completeness_gap <= 1e-3, arch.name + " gap " + Fmt(rep.completeness_gap));
        worst_gap = std::max(worst_gap, rep.completeness_gap);
      }
    }
  }
  // Fitted composites: attribution runs through each differentiable member.
  const auto cohort = SynthCohort(20, 3, 1.0);
  const HashingEmbeddingProvider provider(16);
  const FeatureBank bank = BuildFeatureBank(cohort.records, provider);
  const auto labels = Labels(cohort.records);
  std::vector<std::size_t> all(bank.size());
  std::iota(all.begin(), all.end(), 0);
  for (auto spec : StrategyMatrix()) {
    spec.train.epochs = 5;
    spec.gbdt.trees = 5;
    auto model = MakeModel(spec);
    FitOptions opt;
    model->Fit(bank, all, labels, opt);
    for (const auto& rep : AttributeModel(*model, bank, 0, 256)) {
      c.Expect(rep.completeness_gap <= 1e-3, spec.Label() + " gap " + Fmt(rep.completeness_gap));
      worst_gap = std::max(worst_gap, rep.completeness_gap);
    }
  }
  double worst_linear = 0.0;
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    testing::LinearNetwork net(14, rng);
    std::vector<double> x(14);
    for (auto& v : x) v = g(rng);
    PatientInputs in;
    in.tabular = nn::Tensor::FromData({1, 14}, x);
    const auto rep = IntegratedGradients(net, in, 256, IgTarget::kDesirable);
    for (std::size_t i = 0; i < 14; ++i) {
      worst_linear = std::max(worst_linear, std::fabs(rep.groups[0].values[i] - net.Weight(i) * x[i]));
    }
    PatientInputs zero;
    zero.tabular = nn::Tensor::Zeros({1, 14});
    const auto z = IntegratedGradients(net, zero, 256, IgTarget::kDesirable);
    bool exact_zero = true;
    for (double v : z.groups[0].values) exact_zero &= v == 0.0;
    c.Expect(exact_zero, "zero input gave a nonzero attribution");
  }
  c.Expect(worst_linear <= 1e-9, "linear attribution error " + Fmt(worst_linear));
  return {c.ok(), c.Summary("max gap " + Fmt(worst_gap) + ", linear error " + Fmt(worst_linear))};
}

// 3. Metrics against the brute-force oracle.
Outcome MetricsOracle() {
  Checker c;
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> size(2, 60), grid(0, 20);
  std::bernoulli_distribution coin(0.5);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> p;
    std::vector<int> y;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      p.push_back(grid(rng) / 20.0);
      y.push_back(coin(rng));
    }
    const Confusion k = ConfusionAt(p, y);
    const auto o = testing::OracleConfusion(p, y);
    c.Expect(k.tp == o.tp && k.fp == o.fp && k.fn == o.fn && k.tn == o.tn,
             "confusion mismatch in instance " + std::to_string(t));
    const auto got = ComputeMetrics(p, y).Values();
    const auto want = testing::OracleMetrics(p, y);
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      // Counts and ratios are exact; the AUROC is the same rational number
      // reached by a different summation order.
      const bool same = std::isnan(want[m]) ? std::isnan(got[m])
                                            : std::fabs(got[m] - want[m]) <= (m == 0 ? 1e-12 : 0.0);
      c.Expect(same, std::string(kMetricNames[m]) + " mismatch in instance " + std::to_string(t));
    }
  }
  const Metrics hand = ComputeMetrics({0.9, 0.8, 0.3, 0.7, 0.2, 0.1}, {1, 1, 1, 0, 0, 0});
  const Confusion hc = ConfusionAt({0.9, 0.8, 0.3, 0.7, 0.2, 0.1}, {1, 1, 1, 0, 0, 0});
  c.Expect(hc.tp == 2 && hc.fp == 1 && hc.fn == 1 && hc.tn == 2, "hand confusion");
  c.Expect(std::fabs(hand.accuracy - 0.667) <= 1e-3 && std::fabs(hand.accuracy - 4.0 / 6.0) <= 1e-9,
           "hand accuracy " + Fmt(hand.accuracy, 12));
  return {c.ok(), c.Summary("hand accuracy " + Fmt(hand.accuracy, 6))};
}

// 4. Labeling against the brute-force labeler.
Outcome LabelingOracle() {
  Checker c;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(20, 60);
  std::size_t rows = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto cohort = SynthCohort(size(rng), 9000 + trial, 0.5);
    const auto a = LabelCohort(cohort.records, DefaultPolarity());
    const auto b = LabelCohort(cohort.records, LiteralPolarity());
    const auto oa = testing::BruteForceLabels(cohort.records, testing::OraclePolarity::kClinical);
    const auto ob = testing::BruteForceLabels(cohort.records, testing::OraclePolarity::kAllHigher);
    for (std::size_t i = 0; i < cohort.records.size(); ++i, ++rows) {
      c.Expect((a[i].desirable ? 1 : 0) == oa[i], "default polarity, cohort " + std::to_string(trial));
      c.Expect((b[i].desirable ? 1 : 0) == ob[i], "literal polarity, cohort " + std::to_string(trial));
    }
  }
  return {c.ok(), c.Summary(std::to_string(rows) + " patients in 100 cohorts")};
}

// 5. No scored patient ever enters fitting, over the whole strategy matrix.
Outcome LeakageGuard() {
  Checker c;
  const auto start = Clock::now();
  const HashingEmbeddingProvider provider;
  std::size_t runs = 0, overlaps = 0;
  // The guard itself must fire on a planted overlap.
  bool fired = false;
  try {
    CheckNoLeakage({"P1", "P2"}, {"P2"});
  } catch (const RuntimeError&) {
    fired = true;
  }
  c.Expect(fired, "guard did not fire on a planted overlap");
  std::vector<FeatureBank> banks;
  std::vector<std::vector<int>> labels;
  for (int e = 0; e < 10; ++e) {
    const auto cohort = SynthCohort(40, 100 + e, 1.0);
    banks.push_back(BuildFeatureBank(cohort.records, provider));
    labels.push_back(Labels(cohort.records));
  }
  for (auto spec : StrategyMatrix()) {
    // The check is structural, so a short budget exercises it fully.
    spec.train.epochs = 2;
    spec.gbdt.trees = 5;
    for (int e = 0; e < 10; ++e) {
      ExperimentOptions opt;
      opt.repeats = 10;
      opt.bootstrap_resamples = 50;
      opt.seed = 1000 + e;
      const MetricReport rep = RunExperiment(banks[e], labels[e], spec, opt,
                                             [&](const RunRecord& r, const Model& m) {
        const auto fitted = m.fitted_ids();
        c.Expect(!fitted.empty(), spec.Label() + " recorded no fitted patients");
        const auto a = Overlap(fitted, r.test_ids);
        const auto b = Overlap(r.split.train_ids, r.test_ids);
        overlaps += a.size() + b.size();
        c.Expect(a.empty() && b.empty(), spec.Label() + " leaked " + std::to_string(a.size() + b.size()));
        c.Expect(r.test_ids == r.split.test_ids, spec.Label() + " scored outside the test split");
      });
      for (const auto& r : rep.runs) {
        overlaps += r.leakage_overlaps;
        ++runs;
      }
    }
  }
  return {c.ok() && overlaps == 0,
          c.Summary(std::to_string(runs) + " runs, " + std::to_string(overlaps) + " overlaps, " +
                    Fmt(Seconds(start), 3) + " s")};
}

// 6. Strong signal is learned, absent signal stays at chance.
Outcome LearningSignal() {
  using M = Modality;
  Checker c;
  const auto start = Clock::now();
  const HashingEmbeddingProvider provider;
  const std::vector<ModelSpec> specs = {Spec(Strategy::kUnimodal, {M::kTabular}),
                                        Spec(Strategy::kGbdt, {M::kTabular}),
                                        Spec(Strategy::kEf, {M::kTabular, M::kText, M::kAudio}),
                                        Spec(Strategy::kJf, {M::kTabular, M::kText, M::kAudio})};
  std::ostringstream table;
  for (double signal : {1.0, 0.0}) {
    const auto cohort = SynthCohort(40, 7, signal);
    const FeatureBank bank = BuildFeatureBank(cohort.records, provider);
    const auto labels = Labels(cohort.records);
    for (const auto& spec : specs) {
      ExperimentOptions opt;
      opt.seed = 7;
      opt.bootstrap_resamples = 200;
      const MetricReport rep = RunExperiment(bank, labels, spec, opt);
      const double acc = rep.headline.accuracy;
      table << "\n    signal " << signal << " " << spec.Label() << " accuracy " << Fmt(acc, 3);
      if (signal == 1.0) {
        c.Expect(acc >= 0.85, spec.Label() + " accuracy " + Fmt(acc) + " below 0.85");
      } else {
        c.Expect(acc >= 0.35 && acc <= 0.65, spec.Label() + " accuracy " + Fmt(acc) + " outside chance band");
      }
    }
  }
  const double secs = Seconds(start);
  c.Expect(secs < 900.0, "runtime " + Fmt(secs) + " s");
  return {c.ok(), c.Summary(Fmt(secs, 3) + " s" + table.str())};
}

// 7. Late-fusion arithmetic and weight assignment.
Outcome LateFusionArithmetic() {
  Checker c;
  c.Expect(CombineLf(0.9, 0.5, 0.8, 0.7) == 0.6 * 0.9 + 0.4 * 0.5, "60:40 combination");
  c.Expect(std::fabs(CombineLf(0.9, 0.5, 0.8, 0.7) - 0.74) <= 1e-15, "(0.9, 0.5) -> 0.74");
  struct Row {
    double perf_a, perf_b, p_a, p_b, expected;
  };
  const Row table[] = {{0.80, 0.70, 0.9, 0.5, 0.74}, {0.60, 0.90, 0.9, 0.5, 0.66},
                       {0.75, 0.75, 0.9, 0.5, 0.70}, {0.50, 0.51, 0.2, 1.0, 0.68},
                       {1.00, 0.00, 0.0, 1.0, 0.40}};
  const FeatureBank bank;
  for (const auto& r : table) {
    LateFusionModel lf(Spec(Strategy::kLf, {Modality::kTabular, Modality::kText}),
                       std::make_unique<testing::FixedModel>(std::vector<double>{r.p_a}),
                       std::make_unique<testing::FixedModel>(std::vector<double>{r.p_b}));
    lf.SetWeights(ChooseLfWeights(r.perf_a, r.perf_b), r.perf_a, r.perf_b);
    const std::string name = Fmt(r.perf_a) + " vs " + Fmt(r.perf_b);
    c.Expect(std::fabs(lf.PredictProba(bank, 0) - r.expected) <= 1e-12, name + " combined");
    const auto w = lf.weights();
    const double want_a = r.perf_a > r.perf_b ? 0.6 : r.perf_a < r.perf_b ? 0.4 : 0.5;
    c.Expect(w.first == want_a && w.second == 1.0 - want_a, name + " weights");
  }
  return {c.ok(), c.Summary("")};
}

// 8. CCA invariances and loadings.
Outcome CcaProperties() {
  Checker c;
  std::mt19937_64 rng(3);
  double worst_inv = 0.0, worst_load = 0.0, worst_id = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Matrix x = testing::RandomMatrix(50, 4, rng);
    Matrix y = testing::RandomMatrix(50, 3, rng);
    for (std::size_t r = 0; r < y.rows; ++r) y(r, 0) += 0.8 * x(r, 1);
    worst_id = std::max(worst_id, std::fabs(CcaFirst(x, x).r - 1.0));
    auto mix = [&rng](const Matrix& m) {
      Matrix a = testing::RandomMatrix(m.cols, m.cols, rng);
      for (std::size_t i = 0; i < m.cols; ++i) a(i, i) += 4.0;
      Matrix out(m.rows, m.cols);
      for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t k = 0; k < m.cols; ++k)
          for (std::size_t j = 0; j < m.cols; ++j) out(i, j) += m(i, k) * a(k, j);
      return out;
    };
    const CcaResult base = CcaFirst(x, y);
    worst_inv = std::max(worst_inv, std::fabs(CcaFirst(mix(x), mix(y)).r - base.r));
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double want = testing::OraclePearson(testing::Column(x, j), base.x_variate);
      worst_load = std::max(worst_load, std::fabs(base.x_loadings[j] - want));
    }
    for (std::size_t j = 0; j < y.cols; ++j) {
      const double want = testing::OraclePearson(testing::Column(y, j), base.y_variate);
      worst_load = std::max(worst_load, std::fabs(base.y_loadings[j] - want));
    }
  }
  c.Expect(worst_id <= 1e-6, "identical r off by " + Fmt(worst_id));
  c.Expect(worst_inv <= 1e-6, "invariance off by " + Fmt(worst_inv));
  c.Expect(worst_load <= 1e-9, "loadings off by " + Fmt(worst_load));
  return {c.ok(), c.Summary("identity " + Fmt(worst_id) + ", invariance " + Fmt(worst_inv) +
                            ", loadings " + Fmt(worst_load))};
}

// 9. VMS and bootstrap.
Outcome VmsAndBootstrap() {
  Checker c;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::array<Interval, kMetricCount> ci;
    std::vector<double> widths;
    for (auto& i : ci) {
      // Dyadic endpoints make every width and the mean exactly representable.
      i = {std::floor(u(rng) * 64) / 64, std::floor(u(rng) * 64) / 64};
      widths.push_back(std::fabs(i.upper - i.lower));
    }
    std::sort(widths.begin(), widths.end());
    double sum = 0.0;
    for (double w : widths) sum += w;
    c.Expect(Vms(ci) == sum / kMetricCount, "vms set " + std::to_string(t));
  }
  std::vector<double> p;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    y.push_back(i % 2);
    p.push_back(i % 2 ? 0.8 : 0.3);
  }
  const auto perfect = BootstrapCi(p, y, 500, 0.95, 1);
  for (const auto& i : perfect.ci) c.Expect(i.width() == 0.0, "perfect predictions gave a nonzero width");
  std::vector<double> noisy;
  for (int i = 0; i < 40; ++i) noisy.push_back(u(rng));
  const auto a = BootstrapCi(noisy, y, 1000, 0.95, 42);
  const auto b = BootstrapCi(noisy, y, 1000, 0.95, 42);
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    c.Expect(a.ci[k].lower == b.ci[k].lower && a.ci[k].upper == b.ci[k].upper, "bootstrap not reproducible");
  }
  return {c.ok(), c.Summary("noisy VMS " + Fmt(Vms(a.ci)))};
}

void CollectEnsembles(const Model& m, std::vector<const gbdt::BoostedEnsemble*>* out) {
  if (const auto* g = dynamic_cast<const GbdtModel*>(&m)) out->push_back(&g->ensemble());
  for (const Model* sub : m.members()) {
    if (sub) CollectEnsembles(*sub, out);
  }
}

// 10. Importance sums to 100 and is zero exactly for unused features.
Outcome ImportanceNormalization() {
  Checker c;
  std::vector<gbdt::BoostedEnsemble> owned;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
      const double a = g(rng), b = g(rng);
      rows.push_back({a, b, 1.0, g(rng)});
      labels.push_back(a + 0.3 * b > 0 ? 1 : 0);
    }
    gbdt::GbdtConfig cfg;
    cfg.trees = 10 + 5 * t;
    owned.push_back(gbdt::Fit(rows, labels, cfg));
    c.Expect(gbdt::FeatureImportance(owned.back())[2] == 0.0, "constant column has importance");
  }
  std::vector<const gbdt::BoostedEnsemble*> all;
  for (const auto& e : owned) all.push_back(&e);
  const auto cohort = SynthCohort(30, 4, 1.0);
  const HashingEmbeddingProvider provider(16);
  const FeatureBank bank = BuildFeatureBank(cohort.records, provider);
  const auto labels = Labels(cohort.records);
  std::vector<std::size_t> idx(bank.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::unique_ptr<Model>> models;
  for (auto spec : StrategyMatrix()) {
    spec.train.epochs = 2;
    spec.gbdt.trees = 40;
    models.push_back(MakeModel(spec));
    models.back()->Fit(bank, idx, labels, FitOptions{});
    CollectEnsembles(*models.back(), &all);
  }
  double worst = 0.0;
  for (const auto* e : all) {
    const auto imp = gbdt::FeatureImportance(*e);
    worst = std::max(worst, std::fabs(std::accumulate(imp.begin(), imp.end(), 0.0) - 100.0));
    std::vector<bool> used(imp.size(), false);
    for (const auto& tree : e->trees())
      for (const auto& n : tree.nodes)
        if (n.feature >= 0) used[n.feature] = true;
    for (std::size_t f = 0; f < imp.size(); ++f) c.Expect((imp[f] > 0.0) == used[f], "importance/use mismatch");
  }
  c.Expect(worst <= 1e-9, "sum off by " + Fmt(worst));
  return {c.ok(), c.Summary(std::to_string(all.size()) + " ensembles, max |sum - 100| " + Fmt(worst))};
}

// 11. Structural anchors.
Outcome StructuralAnchors() {
  Checker c;
  c.Expect(!BcqFromScores(30, 0, 0).yang_xu && BcqFromScores(31, 0, 0).yang_xu, "yang-xu boundary 31");
  c.Expect(!BcqFromScores(0, 29, 0).yin_xu && BcqFromScores(0, 30, 0).yin_xu, "yin-xu boundary 30");
  c.Expect(!BcqFromScores(0, 0, 26).stasis && BcqFromScores(0, 0, 27).stasis, "stasis boundary 27");
  c.Expect(BcqFromScores(30, 29, 26).gentleness && !BcqFromScores(31, 0, 0).gentleness, "gentleness");

  auto records = SynthCohort(25, 8, 0.5).records;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < records.size(); i += 4) {
    records[i].utterances.pop_back();
    ++excluded;
  }
  const HashingEmbeddingProvider provider(16);
  const FeatureBank bank = BuildFeatureBank(records, provider);
  std::vector<std::size_t> all(bank.size());
  std::iota(all.begin(), all.end(), 0);
  c.Expect(bank.UtteranceCount(all) == 5 * records.size() - excluded, "audio record count");

  const FeatureDims dims = testing::SmallDims();
  const std::size_t widths[] = {20, 20, 10};
  int k = 0;
  for (Modality m : {Modality::kTabular, Modality::kText, Modality::kAudio}) {
    auto model = BuildUnimodal(m);
    model->Build(dims, 1);
    c.Expect(model->encoder_width() == widths[k++], std::string(ModalityName(m)) + " encoder width");
  }
  JointFusionModel jf({Modality::kTabular, Modality::kText, Modality::kAudio}, {});
  jf.Build(dims, 1);
  c.Expect(jf.fused_width() == 50, "joint fused width");
  std::mt19937_64 rng(1);
  nn::ConvBlock block("b", 1, 8, rng);
  c.Expect(block.conv().kernel() == 3 && block.conv().stride() == 2 && block.pool_width() == 3,
           "conv hyperparameters");
  c.Expect(block.Forward(nn::Tensor::Zeros({1, 1, 14})).shape() == nn::Shape{1, 8, 2}, "conv block shape");
  return {c.ok(), c.Summary("")};
}

}  // namespace
}  // namespace mmfuse

int main() {
  using namespace mmfuse;
  long warnings = 0;
  SetWarningSink([&warnings](std::string_view) { ++warnings; });
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", GradientCorrectness},
      {"integrated gradients axioms", IgAxioms},
      {"metrics oracle equivalence", MetricsOracle},
      {"labeling oracle equivalence", LabelingOracle},
      {"leakage guard", LeakageGuard},
      {"learning signal", LearningSignal},
      {"late fusion arithmetic", LateFusionArithmetic},
      {"cca properties", CcaProperties},
      {"vms and bootstrap", VmsAndBootstrap},
      {"feature importance normalization", ImportanceNormalization},
      {"structural anchors", StructuralAnchors},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu (%s) [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, Seconds(start), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed (%ld warnings suppressed)\n", criteria.size() - failed,
              criteria.size(), warnings);
  return failed == 0 ? 0 : 1;
}
