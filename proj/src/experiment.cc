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

#include "mmfuse/experiment.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "mmfuse/cohort_io.h"
#include "mmfuse/common.h"
#include "mmfuse/log.h"

namespace mmfuse {
namespace {

nlohmann::json NumberOrNull(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json MetricsJson(const Metrics& m) {
  nlohmann::json j;
  const auto v = m.Values();
  for (std::size_t k = 0; k < kMetricCount; ++k) j[std::string(kMetricNames[k])] = NumberOrNull(v[k]);
  return j;
}

nlohmann::json CiJson(const std::array<Interval, kMetricCount>& ci) {
  nlohmann::json j;
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    j[std::string(kMetricNames[k])] = {{"lower", NumberOrNull(ci[k].lower)},
                                       {"upper", NumberOrNull(ci[k].upper)}};
  }
  return j;
}

double NumberOrNan(const nlohmann::json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

Metrics MetricsFromJson(const nlohmann::json& j) {
  std::array<double, kMetricCount> v{};
  for (std::size_t k = 0; k < kMetricCount; ++k) v[k] = NumberOrNan(j.at(std::string(kMetricNames[k])));
  return Metrics::FromValues(v);
}

}  // namespace

nlohmann::json SplitPlan::ToJson() const {
  return {{"seed", seed}, {"train_ids", train_ids}, {"test_ids", test_ids}, {"folds", folds}};
}

SplitPlan MakeSplit(const std::vector<std::string>& patient_ids, std::uint64_t seed,
                    double test_fraction, int folds) {
  if (patient_ids.size() < 10) {
    throw ValidationError("a split needs at least 10 patients, got " +
                          std::to_string(patient_ids.size()));
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  if (folds < 2) throw ValidationError("need at least 2 folds");
  if (std::set<std::string>(patient_ids.begin(), patient_ids.end()).size() != patient_ids.size()) {
    throw ValidationError("patient ids must be unique");
  }
  std::vector<std::string> ids = patient_ids;
  std::mt19937_64 rng(seed);
  // Fisher-Yates.
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(ids[i], ids[pick(rng)]);
  }
  const std::size_t n_test = static_cast<std::size_t>(
      std::lround(test_fraction * static_cast<double>(ids.size())));
  SplitPlan plan;
  plan.seed = seed;
  plan.test_ids.assign(ids.begin(), ids.begin() + n_test);
  plan.train_ids.assign(ids.begin() + n_test, ids.end());
  if (plan.train_ids.size() < static_cast<std::size_t>(folds)) {
    throw ValidationError("too few training patients for " + std::to_string(folds) + " folds");
  }
  plan.folds.resize(folds);
  for (std::size_t i = 0; i < plan.train_ids.size(); ++i) {
    plan.folds[i % folds].push_back(plan.train_ids[i]);
  }
  return plan;
}

std::vector<std::string> Overlap(const std::vector<std::string>& a,
                                 const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end());
  std::set<std::string> out;
  for (const auto& id : b) {
    if (sa.count(id)) out.insert(id);
  }
  return {out.begin(), out.end()};
}

void CheckNoLeakage(const std::vector<std::string>& fitted_ids,
                    const std::vector<std::string>& scored_ids) {
  const auto both = Overlap(fitted_ids, scored_ids);
  if (both.empty()) return;
  std::string list;
  for (const auto& id : both) list += (list.empty() ? "" : ", ") + id;
  throw RuntimeError("leakage: patients used in fitting were also scored: " + list);
}

nlohmann::json ExperimentOptions::ToJson() const {
  return {{"repeats", repeats},         {"folds", folds},
          {"test_fraction", test_fraction}, {"bootstrap", bootstrap_resamples},
          {"level", level},             {"threshold", threshold},
          {"seed", seed},               {"per_run_ci", per_run_ci}};
}

ExperimentOptions ExperimentOptions::FromJson(const nlohmann::json& j) {
  ExperimentOptions o;
  o.repeats = j.value("repeats", o.repeats);
  o.folds = j.value("folds", o.folds);
  o.test_fraction = j.value("test_fraction", o.test_fraction);
  o.bootstrap_resamples = j.value("bootstrap", o.bootstrap_resamples);
  o.level = j.value("level", o.level);
  o.threshold = j.value("threshold", o.threshold);
  o.seed = j.value("seed", o.seed);
  o.per_run_ci = j.value("per_run_ci", o.per_run_ci);
  if (o.repeats < 1) throw ValidationError("repeats must be at least 1");
  return o;
}

MetricReport RunExperiment(const FeatureBank& bank, const std::vector<int>& labels,
                           const ModelSpec& spec, const ExperimentOptions& options,
                           const RunCallback& on_run) {
  if (labels.size() != bank.size()) {
    throw ValidationError("label count does not match the cohort size");
  }
  if (options.repeats < 1) throw ValidationError("repeats must be at least 1");
  std::map<std::string, std::size_t> index;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    index[bank.patients[i].patient_id] = i;
    ids.push_back(bank.patients[i].patient_id);
  }
  auto to_idx = [&index](const std::vector<std::string>& v) {
    std::vector<std::size_t> out;
    for (const auto& id : v) out.push_back(index.at(id));
    return out;
  };
  const ModelFactory factory = [spec] { return MakeModel(spec); };
  // Validates the model spec up front so configuration errors surface before work.
  (void)factory();

  MetricReport report;
  report.spec = spec;
  report.spec.Normalize();
  report.model = report.spec.Label();
  std::vector<double> pooled_p;
  std::vector<int> pooled_y;
  for (int r = 0; r < options.repeats; ++r) {
    const std::uint64_t run_seed = DeriveSeed(options.seed, static_cast<std::uint64_t>(r));
    RunRecord rec;
    rec.run = r;
    rec.split = MakeSplit(ids, run_seed, options.test_fraction, options.folds);
    const auto train = to_idx(rec.split.train_ids);
    const auto test = to_idx(rec.split.test_ids);
    std::vector<std::vector<std::size_t>> folds;
    for (const auto& f : rec.split.folds) folds.push_back(to_idx(f));

    CvOutcome cv = CrossValidatedFit(factory, bank, train, labels, folds, DeriveSeed(run_seed, 1));
    rec.selected_steps = cv.selected_steps;
    rec.curve = cv.final_fit.curve;
    rec.test_ids = rec.split.test_ids;
    for (auto i : test) {
      rec.test_probs.push_back(cv.model->PredictProba(bank, i));
      rec.test_labels.push_back(labels[i]);
    }
    std::vector<std::string> fitted = cv.fitted_ids;
    fitted.insert(fitted.end(), cv.model->fitted_ids().begin(), cv.model->fitted_ids().end());
    rec.leakage_overlaps = Overlap(fitted, rec.test_ids).size();
    CheckNoLeakage(fitted, rec.test_ids);

    rec.metrics = ComputeMetrics(rec.test_probs, rec.test_labels, options.threshold);
    if (options.per_run_ci && rec.test_probs.size() >= 10) {
      rec.ci = BootstrapCi(rec.test_probs, rec.test_labels, options.bootstrap_resamples,
                           options.level, DeriveSeed(run_seed, 2), options.threshold)
                   .ci;
      rec.has_ci = true;
    }
    pooled_p.insert(pooled_p.end(), rec.test_probs.begin(), rec.test_probs.end());
    pooled_y.insert(pooled_y.end(), rec.test_labels.begin(), rec.test_labels.end());
    if (on_run) on_run(rec, *cv.model);
    report.runs.push_back(std::move(rec));
  }

  std::array<double, kMetricCount> sums{};
  std::array<int, kMetricCount> counts{};
  for (const auto& rec : report.runs) {
    const auto v = rec.metrics.Values();
    for (std::size_t k = 0; k < kMetricCount; ++k) {
      if (std::isfinite(v[k])) {
        sums[k] += v[k];
        ++counts[k];
      }
    }
  }
  std::array<double, kMetricCount> mean{};
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    mean[k] = counts[k] ? sums[k] / counts[k] : std::numeric_limits<double>::quiet_NaN();
  }
  report.headline = Metrics::FromValues(mean);
  report.pooled = ComputeMetrics(pooled_p, pooled_y, options.threshold);
  if (pooled_p.size() >= 10) {
    const BootstrapResult boot =
        BootstrapCi(pooled_p, pooled_y, options.bootstrap_resamples, options.level,
                    DeriveSeed(options.seed, 0xB007), options.threshold);
    report.ci = boot.ci;
    report.bootstrap_resamples = boot.resamples;
    report.bootstrap_skipped = boot.skipped;
    report.vms = Vms(report.ci);
  } else {
    Warn("bootstrap skipped: " + std::to_string(pooled_p.size()) +
         " pooled test predictions (need at least 10)");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.ci.fill(Interval{nan, nan});
    report.vms = nan;
  }
  return report;
}

nlohmann::json MetricReport::ToJson() const {
  nlohmann::json runs_json = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json jr = {{"run", r.run},
                         {"metrics", MetricsJson(r.metrics)},
                         {"selected_steps", r.selected_steps},
                         {"test_ids", r.test_ids},
                         {"test_probabilities", r.test_probs},
                         {"test_labels", r.test_labels},
                         {"train_ids", r.split.train_ids},
                         {"leakage_overlaps", r.leakage_overlaps},
                         {"loss_curve", r.curve.train}};
    if (r.has_ci) jr["ci"] = CiJson(r.ci);
    runs_json.push_back(jr);
  }
  return {{"format", "mmfuse-metric-report-v1"},
          {"model", model},
          {"spec", spec.ToJson()},
          {"metrics", MetricsJson(headline)},
          {"pooled_metrics", MetricsJson(pooled)},
          {"ci", CiJson(ci)},
          {"vms", vms},
          {"bootstrap", {{"resamples", bootstrap_resamples}, {"skipped", bootstrap_skipped}}},
          {"runs", runs_json}};
}

MetricReport MetricReport::FromJson(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "mmfuse-metric-report-v1") {
    throw ValidationError("not an mmfuse metric report");
  }
  MetricReport r;
  r.model = j.at("model").get<std::string>();
  r.spec = ModelSpec::FromJson(j.at("spec"));
  r.headline = MetricsFromJson(j.at("metrics"));
  r.pooled = MetricsFromJson(j.at("pooled_metrics"));
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    const auto& c = j.at("ci").at(std::string(kMetricNames[k]));
    r.ci[k] = {NumberOrNan(c.at("lower")), NumberOrNan(c.at("upper"))};
  }
  r.vms = NumberOrNan(j.at("vms"));
  r.bootstrap_resamples = j.at("bootstrap").at("resamples").get<int>();
  r.bootstrap_skipped = j.at("bootstrap").at("skipped").get<int>();
  return r;
}

std::string FormatLossCurvesCsv(const MetricReport& report) {
  std::ostringstream out;
  out << "run,epoch,loss\n";
  for (const auto& r : report.runs) {
    for (std::size_t e = 0; e < r.curve.train.size(); ++e) {
      out << r.run << "," << e + 1 << "," << FormatDouble(r.curve.train[e]) << "\n";
    }
  }
  return out.str();
}

std::string FormatComparisonTable(const std::vector<MetricReport>& reports) {
  static constexpr std::array<const char*, kMetricCount> kHeaders = {
      "AUROC", "Accuracy", "Sensitivity", "Specificity", "Precision", "F1"};
  std::size_t name_width = 5;
  for (const auto& r : reports) name_width = std::max(name_width, r.model.size());
  auto cell = [](double v) {
    if (!std::isfinite(v)) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << v;
    return s.str();
  };
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "Model";
  for (const char* h : kHeaders) out << "  " << std::setw(21) << h;
  out << "  VMS\n";
  for (const auto& r : reports) {
    out << std::setw(static_cast<int>(name_width)) << r.model;
    const auto v = r.headline.Values();
    for (std::size_t k = 0; k < kMetricCount; ++k) {
      const std::string text =
          cell(v[k]) + " (" + cell(r.ci[k].lower) + "-" + cell(r.ci[k].upper) + ")";
      out << "  " << std::setw(21) << text;
    }
    out << "  " << cell(r.vms) << "\n";
  }
  return out.str();
}

}  // namespace mmfuse
