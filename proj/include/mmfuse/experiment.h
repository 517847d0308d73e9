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

#ifndef MMFUSE_EXPERIMENT_H_
#define MMFUSE_EXPERIMENT_H_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmfuse/fusion.h"
#include "mmfuse/metrics.h"

namespace mmfuse {

// Patient-level partition. Folds partition the training ids and rotate as
// validation sets.
struct SplitPlan {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<std::vector<std::string>> folds;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
};

// Seeded shuffle, round(test_fraction * n) test patients, remaining patients
// dealt round-robin into folds. Throws ValidationError for fewer than 10
// patients or duplicate ids.
SplitPlan MakeSplit(const std::vector<std::string>& patient_ids, std::uint64_t seed,
                    double test_fraction = 0.2, int folds = 5);

// Ids present in both lists, sorted.
std::vector<std::string> Overlap(const std::vector<std::string>& a,
                                 const std::vector<std::string>& b);

// Throws RuntimeError naming the overlapping ids when any patient that entered
// fitting is also scored.
void CheckNoLeakage(const std::vector<std::string>& fitted_ids,
                    const std::vector<std::string>& scored_ids);

struct ExperimentOptions {
  int repeats = 10;
  int folds = 5;
  double test_fraction = 0.2;
  int bootstrap_resamples = 1000;
  double level = 0.95;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  bool per_run_ci = false;

  nlohmann::json ToJson() const;
  static ExperimentOptions FromJson(const nlohmann::json& j);
};

struct RunRecord {
  int run = 0;
  SplitPlan split;
  Metrics metrics;
  int selected_steps = 0;
  LossCurve curve;
  std::vector<std::string> test_ids;
  std::vector<double> test_probs;
  std::vector<int> test_labels;
  std::size_t leakage_overlaps = 0;
  bool has_ci = false;
  std::array<Interval, kMetricCount> ci{};
};

struct MetricReport {
  std::string model;       // spec label
  ModelSpec spec;
  Metrics headline;        // arithmetic mean of the per-run rows
  Metrics pooled;          // metrics of the pooled test predictions
  std::array<Interval, kMetricCount> ci{};  // bootstrap over pooled predictions
  double vms = 0.0;
  int bootstrap_resamples = 0;
  int bootstrap_skipped = 0;
  std::vector<RunRecord> runs;

  nlohmann::json ToJson() const;
  // Restores the summary fields (model, spec, metrics, intervals, VMS);
  // per-run records are not read back.
  static MetricReport FromJson(const nlohmann::json& j);
};

// Called after each run with the trained model (for checkpoints).
using RunCallback = std::function<void(const RunRecord&, const Model&)>;

// Repeated protocol: fresh split per repeat, k-fold selection of the step
// budget, refit on all training patients, scoring of the held-out patients
// only. Every run asserts that no scored patient entered fitting. Labels are
// indexed by bank position.
MetricReport RunExperiment(const FeatureBank& bank, const std::vector<int>& labels,
                           const ModelSpec& spec, const ExperimentOptions& options,
                           const RunCallback& on_run = {});

// run,epoch,loss
std::string FormatLossCurvesCsv(const MetricReport& report);

// Fixed-width table: one row per report, each metric as "point (lower-upper)",
// plus VMS.
std::string FormatComparisonTable(const std::vector<MetricReport>& reports);

}  // namespace mmfuse

#endif  // MMFUSE_EXPERIMENT_H_
