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

#ifndef MMFUSE_METRICS_H_
#define MMFUSE_METRICS_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mmfuse {

inline constexpr std::size_t kMetricCount = 6;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "auroc", "accuracy", "sensitivity", "specificity", "precision", "f1"};

struct Confusion {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

// p >= threshold counts as a positive (desirable) prediction.
Confusion ConfusionAt(const std::vector<double>& probs, const std::vector<int>& labels,
                      double threshold = 0.5);

// Mann-Whitney rank statistic with average ranks for ties. Throws
// ValidationError when labels hold a single class.
double Auroc(const std::vector<double>& scores, const std::vector<int>& labels);

struct Metrics {
  double auroc = 0.0;  // NaN when undefined (single-class labels)
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::string auroc_error;  // set when auroc is undefined

  std::array<double, kMetricCount> Values() const;
  static Metrics FromValues(const std::array<double, kMetricCount>& v);
};

// Six classification metrics. Ratios with a zero denominator are 0. With a
// single class the AUROC is NaN and auroc_error explains why; the other five
// are still computed.
Metrics ComputeMetrics(const std::vector<double>& probs, const std::vector<int>& labels,
                       double threshold = 0.5);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper > lower ? upper - lower : lower - upper; }
};

struct BootstrapResult {
  std::array<Interval, kMetricCount> ci;
  int resamples = 0;  // requested
  int skipped = 0;    // single-class resamples left out
};

// Percentile bootstrap over patients: resamples with replacement (seeded),
// recomputes the six metrics, and takes the (1-level)/2 and 1-(1-level)/2
// percentiles with linear interpolation. Each interval is widened, if needed,
// to contain the full-sample estimate. Throws ValidationError for n < 10.
BootstrapResult BootstrapCi(const std::vector<double>& probs, const std::vector<int>& labels,
                            int resamples = 1000, double level = 0.95, std::uint64_t seed = 0,
                            double threshold = 0.5);

// Variation mean score: mean |upper - lower| over the intervals. Widths are
// summed in sorted order so the result does not depend on metric order.
double Vms(const std::vector<Interval>& intervals);
double Vms(const std::array<Interval, kMetricCount>& intervals);

// Linear-interpolation percentile of sorted data, q in [0, 1].
double Percentile(const std::vector<double>& sorted, double q);

}  // namespace mmfuse

#endif  // MMFUSE_METRICS_H_
