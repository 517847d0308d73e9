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

#include "mmfuse/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mmfuse/common.h"

namespace mmfuse {
namespace {

double Ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

void CheckInputs(const std::vector<double>& probs, const std::vector<int>& labels) {
  if (probs.size() != labels.size()) {
    throw ValidationError("metrics: " + std::to_string(probs.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
  }
  if (probs.empty()) throw ValidationError("metrics: no predictions");
  for (int y : labels) {
    if (y != 0 && y != 1) throw ValidationError("metrics: labels must be 0 or 1");
  }
}

}  // namespace

Confusion ConfusionAt(const std::vector<double>& probs, const std::vector<int>& labels,
                      double threshold) {
  CheckInputs(probs, labels);
  Confusion c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (labels[i]) {
      (pred ? c.tp : c.fn)++;
    } else {
      (pred ? c.fp : c.tn)++;
    }
  }
  return c;
}

double Auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  CheckInputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j+1 share their average.
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) {
        rank_sum += avg;
        ++positives;
      }
    }
    i = j + 1;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw ValidationError("AUROC is undefined: labels contain a single class");
  }
  const double p = static_cast<double>(positives);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

std::array<double, kMetricCount> Metrics::Values() const {
  return {auroc, accuracy, sensitivity, specificity, precision, f1};
}

Metrics Metrics::FromValues(const std::array<double, kMetricCount>& v) {
  Metrics m;
  m.auroc = v[0];
  m.accuracy = v[1];
  m.sensitivity = v[2];
  m.specificity = v[3];
  m.precision = v[4];
  m.f1 = v[5];
  return m;
}

Metrics ComputeMetrics(const std::vector<double>& probs, const std::vector<int>& labels,
                       double threshold) {
  const Confusion c = ConfusionAt(probs, labels, threshold);
  Metrics m;
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp),
               fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
  m.accuracy = (tp + tn) / (tp + fp + fn + tn);
  m.sensitivity = Ratio(tp, tp + fn);
  m.specificity = Ratio(tn, tn + fp);
  m.precision = Ratio(tp, tp + fp);
  m.f1 = Ratio(2.0 * tp, 2.0 * tp + fp + fn);
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
    m.auroc = std::numeric_limits<double>::quiet_NaN();
    m.auroc_error = "AUROC is undefined: labels contain a single class";
  } else {
    m.auroc = Auroc(probs, labels);
  }
  return m;
}

double Percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("percentile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult BootstrapCi(const std::vector<double>& probs, const std::vector<int>& labels,
                            int resamples, double level, std::uint64_t seed, double threshold) {
  CheckInputs(probs, labels);
  const std::size_t n = probs.size();
  if (n < 10) throw ValidationError("bootstrap needs at least 10 predictions");
  if (resamples < 1) throw ValidationError("bootstrap needs at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must be in (0, 1)");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::array<std::vector<double>, kMetricCount> samples;
  BootstrapResult out;
  out.resamples = resamples;
  std::vector<double> p(n);
  std::vector<int> y(n);
  for (int r = 0; r < resamples; ++r) {
    int pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = pick(rng);
      p[i] = probs[k];
      y[i] = labels[k];
      pos += y[i];
    }
    if (pos == 0 || pos == static_cast<int>(n)) {
      ++out.skipped;
      continue;
    }
    const auto v = ComputeMetrics(p, y, threshold).Values();
    for (std::size_t m = 0; m < kMetricCount; ++m) samples[m].push_back(v[m]);
  }
  if (samples[0].empty()) throw RuntimeError("every bootstrap resample held a single class");

  const auto full = ComputeMetrics(probs, labels, threshold).Values();
  const double alpha = (1.0 - level) / 2.0;
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    auto& s = samples[m];
    std::sort(s.begin(), s.end());
    Interval ci{Percentile(s, alpha), Percentile(s, 1.0 - alpha)};
    if (std::isfinite(full[m])) {
      ci.lower = std::min(ci.lower, full[m]);
      ci.upper = std::max(ci.upper, full[m]);
    }
    out.ci[m] = ci;
  }
  return out;
}

double Vms(const std::vector<Interval>& intervals) {
  if (intervals.empty()) return 0.0;
  std::vector<double> widths;
  widths.reserve(intervals.size());
  for (const auto& ci : intervals) widths.push_back(ci.width());
  std::sort(widths.begin(), widths.end());
  double sum = 0.0;
  for (double w : widths) sum += w;
  return sum / static_cast<double>(widths.size());
}

double Vms(const std::array<Interval, kMetricCount>& intervals) {
  return Vms(std::vector<Interval>(intervals.begin(), intervals.end()));
}

}  // namespace mmfuse
