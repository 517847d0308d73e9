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

#include "support.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "mmfuse/ops.h"

namespace mmfuse::testing {

std::vector<int> BruteForceLabels(const std::vector<PatientRecord>& records,
                                  OraclePolarity polarity) {
  const std::size_t n = records.size();
  // Outcome columns read by field name; true = a higher value is desirable.
  std::vector<std::pair<double OutcomeSet::*, bool>> columns = {
      {&OutcomeSet::vas_diff, false},        {&OutcomeSet::eq5d_diff, true},
      {&OutcomeSet::odi_diff, false},        {&OutcomeSet::surgery_minutes, false},
      {&OutcomeSet::blood_loss_ml, false},   {&OutcomeSet::analgesic_types, false},
      {&OutcomeSet::admission_days, false},  {&OutcomeSet::complications, false}};
  std::vector<long> marks(n, 0);
  for (const auto& [field, higher] : columns) {
    const bool want_higher = polarity == OraclePolarity::kAllHigher ? true : higher;
    for (std::size_t i = 0; i < n; ++i) {
      // sum_j (v_i - v_j) > 0  <=>  v_i above the column mean.
      double above = 0.0;
      for (std::size_t j = 0; j < n; ++j) above += (*records[i].outcomes).*field - (*records[j].outcomes).*field;
      const bool mark = want_higher ? above > 0.0 : above < 0.0;
      marks[i] += mark ? 1 : 0;
    }
  }
  long total = 0;
  for (long m : marks) total += m;
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = marks[i] * static_cast<long>(n) > total ? 1 : 0;
  return out;
}

OracleCounts OracleConfusion(const std::vector<double>& p, const std::vector<int>& y,
                             double threshold) {
  OracleCounts c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pos = !(p[i] < threshold);
    if (y[i] == 1 && pos) ++c.tp;
    if (y[i] == 1 && !pos) ++c.fn;
    if (y[i] == 0 && pos) ++c.fp;
    if (y[i] == 0 && !pos) ++c.tn;
  }
  return c;
}

double OracleAuroc(const std::vector<double>& p, const std::vector<int>& y) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      if (p[i] > p[j]) wins += 1.0;
      if (p[i] == p[j]) wins += 0.5;
    }
  }
  if (pairs == 0) return std::numeric_limits<double>::quiet_NaN();
  return wins / static_cast<double>(pairs);
}

std::array<double, kMetricCount> OracleMetrics(const std::vector<double>& p,
                                               const std::vector<int>& y, double threshold) {
  const OracleCounts c = OracleConfusion(p, y, threshold);
  auto ratio = [](double a, double b) { return b == 0.0 ? 0.0 : a / b; };
  const double tp = c.tp, fp = c.fp, fn = c.fn, tn = c.tn;
  const double sens = ratio(tp, tp + fn);
  const double prec = ratio(tp, tp + fp);
  return {OracleAuroc(p, y),
          ratio(tp + tn, tp + tn + fp + fn),
          sens,
          ratio(tn, tn + fp),
          prec,
          ratio(2.0 * tp, 2.0 * tp + fp + fn)};
}

std::vector<double> NaiveDftMagnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      re += x[t] * std::cos(a);
      im += x[t] * std::sin(a);
    }
    out[k] = std::hypot(re, im);
  }
  return out;
}

GradCheck CheckGradients(const std::function<nn::Tensor()>& loss,
                         const std::vector<std::pair<std::string, nn::Tensor>>& leaves,
                         double eps) {
  for (const auto& [name, t] : leaves) {
    auto tensor = t;
    tensor.ZeroGrad();
  }
  nn::Backward(loss());
  GradCheck result;
  for (const auto& [name, t] : leaves) {
    nn::Tensor tensor = t;
    const std::vector<double> analytic = tensor.grad();
    auto values = tensor.mutable_data();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + eps;
      const double up = loss().item();
      values[i] = orig - eps;
      const double down = loss().item();
      values[i] = orig;
      double numeric = (up - down) / (2.0 * eps);
      const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      if (std::abs(analytic[i] - numeric) > 1e-6 * scale) {
        values[i] = orig + eps / 2;
        const double up_half = loss().item();
        values[i] = orig - eps / 2;
        const double down_half = loss().item();
        values[i] = orig;
        const double numeric_half = (up_half - down_half) / eps;
        if (std::abs(numeric - numeric_half) > 1e-6 * scale) {
          ++result.nonsmooth;
          continue;
        }
      }
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
    }
    result.coordinates += values.size();
    const double rel = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-6});
    if (rel >= result.max_rel) {
      result.max_rel = rel;
      result.worst = name;
    }
  }
  return result;
}

GradCheck CheckNetworkGradients(Network& net, std::vector<PatientInputs>& batch,
                                const std::vector<int>& labels, double eps) {
  std::vector<std::pair<std::string, nn::Tensor>> leaves;
  for (nn::Parameter* p : net.Parameters()) leaves.emplace_back(p->name, p->value);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::string tag = "input" + std::to_string(b) + ".";
    if (batch[b].tabular.defined()) leaves.emplace_back(tag + "tabular", batch[b].tabular);
    if (batch[b].text.defined()) leaves.emplace_back(tag + "text", batch[b].text);
    for (std::size_t u = 0; u < batch[b].audio.size(); ++u) {
      leaves.emplace_back(tag + "audio" + std::to_string(u), batch[b].audio[u]);
    }
  }
  std::vector<const PatientInputs*> ptrs;
  for (const auto& p : batch) ptrs.push_back(&p);
  auto loss = [&]() { return nn::CrossEntropy(net.Forward(ptrs), labels); };
  return CheckGradients(loss, leaves, eps);
}

FeatureDims SmallDims() {
  FeatureDims d;
  d.tabular_width = 14;
  d.text_dim = 6;
  d.audio_bins = 5;
  d.max_frames = 8;
  return d;
}

std::vector<PatientInputs> RandomInputs(const FeatureDims& dims, const std::vector<Modality>& mods,
                                        std::size_t patients, std::mt19937_64& rng,
                                        bool requires_grad) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> tokens(2, 5), clips(1, 3), frames(3, dims.max_frames + 2);
  auto fill = [&](std::size_t n, double zero_fraction) {
    std::vector<double> v(n);
    std::bernoulli_distribution zero(zero_fraction);
    for (double& e : v) e = zero(rng) ? 0.0 : u(rng);
    return v;
  };
  std::vector<PatientInputs> out(patients);
  for (std::size_t p = 0; p < patients; ++p) {
    for (Modality m : mods) {
      if (m == Modality::kTabular) {
        out[p].tabular = nn::Tensor::FromData({1, dims.tabular_width}, fill(dims.tabular_width, 0.0),
                                              requires_grad);
      } else if (m == Modality::kText) {
        const std::size_t t = tokens(rng);
        // Alternate dense and mostly-zero rows so both projection paths run.
        // The first token stays dense: an all-zero column would make pooled
        // features tie exactly, a true kink of max pooling.
        const double zeros = p % 2 ? 0.8 : 0.0;
        std::vector<double> v = fill(dims.text_dim, 0.0);
        const auto rest = fill((t - 1) * dims.text_dim, zeros);
        v.insert(v.end(), rest.begin(), rest.end());
        out[p].text = nn::Tensor::FromData({t, dims.text_dim}, std::move(v), requires_grad);
      } else {
        const std::size_t c = clips(rng);
        for (std::size_t k = 0; k < c; ++k) {
          const std::size_t f = frames(rng);
          out[p].audio.push_back(nn::Tensor::FromData({f, dims.audio_bins},
                                                      fill(f * dims.audio_bins, 0.0), requires_grad));
        }
      }
    }
  }
  return out;
}

std::vector<ArchitectureCase> DifferentiableArchitectures() {
  using M = Modality;
  const TrainConfig cfg;
  std::vector<ArchitectureCase> out;
  for (M m : {M::kTabular, M::kText, M::kAudio}) {
    out.push_back({"unimodal[" + std::string(ModalityName(m)) + "]",
                   [m, cfg] { return std::unique_ptr<NetworkModel>(BuildUnimodal(m, cfg)); },
                   {m}});
  }
  const std::vector<std::vector<M>> combos = {
      {M::kTabular, M::kText}, {M::kTabular, M::kAudio}, {M::kText, M::kAudio},
      {M::kTabular, M::kText, M::kAudio}};
  for (const auto& c : combos) {
    std::string tag;
    for (M m : c) tag += (tag.empty() ? "" : "+") + std::string(ModalityName(m));
    out.push_back({"ef[" + tag + "]", [c, cfg] { return std::make_unique<EarlyFusionModel>(c, cfg); }, c});
    out.push_back({"jf[" + tag + "]", [c, cfg] { return std::make_unique<JointFusionModel>(c, cfg); }, c});
  }
  return out;
}

double OraclePearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

Matrix RandomMatrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data) v = g(rng);
  return m;
}

std::vector<double> Column(const Matrix& m, std::size_t c) {
  std::vector<double> out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) out[r] = m(r, c);
  return out;
}

}  // namespace mmfuse::testing
