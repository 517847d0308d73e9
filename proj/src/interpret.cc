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

#include "mmfuse/interpret.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mmfuse/cohort_io.h"
#include "mmfuse/log.h"
#include "mmfuse/metrics.h"
#include "mmfuse/ops.h"

namespace mmfuse {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd ToEigen(const Matrix& m) {
  MatrixXd out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(r, c);
  return out;
}

// Centres and scales columns to unit sample variance; constant columns become
// zero.
MatrixXd Standardize(const MatrixXd& x, std::vector<bool>* constant) {
  const double n = static_cast<double>(x.rows());
  MatrixXd out = x;
  constant->assign(x.cols(), false);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    out.col(c).array() -= mean;
    const double sd = std::sqrt(out.col(c).squaredNorm() / (n - 1.0));
    if (sd > 0.0 && std::isfinite(sd)) {
      out.col(c) /= sd;
    } else {
      out.col(c).setZero();
      (*constant)[c] = true;
    }
  }
  return out;
}

// C^{-1/2}, adding ridge * I first when C is rank deficient.
MatrixXd InverseSqrt(MatrixXd c, double ridge, const char* block, bool* regularized) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(c);
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (!(min_ev > 1e-10 * std::max(1.0, max_ev))) {
    Warn(std::string("cca: ") + block + " covariance is rank deficient; adding ridge " +
         FormatDouble(ridge));
    c.diagonal().array() += ridge;
    eig.compute(c);
    *regularized = true;
  }
  VectorXd inv = eig.eigenvalues().array().max(1e-300).rsqrt();
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<double> ToStd(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> Column(const Matrix& m, std::size_t c) {
  std::vector<double> out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) out[r] = m(r, c);
  return out;
}

std::vector<double> Loadings(const Matrix& m, const std::vector<bool>& constant,
                             const std::vector<double>& variate) {
  std::vector<double> out(m.cols, 0.0);
  for (std::size_t c = 0; c < m.cols; ++c) {
    if (!constant[c]) out[c] = Pearson(Column(m, c), variate);
  }
  return out;
}

}  // namespace

double Pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("pearson: vectors differ in length");
  if (x.size() < 3) throw ValidationError("pearson: need at least 3 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw ValidationError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CcaResult CcaFirst(const Matrix& x, const Matrix& y, double ridge) {
  if (x.rows != y.rows) throw ValidationError("cca: datasets differ in sample count");
  const std::size_t n = x.rows;
  if (x.cols == 0 || y.cols == 0) throw ValidationError("cca: empty dataset");
  if (n <= std::max(x.cols, y.cols)) {
    throw ValidationError("cca: need more samples (" + std::to_string(n) +
                          ") than variables (" + std::to_string(std::max(x.cols, y.cols)) + ")");
  }
  std::vector<bool> x_const, y_const;
  const MatrixXd xs = Standardize(ToEigen(x), &x_const);
  const MatrixXd ys = Standardize(ToEigen(y), &y_const);
  const double denom = static_cast<double>(n) - 1.0;
  const MatrixXd cxx = xs.transpose() * xs / denom;
  const MatrixXd cyy = ys.transpose() * ys / denom;
  const MatrixXd cxy = xs.transpose() * ys / denom;

  CcaResult out;
  const MatrixXd wx = InverseSqrt(cxx, ridge, "first", &out.regularized);
  const MatrixXd wy = InverseSqrt(cyy, ridge, "second", &out.regularized);
  const MatrixXd m = wx * cxy * wy;
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  VectorXd a = wx * svd.matrixU().col(0);
  VectorXd b = wy * svd.matrixV().col(0);
  Eigen::Index imax = 0;
  a.cwiseAbs().maxCoeff(&imax);
  if (a(imax) < 0) {
    a = -a;
    b = -b;
  }
  out.r = std::clamp(svd.singularValues()(0), -1.0, 1.0);
  out.x_weights = ToStd(a);
  out.y_weights = ToStd(b);
  out.x_variate = ToStd(xs * a);
  out.y_variate = ToStd(ys * b);
  out.x_loadings = Loadings(x, x_const, out.x_variate);
  out.y_loadings = Loadings(y, y_const, out.y_variate);
  return out;
}

Matrix PrincipalComponents(const Matrix& x, std::size_t k) {
  if (x.rows == 0 || x.cols == 0) throw ValidationError("pca: empty matrix");
  MatrixXd m = ToEigen(x);
  m.rowwise() -= m.colwise().mean();
  Eigen::BDCSVD<MatrixXd> svd(m, Eigen::ComputeThinU);
  k = std::min<std::size_t>(k, static_cast<std::size_t>(svd.singularValues().size()));
  Matrix out(x.rows, k);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < k; ++c) out(r, c) = svd.matrixU()(r, c) * svd.singularValues()(c);
  return out;
}

// ---------------------------------------------------------------------------
// Integrated gradients

double AttributionReport::Total() const {
  double s = 0.0;
  for (const auto& g : groups)
    for (double v : g.values) s += v;
  return s;
}

nlohmann::json AttributionReport::ToJson() const {
  nlohmann::json gs = nlohmann::json::array();
  for (const auto& g : groups) {
    gs.push_back({{"modality", g.modality}, {"part", g.part}, {"shape", g.shape},
                  {"attributions", g.values}});
  }
  return {{"model", model},
          {"patient_id", patient_id},
          {"baseline", baseline},
          {"steps", steps},
          {"target_class", target_class},
          {"f_input", f_input},
          {"f_baseline", f_baseline},
          {"completeness_gap", completeness_gap},
          {"groups", gs}};
}

AttributionReport AttributionReport::FromJson(const nlohmann::json& j) {
  AttributionReport r;
  r.model = j.at("model").get<std::string>();
  r.patient_id = j.at("patient_id").get<std::string>();
  r.baseline = j.value("baseline", r.baseline);
  r.steps = j.at("steps").get<int>();
  r.target_class = j.at("target_class").get<int>();
  r.f_input = j.at("f_input").get<double>();
  r.f_baseline = j.at("f_baseline").get<double>();
  r.completeness_gap = j.at("completeness_gap").get<double>();
  for (const auto& g : j.at("groups")) {
    r.groups.push_back({g.at("modality").get<std::string>(), g.at("part").get<std::size_t>(),
                        g.at("shape").get<nn::Shape>(),
                        g.at("attributions").get<std::vector<double>>()});
  }
  return r;
}

namespace {

struct InputSlot {
  std::string modality;
  std::size_t part = 0;
  nn::Shape shape;
  std::vector<double> values;
};

std::vector<InputSlot> Slots(const PatientInputs& in) {
  std::vector<InputSlot> slots;
  auto add = [&slots](const char* name, std::size_t part, const nn::Tensor& t) {
    slots.push_back({name, part, t.shape(), {t.data().begin(), t.data().end()}});
  };
  if (in.tabular.defined()) add("tabular", 0, in.tabular);
  if (in.text.defined()) add("text", 0, in.text);
  for (std::size_t u = 0; u < in.audio.size(); ++u) add("audio", u, in.audio[u]);
  return slots;
}

// Inputs scaled by alpha, as fresh leaves that collect gradients.
PatientInputs Scaled(const std::vector<InputSlot>& slots, double alpha,
                     std::vector<nn::Tensor>* leaves) {
  PatientInputs in;
  leaves->clear();
  for (const auto& s : slots) {
    std::vector<double> v(s.values.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = alpha * s.values[i];
    nn::Tensor t = nn::Tensor::FromData(s.shape, std::move(v), true);
    leaves->push_back(t);
    if (s.modality == "tabular") {
      in.tabular = t;
    } else if (s.modality == "text") {
      in.text = t;
    } else {
      in.audio.push_back(t);
    }
  }
  return in;
}

}  // namespace

AttributionReport IntegratedGradients(const Network& net, const PatientInputs& input, int steps,
                                      IgTarget target) {
  if (steps < 1) throw ValidationError("integrated gradients needs at least one step");
  const auto slots = Slots(input);
  if (slots.empty()) throw ValidationError("integrated gradients: no inputs");
  std::vector<nn::Tensor> leaves;

  AttributionReport rep;
  rep.steps = steps;
  {
    const PatientInputs x = Scaled(slots, 1.0, &leaves);
    const nn::Tensor probs = net.Forward({&x});
    rep.target_class =
        target == IgTarget::kDesirable ? 1 : (probs.data()[1] >= 0.5 ? 1 : 0);
    rep.f_input = probs.data()[rep.target_class];
    const PatientInputs base = Scaled(slots, 0.0, &leaves);
    rep.f_baseline = net.Forward({&base}).data()[rep.target_class];
  }

  std::vector<std::vector<double>> sums(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) sums[s].assign(slots[s].values.size(), 0.0);
  for (int k = 0; k < steps; ++k) {
    const double alpha = (k + 0.5) / steps;
    const PatientInputs x = Scaled(slots, alpha, &leaves);
    nn::Tensor out = nn::Pick(net.Forward({&x}), static_cast<std::size_t>(rep.target_class));
    nn::Backward(out);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto g = leaves[s].grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i])) {
          throw RuntimeError("integrated gradients: non-finite gradient at alpha " +
                             FormatDouble(alpha));
        }
        sums[s][i] += g[i];
      }
    }
  }
  for (std::size_t s = 0; s < slots.size(); ++s) {
    ModalityAttribution a{slots[s].modality, slots[s].part, slots[s].shape, {}};
    a.values.resize(slots[s].values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      a.values[i] = slots[s].values[i] * sums[s][i] / steps;
    }
    rep.groups.push_back(std::move(a));
  }
  rep.completeness_gap = std::abs(rep.Total() - (rep.f_input - rep.f_baseline));
  return rep;
}

std::vector<AttributionReport> AttributeModel(const Model& model, const FeatureBank& bank,
                                              std::size_t patient, int steps, IgTarget target) {
  std::vector<AttributionReport> out;
  if (const Network* net = model.network()) {
    AttributionReport rep = IntegratedGradients(*net, model.Inputs(bank, patient), steps, target);
    rep.model = model.spec().Label();
    rep.patient_id = bank.patients.at(patient).patient_id;
    out.push_back(std::move(rep));
    return out;
  }
  for (const Model* m : model.members()) {
    if (!m) continue;
    auto sub = AttributeModel(*m, bank, patient, steps, target);
    out.insert(out.end(), std::make_move_iterator(sub.begin()), std::make_move_iterator(sub.end()));
  }
  return out;
}

std::vector<DistributionSummary> AttributionDistribution(
    const std::vector<AttributionReport>& reports) {
  if (reports.empty()) throw ValidationError("attribution distribution needs a report");
  std::map<std::string, std::vector<double>> pooled;
  std::vector<std::string> order;
  for (const auto& r : reports) {
    for (const auto& g : r.groups) {
      if (!pooled.count(g.modality)) order.push_back(g.modality);
      auto& v = pooled[g.modality];
      v.insert(v.end(), g.values.begin(), g.values.end());
    }
  }
  std::vector<DistributionSummary> out;
  for (const auto& name : order) {
    auto v = pooled[name];
    std::sort(v.begin(), v.end());
    DistributionSummary s;
    s.group = name;
    s.count = v.size();
    if (!v.empty()) {
      s.min = v.front();
      s.max = v.back();
      s.q1 = Percentile(v, 0.25);
      s.median = Percentile(v, 0.5);
      s.q3 = Percentile(v, 0.75);
      double sum = 0.0;
      for (double e : v) sum += e;
      s.mean = sum / static_cast<double>(v.size());
    }
    out.push_back(s);
  }
  return out;
}

std::string FormatDistributionCsv(
    const std::vector<std::pair<std::string, std::vector<DistributionSummary>>>& labelled) {
  std::ostringstream out;
  out << "model,group,count,min,q1,median,q3,max,mean\n";
  for (const auto& [label, summaries] : labelled) {
    for (const auto& s : summaries) {
      out << label << "," << s.group << "," << s.count << "," << FormatDouble(s.min) << ","
          << FormatDouble(s.q1) << "," << FormatDouble(s.median) << "," << FormatDouble(s.q3)
          << "," << FormatDouble(s.max) << "," << FormatDouble(s.mean) << "\n";
    }
  }
  return out.str();
}

std::string FormatCcaCsv(const std::string& pairing, const std::vector<std::string>& names,
                         const CcaResult& cca) {
  if (names.size() != cca.x_weights.size()) {
    throw ValidationError("cca table: variable names do not match the weights");
  }
  std::ostringstream out;
  out << "pairing,variable,weight,loading\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << pairing << "," << names[i] << "," << FormatDouble(cca.x_weights[i]) << ","
        << FormatDouble(cca.x_loadings[i]) << "\n";
  }
  return out.str();
}

}  // namespace mmfuse
