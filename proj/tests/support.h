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

// Independent oracles and helpers shared by the unit suites and the
// acceptance runner. Nothing here calls the code it checks.

#ifndef MMFUSE_TESTS_SUPPORT_H_
#define MMFUSE_TESTS_SUPPORT_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mmfuse/cohort.h"
#include "mmfuse/fusion.h"
#include "mmfuse/metrics.h"
#include "mmfuse/models.h"
#include "mmfuse/networks.h"
#include "mmfuse/tensor.h"

namespace mmfuse::testing {

// Labeler written from the protocol text: a mark on an outcome when the value
// lies on the desirable side of the cohort mean (decided by the sign of the
// summed pairwise differences, so no division), then a desirable label when
// the mark count beats the mean count (compared in integers).
enum class OraclePolarity { kClinical, kAllHigher };
std::vector<int> BruteForceLabels(const std::vector<PatientRecord>& records,
                                  OraclePolarity polarity);

// Confusion by explicit enumeration and AUROC by counting all positive /
// negative pairs (ties count one half).
struct OracleCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};
OracleCounts OracleConfusion(const std::vector<double>& p, const std::vector<int>& y,
                             double threshold = 0.5);
double OracleAuroc(const std::vector<double>& p, const std::vector<int>& y);
// Six metrics in kMetricNames order; auroc is NaN for a single class.
std::array<double, kMetricCount> OracleMetrics(const std::vector<double>& p,
                                               const std::vector<int>& y,
                                               double threshold = 0.5);

// |X_k| of a real sequence by the O(n^2) definition, k = 0..n/2.
std::vector<double> NaiveDftMagnitude(const std::vector<double>& x);

// Central finite differences against the tape. Relative error per checked
// tensor is ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2, 1e-6);
// the worst tensor is reported.
//
// ReLU and max pooling are piecewise linear, so a +-eps probe can straddle a
// kink. A coordinate whose central difference disagrees with the tape is
// re-probed at eps/2: on a smooth stretch the two differences agree to
// O(eps^2) (so a wrong analytic gradient still fails), across a kink they do
// not. Such coordinates are left out of the error and counted in nonsmooth.
struct GradCheck {
  double max_rel = 0.0;
  std::size_t coordinates = 0;
  std::size_t nonsmooth = 0;
  std::string worst;
};
GradCheck CheckGradients(const std::function<nn::Tensor()>& loss,
                         const std::vector<std::pair<std::string, nn::Tensor>>& leaves,
                         double eps = 1e-5);
// Same, for every parameter of a network plus its inputs, with a
// cross-entropy loss over the batch.
GradCheck CheckNetworkGradients(Network& net, std::vector<PatientInputs>& batch,
                                const std::vector<int>& labels, double eps = 1e-5);

// Small random feature dimensions and patient inputs for architecture tests.
FeatureDims SmallDims();
std::vector<PatientInputs> RandomInputs(const FeatureDims& dims, const std::vector<Modality>& mods,
                                        std::size_t patients, std::mt19937_64& rng,
                                        bool requires_grad);

// Every differentiable architecture the fusion module can build.
struct ArchitectureCase {
  std::string name;
  std::function<std::unique_ptr<NetworkModel>()> make;
  std::vector<Modality> modalities;
};
std::vector<ArchitectureCase> DifferentiableArchitectures();

// Pearson correlation by the textbook two-pass formula.
double OraclePearson(const std::vector<double>& x, const std::vector<double>& y);

// Matrix helpers.
Matrix RandomMatrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng);
std::vector<double> Column(const Matrix& m, std::size_t c);

// Per-op and per-layer gradient cases. Each build call draws inputs and
// parameters, lists the leaves to check and returns a closure producing the
// op output from them.
using Leaves = std::vector<std::pair<std::string, nn::Tensor>>;
struct OpCase {
  std::string name;
  std::function<std::function<nn::Tensor()>(std::mt19937_64&, Leaves&)> build;
};
std::vector<OpCase> OpGradientCases();
// Names parameterized tests after the case.
inline void PrintTo(const OpCase& c, std::ostream* os) { *os << c.name; }
// Checks one case; the output is reduced to a scalar with fixed random weights
// so every element contributes.
GradCheck CheckOpCase(const OpCase& c, std::uint64_t seed, double eps = 1e-5);

// Model with scripted per-patient probabilities, for late-fusion scenarios.
class FixedModel : public Model {
 public:
  explicit FixedModel(std::vector<double> p) : Model(ModelSpec{}), p_(std::move(p)) {}
  FitResult Fit(const FeatureBank&, const std::vector<std::size_t>&, const std::vector<int>&,
                const FitOptions&) override {
    return {};
  }
  double PredictProba(const FeatureBank&, std::size_t i) const override { return p_.at(i); }
  int default_steps() const override { return 0; }
  void Save(const std::string&) const override {}
  void Load(const std::string&) override {}

 private:
  std::vector<double> p_;
};

// Two-logit linear map of the tabular vector with no softmax, so integrated
// gradients of logit 1 are exactly w_1i * x_i.
class LinearNetwork : public Network {
 public:
  LinearNetwork(std::size_t width, std::mt19937_64& rng);
  nn::Tensor Forward(const std::vector<const PatientInputs*>& batch) const override;
  std::vector<nn::Parameter*> Parameters() override { return {}; }
  nlohmann::json Describe() const override { return "linear"; }
  double Weight(std::size_t i) const;

 private:
  nn::Tensor w_, b_;
};

}  // namespace mmfuse::testing

#endif  // MMFUSE_TESTS_SUPPORT_H_
