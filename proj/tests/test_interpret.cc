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

#include <cmath>
#include <random>

#include "mmfuse/common.h"
#include "mmfuse/interpret.h"
#include "mmfuse/ops.h"
#include "support.h"

namespace mmfuse {
namespace {

// dst[:, dc] += scale * src[:, sc]
void AddColumn(Matrix& dst, std::size_t dc, const Matrix& src, std::size_t sc, double scale) {
  for (std::size_t r = 0; r < dst.rows; ++r) dst(r, dc) += scale * src(r, sc);
}

Matrix Multiply(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k)
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

// Random matrix shifted towards the identity so it is well conditioned.
Matrix RandomInvertible(std::size_t n, std::mt19937_64& rng) {
  Matrix m = testing::RandomMatrix(n, n, rng);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += 4.0;
  return m;
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TEST(Pearson, AffineInvariantAndBounded) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(30), y(30), y2(30);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = g(rng);
      y[i] = 0.5 * x[i] + g(rng);
      y2[i] = -3.0 * y[i] + 7.0;
    }
    const double r = Pearson(x, y);
    EXPECT_LE(std::fabs(r), 1.0);
    EXPECT_NEAR(Pearson(x, y2), -r, 1e-12);
    EXPECT_NEAR(Pearson(y, x), r, 1e-15);
  }
  EXPECT_NEAR(Pearson({1, 2, 3}, {2, 4, 6}), 1.0, 1e-15);
  EXPECT_THROW(Pearson({1, 2}, {1, 2}), ValidationError);
  EXPECT_THROW(Pearson({1, 1, 1}, {1, 2, 3}), ValidationError);
  EXPECT_THROW(Pearson({1, 2, 3}, {1, 2}), ValidationError);
}

TEST(Cca, IdenticalDatasetsCorrelatePerfectly) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const Matrix x = testing::RandomMatrix(40, 5, rng);
    EXPECT_NEAR(CcaFirst(x, x).r, 1.0, 1e-6);
  }
}

TEST(Cca, InvariantUnderInvertibleLinearMaps) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Matrix x = testing::RandomMatrix(50, 4, rng);
    Matrix y = testing::RandomMatrix(50, 3, rng);
    AddColumn(y, 0, x, 1, 0.8);
    const double r = CcaFirst(x, y).r;
    EXPECT_NEAR(CcaFirst(Multiply(x, RandomInvertible(4, rng)), Multiply(y, RandomInvertible(3, rng))).r,
                r, 1e-9);
    EXPECT_NEAR(CcaFirst(y, x).r, r, 1e-9);
  }
}

TEST(Cca, LoadingsArePearsonWithTheVariate) {
  std::mt19937_64 rng(4);
  const Matrix x = testing::RandomMatrix(60, 5, rng);
  Matrix y = testing::RandomMatrix(60, 4, rng);
  AddColumn(y, 2, x, 0, 1.0);
  AddColumn(y, 2, x, 3, -1.0);
  const CcaResult c = CcaFirst(x, y);
  EXPECT_GT(c.r, 0.5);
  EXPECT_NEAR(Pearson(c.x_variate, c.y_variate), c.r, 1e-9);
  for (std::size_t j = 0; j < x.cols; ++j) {
    EXPECT_NEAR(c.x_loadings[j], testing::OraclePearson(testing::Column(x, j), c.x_variate), 1e-9);
  }
  for (std::size_t j = 0; j < y.cols; ++j) {
    EXPECT_NEAR(c.y_loadings[j], testing::OraclePearson(testing::Column(y, j), c.y_variate), 1e-9);
  }
  std::size_t big = 0;
  for (std::size_t j = 1; j < c.x_weights.size(); ++j) {
    if (std::fabs(c.x_weights[j]) > std::fabs(c.x_weights[big])) big = j;
  }
  EXPECT_GT(c.x_weights[big], 0.0);
}

TEST(Cca, RankDeficientBlockIsRegularized) {
  std::mt19937_64 rng(5);
  Matrix x = testing::RandomMatrix(30, 3, rng);
  for (std::size_t r = 0; r < x.rows; ++r) x(r, 2) = x(r, 0) + x(r, 1);
  const CcaResult c = CcaFirst(x, testing::RandomMatrix(30, 2, rng));
  EXPECT_TRUE(c.regularized);
  EXPECT_TRUE(std::isfinite(c.r));
  EXPECT_THROW(CcaFirst(testing::RandomMatrix(4, 4, rng), testing::RandomMatrix(4, 2, rng)),
               ValidationError);
}

TEST(Pca, ScoresAreUncorrelatedAndOrdered) {
  std::mt19937_64 rng(6);
  Matrix x = testing::RandomMatrix(40, 6, rng);
  AddColumn(x, 1, x, 0, 3.0);
  const Matrix s = PrincipalComponents(x, 3);
  ASSERT_EQ(s.cols, 3u);
  std::vector<std::vector<double>> c;
  for (std::size_t i = 0; i < 3; ++i) c.push_back(testing::Column(s, i));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(Mean(c[i]), 0.0, 1e-10);
    for (std::size_t j = i + 1; j < 3; ++j) EXPECT_NEAR(Dot(c[i], c[j]), 0.0, 1e-8);
  }
  EXPECT_GE(Dot(c[0], c[0]), Dot(c[1], c[1]));
  EXPECT_GE(Dot(c[1], c[1]), Dot(c[2], c[2]));
}

using testing::LinearNetwork;

TEST(IntegratedGradients, RecoversLinearContributionsExactly) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    const std::size_t width = 14;
    LinearNetwork net(width, rng);
    std::vector<double> x(width);
    for (auto& v : x) v = g(rng);
    PatientInputs in;
    in.tabular = nn::Tensor::FromData({1, width}, x);
    const auto rep = IntegratedGradients(net, in, 16, IgTarget::kDesirable);
    ASSERT_EQ(rep.groups.size(), 1u);
    for (std::size_t i = 0; i < width; ++i) {
      EXPECT_NEAR(rep.groups[0].values[i], net.Weight(i) * x[i], 1e-9);
    }
    EXPECT_LT(rep.completeness_gap, 1e-9);
  }
}

TEST(IntegratedGradients, ZeroInputHasZeroAttribution) {
  std::mt19937_64 rng(8);
  LinearNetwork net(5, rng);
  PatientInputs in;
  in.tabular = nn::Tensor::Zeros({1, 5});
  const auto rep = IntegratedGradients(net, in, 8, IgTarget::kDesirable);
  for (double v : rep.groups[0].values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(rep.Total(), 0.0);
  EXPECT_THROW(IntegratedGradients(net, in, 0), ValidationError);
}

TEST(IntegratedGradients, CompletenessForEveryArchitecture) {
  const FeatureDims dims = testing::SmallDims();
  std::mt19937_64 rng(9);
  for (const auto& c : testing::DifferentiableArchitectures()) {
    for (int seed = 0; seed < 3; ++seed) {
      auto model = c.make();
      model->Build(dims, seed);
      const auto inputs = testing::RandomInputs(dims, c.modalities, 1, rng, false);
      for (IgTarget target : {IgTarget::kPredictedClass, IgTarget::kDesirable}) {
        const auto rep = IntegratedGradients(*model->network(), inputs[0], 256, target);
        EXPECT_LE(rep.completeness_gap, 1e-3) << c.name << " seed " << seed;
        if (target == IgTarget::kPredictedClass) {
          EXPECT_GE(rep.f_input, 0.5) << c.name;
        }
        std::size_t groups = 0;
        for (auto m : c.modalities) groups += m == Modality::kAudio ? inputs[0].audio.size() : 1;
        EXPECT_EQ(rep.groups.size(), groups) << c.name;
      }
    }
  }
}

TEST(IntegratedGradients, ReportJsonRoundTrip) {
  std::mt19937_64 rng(10);
  LinearNetwork net(4, rng);
  PatientInputs in;
  in.tabular = nn::Tensor::FromData({1, 4}, {1, -2, 3, 0.5});
  auto rep = IntegratedGradients(net, in, 4);
  rep.model = "m";
  rep.patient_id = "P1";
  const auto back = AttributionReport::FromJson(rep.ToJson());
  EXPECT_EQ(back.ToJson(), rep.ToJson());
  EXPECT_EQ(back.Total(), rep.Total());
}

TEST(Distribution, FiveNumberSummaryPerModality) {
  AttributionReport a, b;
  a.groups.push_back({"tabular", 0, {1, 4}, {1, 2, 3, 4}});
  a.groups.push_back({"audio", 0, {1, 1}, {10}});
  b.groups.push_back({"tabular", 0, {1, 1}, {5}});
  b.groups.push_back({"audio", 1, {1, 1}, {-10}});
  const auto d = AttributionDistribution({a, b});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].group, "tabular");
  EXPECT_EQ(d[0].count, 5u);
  EXPECT_EQ(d[0].min, 1.0);
  EXPECT_EQ(d[0].q1, 2.0);
  EXPECT_EQ(d[0].median, 3.0);
  EXPECT_EQ(d[0].q3, 4.0);
  EXPECT_EQ(d[0].max, 5.0);
  EXPECT_EQ(d[0].mean, 3.0);
  EXPECT_EQ(d[1].group, "audio");
  EXPECT_EQ(d[1].median, 0.0);
  const std::string csv = FormatDistributionCsv({{"m", d}});
  EXPECT_EQ(csv.rfind("model,group,count,min,q1,median,q3,max,mean\n", 0), 0u);
  EXPECT_THROW(AttributionDistribution({}), ValidationError);
}

TEST(Cca, CsvHasOneRowPerVariable) {
  std::mt19937_64 rng(11);
  const Matrix x = testing::RandomMatrix(20, 3, rng);
  const auto c = CcaFirst(x, testing::RandomMatrix(20, 2, rng));
  const std::string csv = FormatCcaCsv("tabular-text", {"a", "b", "c"}, c);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_THROW(FormatCcaCsv("x", {"a"}, c), ValidationError);
}

}  // namespace
}  // namespace mmfuse
