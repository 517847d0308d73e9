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
#include <filesystem>
#include <random>

#include "mmfuse/checkpoint.h"
#include "mmfuse/common.h"
#include "mmfuse/layers.h"
#include "mmfuse/ops.h"
#include "mmfuse/optimizer.h"
#include "support.h"

namespace mmfuse {
namespace {

using nn::Tensor;

constexpr int kSeeds = 20;
constexpr double kTolerance = 1e-4;

Tensor Random(nn::Shape shape, std::mt19937_64& rng, bool grad = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(nn::NumElements(shape));
  for (double& e : v) e = u(rng);
  return Tensor::FromData(std::move(shape), std::move(v), grad);
}

class OpGradient : public ::testing::TestWithParam<testing::OpCase> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto r = testing::CheckOpCase(GetParam(), seed);
    EXPECT_LE(r.max_rel, kTolerance) << "seed " << seed << " worst " << r.worst;
    EXPECT_LE(r.nonsmooth * 100, r.coordinates) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(EveryOpAndLayer, OpGradient, ::testing::ValuesIn(testing::OpGradientCases()),
                         [](const auto& info) { return info.param.name; });

TEST(GradientCheck, EveryFusionArchitecture) {
  const FeatureDims dims = testing::SmallDims();
  for (const auto& arch : testing::DifferentiableArchitectures()) {
    for (int seed = 0; seed < kSeeds; ++seed) {
      auto model = arch.make();
      model->Build(dims, 77 + seed);
      std::mt19937_64 rng(500 + seed);
      auto batch = testing::RandomInputs(dims, arch.modalities, 3, rng, true);
      const auto r = testing::CheckNetworkGradients(*model->mutable_network(), batch, {1, 0, 1});
      EXPECT_LE(r.max_rel, kTolerance) << arch.name << " seed " << seed << " worst " << r.worst;
      EXPECT_LE(r.nonsmooth * 100, r.coordinates) << arch.name << " seed " << seed;
    }
  }
}

TEST(Autograd, BackwardAccumulatesThroughSharedNodes) {
  Tensor x = Tensor::FromData({1, 2}, {2.0, 3.0}, true);
  Tensor y = nn::Sum(nn::ConcatCols({x, x}));
  nn::Backward(y);
  EXPECT_EQ(x.grad(), (std::vector<double>{2.0, 2.0}));
}

TEST(Autograd, BackwardRejectsLeafLoss) {
  Tensor x = Tensor::Scalar(1.0, true);
  EXPECT_THROW(nn::Backward(x), RuntimeError);
}

TEST(Ops, ShapeErrorsNameShapes) {
  Tensor x = Tensor::Zeros({2, 3}), w = Tensor::Zeros({4, 5}), b = Tensor::Zeros({4});
  try {
    nn::Linear(x, w, b);
    FAIL() << "expected a shape error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("[4,5]"), std::string::npos) << e.what();
  }
}

TEST(Ops, LstmSparsePathMatchesDense) {
  std::mt19937_64 rng(3);
  Tensor x = Random({6, 10}, rng, false);
  auto v = x.mutable_data();
  for (std::size_t i = 0; i < v.size(); ++i) if (i % 7) v[i] = 0.0;
  Tensor wih = Random({8, 10}, rng, false), whh = Random({8, 2}, rng, false), b = Random({8}, rng, false);
  // Same values with one tiny nonzero per row push the input over the
  // sparsity cutoff into the dense path.
  std::vector<double> dense_values(v.begin(), v.end());
  Tensor sparse_out = nn::Lstm(x, wih, whh, b);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t c = 0; c < 10; ++c)
      if (dense_values[t * 10 + c] == 0.0 && c % 2) dense_values[t * 10 + c] = 1e-300;
  Tensor dense_out = nn::Lstm(Tensor::FromData({6, 10}, dense_values), wih, whh, b);
  for (std::size_t i = 0; i < sparse_out.size(); ++i) {
    EXPECT_NEAR(sparse_out.data()[i], dense_out.data()[i], 1e-12);
  }
}

TEST(Layers, ConvBlockHyperparameters) {
  std::mt19937_64 rng(1);
  nn::ConvBlock block("b", 1, 8, rng);
  EXPECT_EQ(block.conv().kernel(), 3u);
  EXPECT_EQ(block.conv().stride(), 2u);
  EXPECT_EQ(block.pool_width(), 3u);
  EXPECT_EQ(block.OutputLength(14), 2u);  // (14-3)/2+1 = 6, then 6/3 = 2
  const Tensor y = block.Forward(Tensor::Zeros({1, 1, 14}));
  EXPECT_EQ(y.shape(), (nn::Shape{1, 8, 2}));
}

TEST(Optimizer, SgdStepMatchesHandComputation) {
  nn::Parameter p{"w", Tensor::FromData({2}, {1.0, -2.0}, true), true};
  nn::OptimizerConfig cfg;
  cfg.kind = nn::OptimizerKind::kSgd;
  cfg.lr = 0.1;
  cfg.l2 = 0.5;
  nn::Optimizer opt({&p}, cfg);
  nn::Backward(nn::WeightedSum(p.value, {3.0, 4.0}));
  opt.Step();
  // w - lr * (g + 2 * l2 * w)
  EXPECT_DOUBLE_EQ(p.value.data()[0], 1.0 - 0.1 * (3.0 + 1.0));
  EXPECT_DOUBLE_EQ(p.value.data()[1], -2.0 - 0.1 * (4.0 - 2.0));
}

TEST(Optimizer, AdamFirstStepIsLrTimesSign) {
  nn::Parameter p{"w", Tensor::FromData({3}, {0.5, 0.5, 0.5}, true), false};
  nn::OptimizerConfig cfg;
  cfg.lr = 0.01;
  nn::Optimizer opt({&p}, cfg);
  nn::Backward(nn::WeightedSum(p.value, {2.0, -3.0, 1e-3}));
  opt.Step();
  EXPECT_NEAR(p.value.data()[0], 0.49, 1e-8);
  EXPECT_NEAR(p.value.data()[1], 0.51, 1e-8);
  EXPECT_NEAR(p.value.data()[2], 0.49, 1e-5);
}

TEST(Optimizer, NonFiniteGradientNamesParameter) {
  nn::Parameter p{"culprit", Tensor::FromData({1}, {1.0}, true), true};
  nn::Optimizer opt({&p}, {});
  nn::Backward(nn::WeightedSum(p.value, {std::nan("")}));
  try {
    opt.Step();
    FAIL();
  } catch (const RuntimeError& e) {
    EXPECT_NE(std::string(e.what()).find("culprit"), std::string::npos);
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::mt19937_64 rng(9);
  nn::FcLayer a("fc", 3, 2, rng), b("fc", 3, 2, rng);
  const auto path = (std::filesystem::temp_directory_path() / "mmfuse_ckpt_test.bin").string();
  nn::SaveCheckpoint(path, a.Parameters(), {{"note", "x"}});
  const auto sidecar = nn::LoadCheckpoint(path, b.Parameters());
  EXPECT_EQ(sidecar.at("note"), "x");
  for (std::size_t k = 0; k < 2; ++k) {
    const auto pa = a.Parameters()[k]->value.data(), pb = b.Parameters()[k]->value.data();
    EXPECT_TRUE(std::equal(pa.begin(), pa.end(), pb.begin()));
  }
  nn::FcLayer wrong("fc", 4, 2, rng);
  EXPECT_THROW(nn::LoadCheckpoint(path, wrong.Parameters()), ValidationError);
}

}  // namespace
}  // namespace mmfuse
