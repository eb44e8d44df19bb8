// Copyright 2026 The FedPF Simulator Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedpf/model.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fedpf/random.h"

namespace fedpf {
namespace {

Layout Small(int d, int hidden, int second = 200) {
  Layout l;
  l.input_dim = d;
  l.hidden = hidden;
  l.second = second;
  return l;
}

TEST(LayoutTest, OffsetsTileTheVector) {
  const Layout l = Small(12, 64);
  EXPECT_EQ(l.size(), 12 * 64 + 64 + 64 * 200 + 200 + 200 * 2 + 2);
  EXPECT_EQ(l.b3_offset() + l.outputs, l.size());
}

TEST(ForwardTest, ZeroNetworkTiesToClassZero) {
  Params p(Small(3, 4));
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;
  auto out = Forward(p, x);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out->logits[0], 0.0);
  EXPECT_EQ(out->logits[1], 0.0);
  EXPECT_EQ(out->prob, 0.5);
  EXPECT_EQ(out->prediction, 0);
}

// 1-1-200-2 network: w1 = 2, b1 = -1, w2 = 1, b2_k = 0.01 k,
// w3 = (0.001, -0.002) rows, b3 = (0.1, -0.2).
Params HandNet() {
  Params p(Small(1, 1));
  p.w1()(0, 0) = 2.0;
  p.b1()[0] = -1.0;
  p.w2().setOnes();
  for (int k = 0; k < 200; ++k) p.b2()[k] = 0.01 * k;
  p.w3().row(0).setConstant(0.001);
  p.w3().row(1).setConstant(-0.002);
  p.b3() << 0.1, -0.2;
  return p;
}

TEST(ForwardTest, HandBuiltNetwork) {
  const Params p = HandNet();
  // x = 1: hidden relu(2 - 1) = 1, second_k = 1 + 0.01 k, sum_k = 399.
  //   z0 = 0.001 * 399 + 0.1 = 0.499, z1 = -0.002 * 399 - 0.2 = -0.998.
  auto out = Forward(p, Eigen::VectorXd::Constant(1, 1.0));
  ASSERT_TRUE(out.ok());
  EXPECT_NEAR(out->logits[0], 0.499, 1e-12);
  EXPECT_NEAR(out->logits[1], -0.998, 1e-12);
  EXPECT_EQ(out->prediction, 0);
  EXPECT_NEAR(out->prob, 1.0 / (1.0 + std::exp(0.499 + 0.998)), 1e-12);
  // x = -1: hidden relu(-3) = 0, second_k = 0.01 k, sum_k = 199.
  out = Forward(p, Eigen::VectorXd::Constant(1, -1.0));
  ASSERT_TRUE(out.ok());
  EXPECT_NEAR(out->logits[0], 0.299, 1e-12);
  EXPECT_NEAR(out->logits[1], -0.598, 1e-12);
}

TEST(ForwardTest, ProbabilitiesNormalizeAndStayFinite) {
  Rng rng(5);
  Params p = InitParams<double>(Small(4, 8), 17);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd x(4);
    for (int k = 0; k < 4; ++k) x[k] = 50.0 * rng.Normal();
    auto out = Forward(p, x);
    ASSERT_TRUE(out.ok());
    const double z0 = out->logits[0];
    const double z1 = out->logits[1];
    const double m = std::max(z0, z1);
    const double p0 = std::exp(z0 - m) / (std::exp(z0 - m) + std::exp(z1 - m));
    EXPECT_NEAR(p0 + out->prob, 1.0, 1e-12);
    EXPECT_TRUE(std::isfinite(out->prob));
  }
  EXPECT_EQ(PositiveProbability(0.0, 1000.0), 1.0);
  EXPECT_EQ(PositiveProbability(1000.0, 0.0), 0.0);
}

TEST(ForwardTest, DimensionMismatch) {
  Params p(Small(3, 4));
  EXPECT_FALSE(Forward(p, Eigen::VectorXd::Zero(2)).ok());
}

TEST(ForwardTest, FloatInstantiation) {
  ModelParams<float> p = InitParams<float>(Small(3, 4), 1);
  Eigen::VectorXf x = Eigen::VectorXf::Ones(3);
  auto out = Forward(p, x);
  ASSERT_TRUE(out.ok());
  EXPECT_NEAR(out->prob, 0.5f, 0.5f);
}

TEST(InitTest, DeterministicAndScaled) {
  const Layout l = Small(10, 16);
  const Params a = InitParams<double>(l, 3);
  const Params b = InitParams<double>(l, 3);
  const Params c = InitParams<double>(l, 4);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_NE(a.values(), c.values());
  EXPECT_LE(a.w1().cwiseAbs().maxCoeff(), 1.0 / std::sqrt(10.0));
  EXPECT_LE(a.w2().cwiseAbs().maxCoeff(), 1.0 / std::sqrt(16.0));
  EXPECT_LE(a.w3().cwiseAbs().maxCoeff(), 1.0 / std::sqrt(200.0));
}

TEST(WeightedLossTest, ZeroCostsZeroLossAndGradient) {
  const Params p = InitParams<double>(Small(3, 4), 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
  auto lg = WeightedLossGrad(p, x, Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(5));
  ASSERT_TRUE(lg.ok());
  EXPECT_EQ(lg->loss, 0.0);
  EXPECT_EQ(lg->grad.values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(WeightedLossTest, EqualCostsConstantObjective) {
  const Params p = InitParams<double>(Small(3, 4), 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
  auto lg = WeightedLossGrad(p, x, Eigen::VectorXd::Ones(5), Eigen::VectorXd::Ones(5));
  ASSERT_TRUE(lg.ok());
  EXPECT_NEAR(lg->loss, 1.0, 1e-15);
  EXPECT_EQ(lg->grad.values().cwiseAbs().maxCoeff(), 0.0);
}

double LossAt(const Params& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& c0,
              const Eigen::VectorXd& c1) {
  // Independent evaluation of mean_j p_j c1_j + (1 - p_j) c0_j.
  const Eigen::MatrixXd z = Logits(p, x);
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double prob = 1.0 / (1.0 + std::exp(z(0, j) - z(1, j)));
    total += prob * c1[j] + (1.0 - prob) * c0[j];
  }
  return total / static_cast<double>(x.cols());
}

TEST(WeightedLossTest, GradientMatchesFiniteDifferences) {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    Params p = InitParams<double>(Small(3, 4, 6), 100 + trial);
    Eigen::MatrixXd x(3, 4);
    Eigen::VectorXd c0(4), c1(4);
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 3; ++k) x(k, j) = rng.Normal();
      c0[j] = 2.0 * rng.Uniform() - 0.5;
      c1[j] = 2.0 * rng.Uniform() - 0.5;
    }
    auto lg = WeightedLossGrad(p, x, c0, c1);
    ASSERT_TRUE(lg.ok());
    EXPECT_NEAR(lg->loss, LossAt(p, x, c0, c1), 1e-14);
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < p.values().size(); ++k) {
      Params plus = p;
      Params minus = p;
      plus.values()[k] += h;
      minus.values()[k] -= h;
      const double fd =
          (LossAt(plus, x, c0, c1) - LossAt(minus, x, c0, c1)) / (2 * h);
      const double an = lg->grad.values()[k];
      const double denom = std::max({std::abs(an), std::abs(fd), 1e-6});
      EXPECT_LT(std::abs(an - fd) / denom, 1e-4) << "coordinate " << k;
    }
  }
}

TEST(WeightedLossTest, Errors) {
  const Params p = InitParams<double>(Small(3, 4), 1);
  EXPECT_FALSE(WeightedLossGrad(p, Eigen::MatrixXd(3, 0), Eigen::VectorXd(0),
                                Eigen::VectorXd(0)).ok());
  EXPECT_FALSE(WeightedLossGrad(p, Eigen::MatrixXd::Zero(2, 1),
                                Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)).ok());
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(1);
  bad[0] = std::nan("");
  EXPECT_FALSE(WeightedLossGrad(p, Eigen::MatrixXd::Zero(3, 1), bad,
                                Eigen::VectorXd::Zero(1)).ok());
}

TEST(SgdStepTest, ArithmeticAndFixedPoint) {
  Params p(Small(1, 1, 1));
  p.values()[0] = 1.0;
  p.values()[1] = 2.0;
  Gradient<double> g(p.layout());
  g.values()[0] = 1.0;
  g.values()[1] = -1.0;
  auto next = SgdStep(p, g, 0.5);
  ASSERT_TRUE(next.ok());
  EXPECT_EQ(next->values()[0], 0.5);
  EXPECT_EQ(next->values()[1], 2.5);
  auto same = SgdStep(p, Gradient<double>(p.layout()), 0.3);
  ASSERT_TRUE(same.ok());
  EXPECT_EQ(same->values(), p.values());
  EXPECT_FALSE(SgdStep(p, g, -0.1).ok());
  EXPECT_FALSE(SgdStep(p, Gradient<double>(Small(2, 1, 1)), 0.1).ok());
}

TEST(AverageParamsTest, MeanIdempotenceAndOrder) {
  const Layout l = Small(1, 1, 1);
  Params a(l), b(l);
  a.values()[0] = 0.0;
  a.values()[1] = 0.0;
  b.values()[0] = 2.0;
  b.values()[1] = 4.0;
  std::vector<Params> models = {a, b};
  auto avg = AverageParams<double>(models);
  ASSERT_TRUE(avg.ok());
  EXPECT_EQ(avg->values()[0], 1.0);
  EXPECT_EQ(avg->values()[1], 2.0);

  const Params r = InitParams<double>(Small(3, 4), 9);
  std::vector<Params> copies(5, r);
  auto same = AverageParams<double>(copies);
  ASSERT_TRUE(same.ok());
  EXPECT_TRUE(same->values().isApprox(r.values(), 1e-15));

  std::vector<Params> many;
  for (int i = 0; i < 4; ++i) many.push_back(InitParams<double>(Small(3, 4), i));
  std::vector<Params> reversed(many.rbegin(), many.rend());
  auto x = AverageParams<double>(many);
  auto y = AverageParams<double>(reversed);
  ASSERT_TRUE(x.ok() && y.ok());
  EXPECT_TRUE(x->values().isApprox(y->values(), 1e-15));

  EXPECT_FALSE(AverageParams<double>(std::vector<Params>{}).ok());
  std::vector<Params> mixed = {Params(Small(3, 4)), Params(Small(2, 4))};
  EXPECT_FALSE(AverageParams<double>(mixed).ok());
}

TEST(CrossEntropyTest, HandValues) {
  Eigen::MatrixXd z(2, 2);
  z << 0.0, 1.0,
       0.0, -1.0;
  const std::vector<int> labels = {1, 0};
  const double expected = (std::log(2.0) + std::log(1.0 + std::exp(-2.0))) / 2.0;
  EXPECT_NEAR(MeanCrossEntropy<double>(z, labels), expected, 1e-14);
}

}  // namespace
}  // namespace fedpf
