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

#include "fedpf/privacy.h"

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

namespace fedpf {
namespace {

// Direct evaluation of e^eps / (|A| - 1 + e^eps), kept independent of the
// library's rescaled form.
double NaiveKeep(double eps, int n) {
  return std::exp(eps) / (n - 1 + std::exp(eps));
}

TEST(MechanismTest, ZeroBudgetIsUniform) {
  auto d = MakeMechanismDistribution(0.0, 4);
  ASSERT_TRUE(d.ok());
  EXPECT_DOUBLE_EQ(d->keep_prob, 0.25);
  EXPECT_DOUBLE_EQ(d->flip_prob, 0.25);
}

TEST(MechanismTest, LnThreeTwoValues) {
  auto d = MakeMechanismDistribution(std::log(3.0), 2);
  ASSERT_TRUE(d.ok());
  EXPECT_NEAR(d->keep_prob, 0.75, 1e-15);
  EXPECT_NEAR(d->flip_prob, 0.25, 1e-15);
}

TEST(MechanismTest, LnThreeThreeValues) {
  auto d = MakeMechanismDistribution(std::log(3.0), 3);
  ASSERT_TRUE(d.ok());
  EXPECT_NEAR(d->keep_prob, 0.6, 1e-15);
  EXPECT_NEAR(d->flip_prob, 0.2, 1e-15);
}

TEST(MechanismTest, MatchesNaiveFormulaAndNormalizes) {
  for (int n = 2; n <= 6; ++n) {
    for (double eps : {0.0, 0.01, 0.5, 1.0, 2.0, 5.0, 20.0}) {
      auto d = MakeMechanismDistribution(eps, n);
      ASSERT_TRUE(d.ok());
      EXPECT_NEAR(d->keep_prob, NaiveKeep(eps, n), 1e-14);
      EXPECT_NEAR(d->keep_prob + (n - 1) * d->flip_prob, 1.0, 1e-14);
      EXPECT_GE(d->keep_prob, d->flip_prob);
    }
  }
}

TEST(MechanismTest, LargeAndInfiniteBudget) {
  auto big = MakeMechanismDistribution(1000.0, 3);
  ASSERT_TRUE(big.ok());
  EXPECT_TRUE(std::isfinite(big->keep_prob));
  EXPECT_DOUBLE_EQ(big->keep_prob, 1.0);
  auto inf = MakeMechanismDistribution(std::numeric_limits<double>::infinity(), 2);
  ASSERT_TRUE(inf.ok());
  EXPECT_EQ(inf->keep_prob, 1.0);
  EXPECT_EQ(inf->flip_prob, 0.0);
}

TEST(MechanismTest, Errors) {
  EXPECT_FALSE(MakeMechanismDistribution(-0.1, 2).ok());
  EXPECT_FALSE(MakeMechanismDistribution(std::nan(""), 2).ok());
  EXPECT_FALSE(MakeMechanismDistribution(1.0, 1).ok());
}

TEST(MechanismTest, DisabledConfigIsIdentity) {
  PrivacyConfig config;
  config.epsilon_p = 0.1;
  config.enabled = false;
  auto d = MechanismFor(config, 2);
  ASSERT_TRUE(d.ok());
  EXPECT_EQ(d->keep_prob, 1.0);
  config.enabled = true;
  d = MechanismFor(config, 2);
  ASSERT_TRUE(d.ok());
  EXPECT_LT(d->keep_prob, 1.0);
}

TEST(PerturbTest, IdentityNeverChanges) {
  MechanismDistribution d;
  d.keep_prob = 1.0;
  d.flip_prob = 0.0;
  d.num_values = 3;
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) EXPECT_EQ(PerturbAttribute(i % 3, d, rng), i % 3);
}

TEST(PerturbTest, KeepRateLnThree) {
  auto d = MakeMechanismDistribution(std::log(3.0), 2);
  ASSERT_TRUE(d.ok());
  Rng rng(2);
  int kept = 0;
  for (int i = 0; i < 100000; ++i) kept += PerturbAttribute(1, *d, rng) == 1;
  EXPECT_NEAR(kept / 100000.0, 0.75, 0.01);
}

TEST(PerturbTest, ZeroBudgetThreeValuesUniform) {
  auto d = MakeMechanismDistribution(0.0, 3);
  ASSERT_TRUE(d.ok());
  Rng rng(3);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 100000; ++i) ++counts[PerturbAttribute(0, *d, rng)];
  for (int c : counts) EXPECT_NEAR(c / 100000.0, 1.0 / 3.0, 0.01);
}

TEST(PerturbTest, FlipsSpreadEvenlyOverOtherValues) {
  auto d = MakeMechanismDistribution(1.0, 4);
  ASSERT_TRUE(d.ok());
  Rng rng(4);
  std::vector<int> counts(4, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[PerturbAttribute(2, *d, rng)];
  for (int v = 0; v < 4; ++v) {
    const double p = v == 2 ? d->keep_prob : d->flip_prob;
    EXPECT_NEAR(counts[v], n * p, 4 * std::sqrt(n * p * (1 - p)));
  }
}

TEST(PerturbedStatisticTest, HandExample) {
  auto d = MakeMechanismDistribution(std::log(3.0), 2);
  ASSERT_TRUE(d.ok());
  Eigen::VectorXd g(2);
  g << 0.8, 0.2;
  const Eigen::VectorXd out = PerturbedStatistic(g, *d);
  EXPECT_NEAR(out[0], 0.65, 1e-12);
  EXPECT_NEAR(out[1], 0.35, 1e-12);
}

TEST(PerturbedStatisticTest, IdentityAndUniformFixedPoint) {
  MechanismDistribution id;
  id.num_values = 3;
  Eigen::VectorXd g(3);
  g << 0.1, 0.5, 0.9;
  EXPECT_TRUE(PerturbedStatistic(g, id).isApprox(g));
  auto d = MakeMechanismDistribution(0.7, 3);
  ASSERT_TRUE(d.ok());
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(3, 0.42);
  EXPECT_TRUE(PerturbedStatistic(c, *d).isApprox(c, 1e-14));
}

// Property: pairwise gaps contract by exactly keep - flip.
TEST(PerturbedStatisticTest, GapsContractByKeepMinusFlip) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(4));
    const double eps = 5.0 * rng.Uniform();
    auto d = MakeMechanismDistribution(eps, n);
    ASSERT_TRUE(d.ok());
    Eigen::VectorXd g(n);
    for (int a = 0; a < n; ++a) g[a] = rng.Uniform();
    const Eigen::VectorXd out = PerturbedStatistic(g, *d);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        EXPECT_NEAR(out[a] - out[b], (d->keep_prob - d->flip_prob) * (g[a] - g[b]),
                    1e-12);
      }
    }
  }
}

TEST(TvDistanceTest, Examples) {
  Eigen::VectorXd p(2), q(2);
  p << 0.5, 0.5;
  EXPECT_EQ(*TvDistance(p, p), 0.0);
  q << 1.0, 0.0;
  EXPECT_DOUBLE_EQ(*TvDistance(p, q), 0.5);
  p << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(*TvDistance(p, q), 1.0);
}

TEST(TvDistanceTest, Errors) {
  Eigen::VectorXd p(2), q(3);
  p << 0.5, 0.5;
  q << 0.2, 0.3, 0.5;
  EXPECT_FALSE(TvDistance(p, q).ok());
  Eigen::VectorXd bad(2);
  bad << 0.7, 0.7;
  EXPECT_FALSE(TvDistance(p, bad).ok());
  bad << 1.5, -0.5;
  EXPECT_FALSE(TvDistance(p, bad).ok());
}

}  // namespace
}  // namespace fedpf
