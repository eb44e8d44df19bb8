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

#include "fedpf/fairness.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fedpf/privacy.h"
#include "fedpf/random.h"

namespace fedpf {
namespace {

const ConstraintSpace kEo2(FairnessKind::kEqualizedOdds, 2);
const ConstraintSpace kDemP2(FairnessKind::kDemographicParity, 2);

TEST(ConstraintSpaceTest, SizesAndNames) {
  for (int groups = 2; groups <= 5; ++groups) {
    EXPECT_EQ(ConstraintSpace(FairnessKind::kDemographicParity, groups).size(),
              2 * groups);
    EXPECT_EQ(ConstraintSpace(FairnessKind::kEqualizedOdds, groups).size(),
              4 * groups);
  }
  std::set<std::string> names;
  for (int k = 0; k < kEo2.size(); ++k) names.insert(kEo2.KeyName(k));
  EXPECT_EQ(names.size(), 8u);
  EXPECT_EQ(kEo2.KeyName(kEo2.Key(kEo2.Cell(0, 1), Sign::kMinus)), "-a0y1");
  EXPECT_EQ(kDemP2.KeyName(kDemP2.Key(kDemP2.Cell(1, 0), Sign::kPlus)), "+a1");
  EXPECT_EQ(kDemP2.Cell(1, 0), kDemP2.Cell(1, 1));
}

TEST(GroupStatsTest, ConstantClassifier) {
  const std::vector<int> preds(6, 1);
  const std::vector<int> attrs = {0, 1, 0, 1, 0, 1};
  const std::vector<int> labels = {0, 0, 1, 1, 1, 0};
  auto stats = ComputeGroupStats(preds, attrs, labels, kEo2);
  ASSERT_TRUE(stats.ok());
  for (int c = 0; c < kEo2.num_cells(); ++c) EXPECT_EQ(*stats->Gamma(c), 1.0);
  EXPECT_EQ(ComputeDiscrimination(*stats).value, 0.0);
}

TEST(GroupStatsTest, HandCountedEoAndDemP) {
  const std::vector<int> preds = {1, 0, 1};
  const std::vector<int> attrs = {0, 0, 1};
  const std::vector<int> labels = {1, 1, 1};
  auto eo = ComputeGroupStats(preds, attrs, labels, kEo2);
  ASSERT_TRUE(eo.ok());
  EXPECT_DOUBLE_EQ(*eo->Gamma(kEo2.Cell(0, 1)), 0.5);
  EXPECT_DOUBLE_EQ(*eo->Gamma(kEo2.Cell(1, 1)), 1.0);
  EXPECT_FALSE(eo->Gamma(kEo2.Cell(0, 0)).has_value());
  EXPECT_EQ(eo->AbsentCells(), 2);
  const Discrimination g = ComputeDiscrimination(*eo);
  EXPECT_TRUE(g.defined);
  EXPECT_DOUBLE_EQ(g.value, 0.5);

  auto demp = ComputeGroupStats(preds, attrs, labels, kDemP2);
  ASSERT_TRUE(demp.ok());
  EXPECT_DOUBLE_EQ(*demp->Gamma(0), 0.5);
  EXPECT_DOUBLE_EQ(*demp->Gamma(1), 1.0);
}

TEST(GroupStatsTest, RecordOverloadMatches) {
  std::vector<Record> records(3);
  records[0].sensitive = 0;
  records[0].label = 1;
  records[1].sensitive = 1;
  records[1].label = 0;
  records[2].sensitive = 1;
  records[2].label = 0;
  const std::vector<int> preds = {1, 1, 0};
  auto s = ComputeGroupStats(preds, records, kEo2);
  ASSERT_TRUE(s.ok());
  EXPECT_DOUBLE_EQ(*s->Gamma(kEo2.Cell(1, 0)), 0.5);
  EXPECT_FALSE(ComputeGroupStats(std::vector<int>{1}, records, kEo2).ok());
}

TEST(DiscriminationTest, ThreeGroupDemP) {
  const ConstraintSpace space(FairnessKind::kDemographicParity, 3);
  GroupStats stats(space);
  // gamma = (0.9, 0.2, 0.4) from 10 records per group.
  const int positives[3] = {9, 2, 4};
  for (int a = 0; a < 3; ++a) {
    for (int j = 0; j < 10; ++j) stats.Add(a, j < positives[a] ? 1 : 0);
  }
  EXPECT_NEAR(ComputeDiscrimination(stats).value, 0.7, 1e-12);
}

TEST(DiscriminationTest, UndefinedWithoutTwoGroups) {
  GroupStats stats(kEo2);
  stats.Add(kEo2.Cell(0, 0), 1);
  stats.Add(kEo2.Cell(0, 1), 0);
  EXPECT_FALSE(ComputeDiscrimination(stats).defined);
}

// Brute-force oracle: max over label blocks and present pairs.
TEST(DiscriminationTest, MatchesPairwiseOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const int groups = 2 + static_cast<int>(rng.Below(3));
    const ConstraintSpace space(FairnessKind::kEqualizedOdds, groups);
    const int n = 1 + static_cast<int>(rng.Below(40));
    std::vector<int> preds(n), attrs(n), labels(n);
    for (int j = 0; j < n; ++j) {
      preds[j] = static_cast<int>(rng.Below(2));
      attrs[j] = static_cast<int>(rng.Below(groups));
      labels[j] = static_cast<int>(rng.Below(2));
    }
    auto stats = ComputeGroupStats(preds, attrs, labels, space);
    ASSERT_TRUE(stats.ok());
    double oracle = 0.0;
    bool defined = false;
    for (int y = 0; y < 2; ++y) {
      for (int a = 0; a < groups; ++a) {
        for (int b = 0; b < groups; ++b) {
          double sa = 0, ca = 0, sb = 0, cb = 0;
          for (int j = 0; j < n; ++j) {
            if (labels[j] != y) continue;
            if (attrs[j] == a) { sa += preds[j]; ca += 1; }
            if (attrs[j] == b) { sb += preds[j]; cb += 1; }
          }
          if (a == b || ca == 0 || cb == 0) continue;
          defined = true;
          oracle = std::max(oracle, std::abs(sa / ca - sb / cb));
        }
      }
    }
    const Discrimination g = ComputeDiscrimination(*stats);
    EXPECT_EQ(g.defined, defined);
    EXPECT_NEAR(g.value, oracle, 1e-12);
    EXPECT_GE(g.value, 0.0);
    EXPECT_LE(g.value, 1.0);
  }
}

TEST(ViolationTest, HandExampleDemP) {
  GroupStats stats(kDemP2);
  for (int j = 0; j < 10; ++j) stats.Add(0, j < 8 ? 1 : 0);
  for (int j = 0; j < 10; ++j) stats.Add(1, j < 2 ? 1 : 0);
  const ViolationVector v = ComputeViolations(stats, {FairnessKind::kDemographicParity, 0.1});
  EXPECT_NEAR(v.values[kDemP2.Key(0, Sign::kPlus)], 0.2, 1e-12);
  EXPECT_NEAR(v.values[kDemP2.Key(0, Sign::kMinus)], -0.4, 1e-12);
  EXPECT_NEAR(v.values[kDemP2.Key(1, Sign::kPlus)], -0.4, 1e-12);
  EXPECT_NEAR(v.values[kDemP2.Key(1, Sign::kMinus)], 0.2, 1e-12);
  EXPECT_NEAR(v.MaxPresent(), 0.2, 1e-12);
}

TEST(ViolationTest, EqualGammasZeroSlack) {
  GroupStats stats(kEo2);
  for (int c = 0; c < kEo2.num_cells(); ++c) {
    stats.Add(c, 1);
    stats.Add(c, 0);
  }
  const ViolationVector v = ComputeViolations(stats, {FairnessKind::kEqualizedOdds, 0.0});
  EXPECT_EQ(v.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ViolationTest, UnitSlackNeverViolated) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    GroupStats stats(kEo2);
    for (int j = 0; j < 30; ++j) {
      stats.Add(static_cast<int>(rng.Below(4)), static_cast<double>(rng.Below(2)));
    }
    const ViolationVector v = ComputeViolations(stats, {FairnessKind::kEqualizedOdds, 1.0});
    EXPECT_LE(v.values.maxCoeff(), 0.0);
  }
}

TEST(ViolationTest, AbsentCellsFlagged) {
  GroupStats stats(kEo2);
  stats.Add(kEo2.Cell(0, 1), 1);
  stats.Add(kEo2.Cell(1, 1), 0);
  const ViolationVector v = ComputeViolations(stats, {FairnessKind::kEqualizedOdds, 0.1});
  for (int a = 0; a < 2; ++a) {
    for (Sign s : {Sign::kPlus, Sign::kMinus}) {
      EXPECT_FALSE(v.present[kEo2.Key(kEo2.Cell(a, 0), s)]);
      EXPECT_EQ(v.values[kEo2.Key(kEo2.Cell(a, 0), s)], 0.0);
      EXPECT_TRUE(v.present[kEo2.Key(kEo2.Cell(a, 1), s)]);
    }
  }
}

TEST(GapSumTest, NoShiftAndFormula) {
  std::vector<GapEntry> same = {{0.4, 0.4, 0.0}, {0.7, 0.7, 0.0}};
  GapCheck c = FairnessGapSum(same);
  EXPECT_EQ(c.gap_sum, 0.0);
  EXPECT_EQ(c.bound, 0.0);
  EXPECT_TRUE(c.holds);
  std::vector<GapEntry> two = {{0.5, 0.55, 0.1}, {0.5, 0.6, 0.3}};
  c = FairnessGapSum(two);
  EXPECT_DOUBLE_EQ(c.bound, 0.6);
  EXPECT_NEAR(c.gap_sum, 0.15, 1e-12);
  EXPECT_TRUE(c.holds);
  std::vector<GapEntry> broken = {{0.0, 0.9, 0.1}, {0.0, 0.9, 0.1}};
  EXPECT_FALSE(FairnessGapSum(broken).holds);
}

// Property: for any predictions in {0, 1}, the cell statistic moves by at most
// the TV distance between the two record laws.
TEST(CellTvDistanceTest, BoundsStatisticShift) {
  Rng rng(12);
  auto mech = MakeMechanismDistribution(0.5, 3);
  ASSERT_TRUE(mech.ok());
  const ConstraintSpace space(FairnessKind::kEqualizedOdds, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 5 + static_cast<int>(rng.Below(60));
    std::vector<int> preds(n), truth(n), observed(n), labels(n);
    for (int j = 0; j < n; ++j) {
      preds[j] = static_cast<int>(rng.Below(2));
      truth[j] = static_cast<int>(rng.Below(3));
      labels[j] = static_cast<int>(rng.Below(2));
      observed[j] = PerturbAttribute(truth[j], *mech, rng);
    }
    auto t = ComputeGroupStats(preds, truth, labels, space);
    auto o = ComputeGroupStats(preds, observed, labels, space);
    ASSERT_TRUE(t.ok() && o.ok());
    for (int cell = 0; cell < space.num_cells(); ++cell) {
      auto tv = CellTvDistance(truth, observed, labels, space, cell);
      ASSERT_TRUE(tv.ok());
      if (!tv->has_value()) {
        EXPECT_TRUE(!t->Present(cell) || !o->Present(cell));
        continue;
      }
      EXPECT_GE(**tv, 0.0);
      EXPECT_LE(**tv, 1.0 + 1e-12);
      EXPECT_LE(std::abs(*o->Gamma(cell) - *t->Gamma(cell)), **tv + 1e-12);
    }
  }
}

TEST(CellTvDistanceTest, IdenticalAttributesGiveZero) {
  const std::vector<int> attrs = {0, 1, 1, 0};
  const std::vector<int> labels = {0, 0, 1, 1};
  for (int cell = 0; cell < 4; ++cell) {
    auto tv = CellTvDistance(attrs, attrs, labels, kEo2, cell);
    ASSERT_TRUE(tv.ok() && tv->has_value());
    EXPECT_EQ(**tv, 0.0);
  }
  EXPECT_FALSE(CellTvDistance(attrs, std::vector<int>{0}, labels, kEo2, 0).ok());
}

}  // namespace
}  // namespace fedpf
