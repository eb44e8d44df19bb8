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
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "fedpf/privacy.h"

namespace fedpf {

std::string ConstraintSpace::CellName(int cell) const {
  if (kind_ == FairnessKind::kEqualizedOdds) {
    return absl::StrCat("a", GroupOf(cell), "y", LabelBlockOf(cell));
  }
  return absl::StrCat("a", GroupOf(cell));
}

std::string ConstraintSpace::KeyName(int key) const {
  return absl::StrCat(SignOfKey(key) == Sign::kPlus ? "+" : "-",
                      CellName(CellOfKey(key)));
}

std::optional<double> GroupStats::Gamma(int cell) const {
  if (!Present(cell)) return std::nullopt;
  return positives[cell] / counts[cell];
}

int GroupStats::AbsentCells() const {
  return static_cast<int>((counts.array() <= 0.0).count());
}

GroupStats& GroupStats::Merge(const GroupStats& other) {
  positives += other.positives;
  counts += other.counts;
  return *this;
}

absl::StatusOr<GroupStats> ComputeGroupStats(std::span<const int> predictions,
                                             std::span<const int> attributes,
                                             std::span<const int> labels,
                                             const ConstraintSpace& space) {
  if (predictions.size() != attributes.size() ||
      predictions.size() != labels.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "group_stats: ", predictions.size(), " predictions for ",
        attributes.size(), " records"));
  }
  GroupStats stats(space);
  for (size_t j = 0; j < predictions.size(); ++j) {
    if (attributes[j] < 0 || attributes[j] >= space.num_groups()) {
      return absl::InvalidArgumentError(
          absl::StrCat("group_stats: attribute ", attributes[j],
                       " out of range"));
    }
    stats.Add(space.Cell(attributes[j], labels[j]), predictions[j]);
  }
  return stats;
}

absl::StatusOr<GroupStats> ComputeGroupStats(std::span<const int> predictions,
                                             std::span<const Record> records,
                                             const ConstraintSpace& space) {
  std::vector<int> attributes;
  std::vector<int> labels;
  attributes.reserve(records.size());
  labels.reserve(records.size());
  for (const Record& r : records) {
    attributes.push_back(r.sensitive);
    labels.push_back(r.label);
  }
  return ComputeGroupStats(predictions, attributes, labels, space);
}

Discrimination ComputeDiscrimination(const GroupStats& stats) {
  const ConstraintSpace& space = stats.space;
  Discrimination out;
  for (int block = 0; block < space.num_labels(); ++block) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int present = 0;
    for (int a = 0; a < space.num_groups(); ++a) {
      const auto gamma = stats.Gamma(space.Cell(a, block));
      if (!gamma) continue;
      lo = std::min(lo, *gamma);
      hi = std::max(hi, *gamma);
      ++present;
    }
    if (present >= 2) {
      out.defined = true;
      out.value = std::max(out.value, hi - lo);
    }
  }
  return out;
}

double ViolationVector::MaxPresent() const {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (present[k]) best = std::max(best, values[k]);
  }
  return best;
}

ViolationVector ComputeViolations(const GroupStats& stats,
                                  const FairnessCriterion& criterion) {
  const ConstraintSpace& space = stats.space;
  ViolationVector out;
  out.space = space;
  out.values = Eigen::VectorXd::Zero(space.size());
  out.present.assign(space.size(), false);
  for (int block = 0; block < space.num_labels(); ++block) {
    double sum = 0.0;
    int present = 0;
    for (int a = 0; a < space.num_groups(); ++a) {
      if (const auto g = stats.Gamma(space.Cell(a, block))) {
        sum += *g;
        ++present;
      }
    }
    if (present == 0) continue;
    const double mean = sum / present;
    for (int a = 0; a < space.num_groups(); ++a) {
      const int cell = space.Cell(a, block);
      const auto gamma = stats.Gamma(cell);
      if (!gamma) continue;
      const int plus = space.Key(cell, Sign::kPlus);
      const int minus = space.Key(cell, Sign::kMinus);
      out.values[plus] = (*gamma - mean) - criterion.epsilon_f;
      out.values[minus] = (mean - *gamma) - criterion.epsilon_f;
      out.present[plus] = true;
      out.present[minus] = true;
    }
  }
  return out;
}

GapCheck FairnessGapSum(std::span<const GapEntry> entries) {
  GapCheck out;
  double max_tv = 0.0;
  for (const GapEntry& e : entries) {
    out.gap_sum += e.gamma_perturbed - e.gamma_true;
    max_tv = std::max(max_tv, e.tv);
  }
  out.bound = static_cast<double>(entries.size()) * max_tv;
  // Slack for the rounding in the two means.
  out.holds = std::abs(out.gap_sum) <= out.bound + 1e-12;
  return out;
}

absl::StatusOr<std::optional<double>> CellTvDistance(
    std::span<const int> true_attributes,
    std::span<const int> observed_attributes, std::span<const int> labels,
    const ConstraintSpace& space, int cell) {
  const size_t n = labels.size();
  if (true_attributes.size() != n || observed_attributes.size() != n) {
    return absl::InvalidArgumentError("cell_tv_distance: length mismatch");
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (size_t j = 0; j < n; ++j) {
    if (space.Cell(true_attributes[j], labels[j]) == cell) p[j] = 1.0;
    if (space.Cell(observed_attributes[j], labels[j]) == cell) q[j] = 1.0;
  }
  const double p_mass = p.sum();
  const double q_mass = q.sum();
  if (p_mass == 0.0 || q_mass == 0.0) return std::optional<double>();
  p /= p_mass;
  q /= q_mass;
  absl::StatusOr<double> tv = TvDistance(p, q);
  if (!tv.ok()) return tv.status();
  return std::optional<double>(*tv);
}

}  // namespace fedpf
