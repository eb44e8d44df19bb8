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

#ifndef FEDPF_FAIRNESS_H_
#define FEDPF_FAIRNESS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "absl/status/statusor.h"
#include "fedpf/dataset.h"

namespace fedpf {

enum class FairnessKind {
  kDemographicParity,
  kEqualizedOdds,
};

struct FairnessCriterion {
  FairnessKind kind = FairnessKind::kEqualizedOdds;
  double epsilon_f = 0.1;
};

enum class Sign { kPlus = 0, kMinus = 1 };

// Indexes the group cells and the signed constraint keys K.
//
// A cell is a group a (DemP) or a (label y, group a) pair (EO), numbered
// y * |A| + a. Each cell carries two keys: + bounds gamma_cell - mean, and
// - bounds mean - gamma_cell, so |K| = 2|A| for DemP and 4|A| for EO.
class ConstraintSpace {
 public:
  ConstraintSpace() = default;
  ConstraintSpace(FairnessKind kind, int num_groups)
      : kind_(kind), num_groups_(num_groups) {}

  FairnessKind kind() const { return kind_; }
  int num_groups() const { return num_groups_; }
  int num_labels() const {
    return kind_ == FairnessKind::kEqualizedOdds ? 2 : 1;
  }
  int num_cells() const { return num_labels() * num_groups_; }
  int size() const { return 2 * num_cells(); }

  // `label` is ignored for DemP.
  int Cell(int group, int label) const {
    return kind_ == FairnessKind::kEqualizedOdds ? label * num_groups_ + group
                                                 : group;
  }
  int GroupOf(int cell) const { return cell % num_groups_; }
  // Label block of a cell; always 0 for DemP.
  int LabelBlockOf(int cell) const { return cell / num_groups_; }
  int Key(int cell, Sign sign) const {
    return 2 * cell + static_cast<int>(sign);
  }
  int CellOfKey(int key) const { return key / 2; }
  Sign SignOfKey(int key) const { return static_cast<Sign>(key % 2); }

  // "+a1" for DemP, "-a0y1" for EO.
  std::string KeyName(int key) const;
  std::string CellName(int cell) const;

  friend bool operator==(const ConstraintSpace&, const ConstraintSpace&) = default;

 private:
  FairnessKind kind_ = FairnessKind::kEqualizedOdds;
  int num_groups_ = 2;
};

// Per-cell prediction sums and counts. Kept as sums so that statistics from
// disjoint record sets merge exactly.
struct GroupStats {
  ConstraintSpace space;
  Eigen::VectorXd positives;
  Eigen::VectorXd counts;

  explicit GroupStats(const ConstraintSpace& s)
      : space(s),
        positives(Eigen::VectorXd::Zero(s.num_cells())),
        counts(Eigen::VectorXd::Zero(s.num_cells())) {}

  bool Present(int cell) const { return counts[cell] > 0; }
  // Mean prediction in the cell, empty when no sample fell into it.
  std::optional<double> Gamma(int cell) const;
  int AbsentCells() const;

  void Add(int cell, double prediction) {
    positives[cell] += prediction;
    counts[cell] += 1.0;
  }
  GroupStats& Merge(const GroupStats& other);
};

absl::StatusOr<GroupStats> ComputeGroupStats(std::span<const int> predictions,
                                             std::span<const int> attributes,
                                             std::span<const int> labels,
                                             const ConstraintSpace& space);

// Uses each record's true sensitive attribute.
absl::StatusOr<GroupStats> ComputeGroupStats(std::span<const int> predictions,
                                             std::span<const Record> records,
                                             const ConstraintSpace& space);

struct Discrimination {
  double value = 0.0;
  // False when no label block has two present groups.
  bool defined = false;
};

// Largest |gamma_a - gamma_a'| over label blocks and present group pairs.
Discrimination ComputeDiscrimination(const GroupStats& stats);

// Signed per-key violations; positive means the constraint is violated. The
// reference is the mean gamma of the present groups in the same label block.
// Keys of absent cells are 0 and flagged in `present`.
struct ViolationVector {
  ConstraintSpace space;
  Eigen::VectorXd values;
  std::vector<bool> present;

  double MaxPresent() const;
};

ViolationVector ComputeViolations(const GroupStats& stats,
                                  const FairnessCriterion& criterion);

// One client's contribution to the total-discrimination bound: the statistic
// of a fixed cell under true and perturbed attributes, and the TV distance
// between the two record laws that define them.
struct GapEntry {
  double gamma_true = 0.0;
  double gamma_perturbed = 0.0;
  double tv = 0.0;
};

struct GapCheck {
  double gap_sum = 0.0;
  double bound = 0.0;
  bool holds = true;
};

// gap_sum = sum_i (gamma_perturbed - gamma_true), bound = N * max_i tv;
// holds when |gap_sum| <= bound.
GapCheck FairnessGapSum(std::span<const GapEntry> entries);

// TV distance between the uniform law over records whose true attribute and
// label fall in `cell`, and the uniform law over records whose observed
// attribute and label fall in `cell`. Since predictions lie in [0, 1], the
// two cell statistics differ by at most this amount. Empty when either set is
// empty.
absl::StatusOr<std::optional<double>> CellTvDistance(
    std::span<const int> true_attributes,
    std::span<const int> observed_attributes, std::span<const int> labels,
    const ConstraintSpace& space, int cell);

}  // namespace fedpf

#endif  // FEDPF_FAIRNESS_H_
