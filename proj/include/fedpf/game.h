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

#ifndef FEDPF_GAME_H_
#define FEDPF_GAME_H_

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "absl/status/statusor.h"
#include "fedpf/fairness.h"
#include "fedpf/model.h"

namespace fedpf {

// The auditor's state: one nonnegative weight per signed constraint key,
// with ||lambda||_1 <= bound.
struct DualVariables {
  ConstraintSpace space;
  Eigen::VectorXd values;
  double bound = 1.0;

  DualVariables() = default;
  DualVariables(const ConstraintSpace& s, double b)
      : space(s), values(Eigen::VectorXd::Zero(s.size())), bound(b) {}

  double L1() const { return values.sum(); }
  // lambda >= 0 and ||lambda||_1 <= bound + tolerance.
  bool Feasible(double tolerance = 1e-9) const;

  // lambda(+, cell) - lambda(-, cell) for every cell.
  Eigen::VectorXd NetWeights() const;
  // Per label block, the mean net weight over groups.
  Eigen::VectorXd Means() const;
};

struct CostPair {
  double c0 = 0.0;
  double c1 = 0.0;
};

// Empirical cell frequencies of a batch (count / batch size) indexed by
// ConstraintSpace cell.
Eigen::VectorXd CellProbabilities(std::span<const int> attributes,
                                  std::span<const int> labels,
                                  const ConstraintSpace& space);

// c0 = 1{y != 0}, c1 = 1{y != 1} + (net(cell) - mean(block)) / p(cell).
// Fails with FailedPrecondition when p(cell) is zero.
absl::StatusOr<CostPair> CostTerms(int label, int observed_attribute,
                                   const Eigen::VectorXd& net_weights,
                                   const Eigen::VectorXd& dual_means,
                                   const Eigen::VectorXd& cell_probs,
                                   const ConstraintSpace& space);

// A classifier for the exact cost-sensitive oracle.
using HardClassifier = std::function<int(const Eigen::VectorXd&)>;

// argmin_f sum_j f(x_j) c1_j + (1 - f(x_j)) c0_j over a finite class; ties go
// to the lowest index.
size_t BestResponse(std::span<const Eigen::VectorXd> features,
                    std::span<const CostPair> costs,
                    std::span<const HardClassifier> hypotheses);

// A mini-batch as the learner sees it: inputs (one column per example), the
// observed (possibly perturbed) attribute, and the label.
struct LearnerBatch {
  Eigen::MatrixXd inputs;
  std::vector<int> attributes;
  std::vector<int> labels;
};

struct LearnerOptions {
  // Also add the explicit lambda * grad(G) term on top of the cost shift.
  bool lagrangian_grad = false;
  // Cell probabilities to use instead of the batch's own frequencies.
  const Eigen::VectorXd* cell_probs_override = nullptr;
};

struct LearnerResult {
  Params params;
  double loss = 0.0;
  // Examples whose cell had zero probability and were left out.
  int excluded = 0;
};

// Costs from the duals, then one SGD step on the relaxed expected cost.
absl::StatusOr<LearnerResult> LearnerStep(const Params& params,
                                          const LearnerBatch& batch,
                                          const DualVariables& duals,
                                          double eta_theta,
                                          const LearnerOptions& options = {});

// Euclidean projection onto {x >= 0, sum(x) <= bound}: clip negatives, then,
// if the sum still exceeds the bound, shift by the threshold tau solving
// sum max(x_i - tau, 0) = bound.
Eigen::VectorXd ProjectOntoDualSet(const Eigen::VectorXd& values, double bound);

// lambda' = Project(lambda + eta * violation). Keys absent from the
// violation vector get no gradient.
DualVariables AuditorStep(const DualVariables& duals,
                          const ViolationVector& violation, double eta_lambda);

struct BoundInputs {
  double dual_bound = 1.0;  // B
  double epsilon_f = 0.1;
  double epsilon_p = 1.0;
  double rounds = 200;      // T
  double samples = 1000;    // m
  int num_sensitive = 2;    // |A|
  int num_constraints = 8;  // |K|
  double delta = 1e-5;
  double beta = 0.05;
};

// B^2 eps_f^4 T^{3/2} H / eps_p^2 with
// H = ln(1/delta) ln^2(8 T |A| / delta) ln(|K| + 1); no hidden constant.
absl::StatusOr<double> CouplingBound(const BoundInputs& inputs);

// sqrt(ln(1/beta) / m), the confidence part of the generalization term.
absl::StatusOr<double> ConfidenceTerm(const BoundInputs& inputs);

}  // namespace fedpf

#endif  // FEDPF_GAME_H_
