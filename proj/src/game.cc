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

#include "fedpf/game.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace fedpf {

bool DualVariables::Feasible(double tolerance) const {
  return (values.array() >= 0.0).all() && values.sum() <= bound + tolerance;
}

Eigen::VectorXd DualVariables::NetWeights() const {
  Eigen::VectorXd net(space.num_cells());
  for (int cell = 0; cell < space.num_cells(); ++cell) {
    net[cell] = values[space.Key(cell, Sign::kPlus)] -
                values[space.Key(cell, Sign::kMinus)];
  }
  return net;
}

Eigen::VectorXd DualVariables::Means() const {
  const Eigen::VectorXd net = NetWeights();
  Eigen::VectorXd means = Eigen::VectorXd::Zero(space.num_labels());
  for (int cell = 0; cell < space.num_cells(); ++cell) {
    means[space.LabelBlockOf(cell)] += net[cell];
  }
  return means / static_cast<double>(space.num_groups());
}

Eigen::VectorXd CellProbabilities(std::span<const int> attributes,
                                  std::span<const int> labels,
                                  const ConstraintSpace& space) {
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(space.num_cells());
  for (size_t j = 0; j < attributes.size(); ++j) {
    probs[space.Cell(attributes[j], labels[j])] += 1.0;
  }
  if (!attributes.empty()) probs /= static_cast<double>(attributes.size());
  return probs;
}

absl::StatusOr<CostPair> CostTerms(int label, int observed_attribute,
                                   const Eigen::VectorXd& net_weights,
                                   const Eigen::VectorXd& dual_means,
                                   const Eigen::VectorXd& cell_probs,
                                   const ConstraintSpace& space) {
  const int cell = space.Cell(observed_attribute, label);
  const double p = cell_probs[cell];
  if (!(p > 0.0)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "cost_terms: empirical probability of ", space.CellName(cell),
        " is zero"));
  }
  CostPair costs;
  costs.c0 = label != 0 ? 1.0 : 0.0;
  costs.c1 = (label != 1 ? 1.0 : 0.0) +
             (net_weights[cell] - dual_means[space.LabelBlockOf(cell)]) / p;
  return costs;
}

size_t BestResponse(std::span<const Eigen::VectorXd> features,
                    std::span<const CostPair> costs,
                    std::span<const HardClassifier> hypotheses) {
  size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (size_t h = 0; h < hypotheses.size(); ++h) {
    double total = 0.0;
    for (size_t j = 0; j < features.size(); ++j) {
      total += hypotheses[h](features[j]) == 1 ? costs[j].c1 : costs[j].c0;
    }
    if (total < best_cost) {
      best_cost = total;
      best = h;
    }
  }
  return best;
}

absl::StatusOr<LearnerResult> LearnerStep(const Params& params,
                                          const LearnerBatch& batch,
                                          const DualVariables& duals,
                                          double eta_theta,
                                          const LearnerOptions& options) {
  const size_t n = batch.labels.size();
  if (n == 0 || batch.attributes.size() != n ||
      static_cast<size_t>(batch.inputs.cols()) != n) {
    return absl::InvalidArgumentError("learner_step: malformed batch");
  }
  if (!duals.Feasible()) {
    return absl::InvalidArgumentError("learner_step: infeasible duals");
  }
  const ConstraintSpace& space = duals.space;
  const Eigen::VectorXd cell_probs =
      options.cell_probs_override != nullptr
          ? *options.cell_probs_override
          : CellProbabilities(batch.attributes, batch.labels, space);
  const Eigen::VectorXd net = duals.NetWeights();
  const Eigen::VectorXd means = duals.Means();

  std::vector<Eigen::Index> kept;
  std::vector<CostPair> costs;
  kept.reserve(n);
  costs.reserve(n);
  LearnerResult result;
  for (size_t j = 0; j < n; ++j) {
    absl::StatusOr<CostPair> c = CostTerms(batch.labels[j], batch.attributes[j],
                                           net, means, cell_probs, space);
    if (!c.ok()) {
      if (absl::IsFailedPrecondition(c.status())) {
        ++result.excluded;
        continue;
      }
      return c.status();
    }
    kept.push_back(static_cast<Eigen::Index>(j));
    costs.push_back(*c);
  }
  if (kept.empty()) {
    result.params = params;
    return result;
  }

  const Eigen::Index m = static_cast<Eigen::Index>(kept.size());
  Eigen::VectorXd c0(m);
  Eigen::VectorXd c1(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    c0[j] = costs[j].c0;
    c1[j] = costs[j].c1;
  }
  const bool all_kept = m == batch.inputs.cols();
  const Eigen::MatrixXd inputs =
      all_kept ? batch.inputs : batch.inputs(Eigen::all, kept);

  absl::StatusOr<LossAndGradient<double>> lg =
      WeightedLossGrad(params, inputs, c0, c1);
  if (!lg.ok()) return lg.status();
  result.loss = lg->loss;
  Gradient<double> grad = std::move(lg->grad);

  if (options.lagrangian_grad) {
    // Gradient of sum_k lambda_k * violation_k with soft cell rates: the
    // same shift as in c1, applied a second time.
    Eigen::VectorXd shift(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      shift[j] = c1[j] - (batch.labels[kept[j]] != 1 ? 1.0 : 0.0);
    }
    absl::StatusOr<LossAndGradient<double>> extra =
        WeightedLossGrad(params, inputs, Eigen::VectorXd::Zero(m), shift);
    if (!extra.ok()) return extra.status();
    grad.values() += extra->grad.values();
  }

  absl::StatusOr<Params> next = SgdStep(params, grad, eta_theta);
  if (!next.ok()) return next.status();
  result.params = *std::move(next);
  return result;
}

Eigen::VectorXd ProjectOntoDualSet(const Eigen::VectorXd& values,
                                   double bound) {
  Eigen::VectorXd clipped = values.cwiseMax(0.0);
  const double total = clipped.sum();
  if (total <= bound) return clipped;

  std::vector<double> sorted(clipped.data(), clipped.data() + clipped.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double tau = 0.0;
  for (size_t j = 0; j < sorted.size(); ++j) {
    prefix += sorted[j];
    const double candidate = (prefix - bound) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  return (clipped.array() - tau).cwiseMax(0.0).matrix();
}

DualVariables AuditorStep(const DualVariables& duals,
                          const ViolationVector& violation, double eta_lambda) {
  DualVariables next = duals;
  Eigen::VectorXd ascent = duals.values;
  for (Eigen::Index k = 0; k < ascent.size(); ++k) {
    if (violation.present[k]) ascent[k] += eta_lambda * violation.values[k];
  }
  next.values = ProjectOntoDualSet(ascent, duals.bound);
  return next;
}

namespace {

absl::Status ValidateBoundInputs(const BoundInputs& in) {
  if (!(in.dual_bound > 0.0)) return absl::InvalidArgumentError("B must be > 0");
  if (!(in.epsilon_f >= 0.0)) {
    return absl::InvalidArgumentError("epsilon_f must be >= 0");
  }
  if (!(in.epsilon_p > 0.0)) {
    return absl::InvalidArgumentError("epsilon_p must be > 0");
  }
  if (!(in.rounds >= 1.0)) return absl::InvalidArgumentError("T must be >= 1");
  if (!(in.samples >= 1.0)) return absl::InvalidArgumentError("m must be >= 1");
  if (in.num_sensitive < 2) return absl::InvalidArgumentError("|A| must be >= 2");
  if (in.num_constraints < 1) return absl::InvalidArgumentError("|K| must be >= 1");
  if (!(in.delta > 0.0 && in.delta < 1.0)) {
    return absl::InvalidArgumentError("delta must be in (0, 1)");
  }
  if (!(in.beta > 0.0 && in.beta < 1.0)) {
    return absl::InvalidArgumentError("beta must be in (0, 1)");
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<double> CouplingBound(const BoundInputs& in) {
  if (absl::Status s = ValidateBoundInputs(in); !s.ok()) return s;
  const double log_term = std::log(8.0 * in.rounds * in.num_sensitive / in.delta);
  const double h = std::log(1.0 / in.delta) * log_term * log_term *
                   std::log(static_cast<double>(in.num_constraints) + 1.0);
  const double ef2 = in.epsilon_f * in.epsilon_f;
  return in.dual_bound * in.dual_bound * ef2 * ef2 *
         std::pow(in.rounds, 1.5) * h / (in.epsilon_p * in.epsilon_p);
}

absl::StatusOr<double> ConfidenceTerm(const BoundInputs& in) {
  if (absl::Status s = ValidateBoundInputs(in); !s.ok()) return s;
  return std::sqrt(std::log(1.0 / in.beta) / in.samples);
}

}  // namespace fedpf
