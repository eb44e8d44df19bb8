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

#ifndef FEDPF_FEDERATION_H_
#define FEDPF_FEDERATION_H_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "fedpf/dataset.h"
#include "fedpf/fairness.h"
#include "fedpf/game.h"
#include "fedpf/model.h"
#include "fedpf/privacy.h"

namespace fedpf {

enum class Mode {
  kFedAvg,       // no perturbation, no auditor
  kFairOnly,     // auditor on, attributes untouched
  kPrivacyOnly,  // attributes perturbed, auditor off
  kFedPF,        // both
};

enum class PerturbationSchedule {
  // Fresh randomized response every time a record enters a mini-batch.
  kPerVisit,
  // Each client perturbs its attributes once before the first round.
  kOneShot,
};

enum class DualScope {
  kGlobal,     // one dual vector shared by every client
  kPerClient,  // lambda_i per client, each driven by its own violations
};

enum class CellProbabilityScope {
  kBatch,   // frequencies of the perturbed mini-batch
  kClient,  // frequencies of the client's whole perturbed dataset
};

struct FederationConfig {
  int n_clients = 5;
  int rounds = 200;
  int local_epochs = 1;
  int batch_size = 128;
  double eta_theta = 0.05;
  double eta_lambda = 0.5;
  double dual_bound = 1.0;
  FairnessCriterion criterion;
  PrivacyConfig privacy;
  Mode mode = Mode::kFedAvg;
  uint64_t seed = 0;
  int hidden = 64;
  // Feed the observed attribute to the model as |A| - 1 indicator inputs.
  bool sensitive_as_feature = true;
  // Add the explicit lambda * grad(G) term on top of the cost embedding.
  bool lagrangian_grad = false;
  PerturbationSchedule perturbation = PerturbationSchedule::kPerVisit;
  DualScope dual_scope = DualScope::kGlobal;
  CellProbabilityScope cell_probs = CellProbabilityScope::kBatch;
  // Fraction of clients sampled each round.
  double participation = 1.0;
  int parallel_clients = 1;

  bool FairnessActive() const {
    return mode == Mode::kFairOnly || mode == Mode::kFedPF;
  }
  bool PrivacyActive() const {
    return (mode == Mode::kPrivacyOnly || mode == Mode::kFedPF) &&
           privacy.enabled;
  }
};

absl::Status ValidateFederationConfig(const FederationConfig& config);

// One row of the experiment log.
struct RoundMetrics {
  int round = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  // Test split, true attributes.
  double discrimination = 0.0;
  // Training split, true attributes.
  double train_discrimination = 0.0;
  // Training split, attributes as last observed by the clients.
  double perturbed_discrimination = 0.0;
  // Train cross-entropy + sum_k lambda_k * violation_k.
  double lagrangian = 0.0;
  double dual_l1 = 0.0;
  double max_tv = 0.0;
  double wall_ms = 0.0;
};

// Columns written to metrics.csv, in RoundMetrics order. wall_ms is kept out
// of the deterministic log and written to timing.csv instead.
inline constexpr std::array<absl::string_view, 11> kRoundMetricColumns = {
    "round",          "train_loss",           "test_loss",
    "train_error",    "test_error",           "discrimination",
    "train_discrimination", "perturbed_discrimination", "lagrangian",
    "dual_l1",        "max_tv"};

std::array<double, kRoundMetricColumns.size()> MetricValues(
    const RoundMetrics& m);

struct RunDiagnostics {
  int64_t perturbation_visits = 0;
  int64_t excluded_examples = 0;
  int64_t absent_cell_warnings = 0;
  int64_t undefined_discrimination = 0;
  int64_t gap_checks = 0;
  int64_t gap_violations = 0;
  // Rounds where perturbed discrimination exceeded true discrimination
  // (training split) by more than 0.01.
  int64_t contraction_violations = 0;
  double max_dual_l1 = 0.0;
};

struct RunResult {
  std::vector<RoundMetrics> rounds;
  RunDiagnostics diagnostics;
  Params final_model;
  std::vector<DualVariables> final_duals;
};

// What an observer sees after each round's aggregation and auditor update.
struct RoundSnapshot {
  int round = 0;
  std::span<const Params> client_models;
  const Params* global_model = nullptr;
  std::span<const DualVariables> duals;
};

using RoundObserver = std::function<absl::Status(const RoundSnapshot&)>;

// Runs the federated protocol for config.rounds rounds. Errors carry the
// round index that failed.
absl::StatusOr<RunResult> Run(const FederationConfig& config,
                              std::span<const ClientPartition> partitions,
                              std::span<const Record> test, int num_groups,
                              const RoundObserver& observer = {});

enum class SweepAxis { kEpsilonP, kEpsilonF };

struct SweepRow {
  double value = 0.0;
  int runs = 0;
  RoundMetrics mean;
  RoundMetrics stddev;
};

struct SweepRun {
  double value = 0.0;
  int repeat = 0;
  uint64_t seed = 0;
  std::vector<RoundMetrics> rounds;
  RunDiagnostics diagnostics;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepRun> runs;
};

// Applies `value` on `axis` to a copy of `config`.
FederationConfig WithAxisValue(FederationConfig config, SweepAxis axis,
                               double value);

// For each value and repeat i, partitions `train` and runs with seed
// config.seed + i; rows hold mean and sample std of the final round.
absl::StatusOr<SweepResult> Sweep(const FederationConfig& config,
                                  SweepAxis axis, std::span<const double> values,
                                  int repeats, std::span<const Record> train,
                                  std::span<const Record> test, int num_groups);

}  // namespace fedpf

#endif  // FEDPF_FEDERATION_H_
