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

#include "fedpf/federation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <thread>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "fedpf/random.h"

namespace fedpf {

std::array<double, kRoundMetricColumns.size()> MetricValues(
    const RoundMetrics& m) {
  return {static_cast<double>(m.round),
          m.train_loss,
          m.test_loss,
          m.train_error,
          m.test_error,
          m.discrimination,
          m.train_discrimination,
          m.perturbed_discrimination,
          m.lagrangian,
          m.dual_l1,
          m.max_tv};
}

absl::Status ValidateFederationConfig(const FederationConfig& c) {
  if (c.rounds < 1) return absl::InvalidArgumentError("rounds must be >= 1");
  if (c.n_clients < 1) {
    return absl::InvalidArgumentError("n_clients must be >= 1");
  }
  if (c.batch_size < 1) {
    return absl::InvalidArgumentError("batch_size must be >= 1");
  }
  if (c.local_epochs < 1) {
    return absl::InvalidArgumentError("local_epochs must be >= 1");
  }
  if (!(c.eta_theta >= 0.0) || !std::isfinite(c.eta_theta)) {
    return absl::InvalidArgumentError("eta_theta must be finite and >= 0");
  }
  if (!(c.eta_lambda >= 0.0) || !std::isfinite(c.eta_lambda)) {
    return absl::InvalidArgumentError("eta_lambda must be finite and >= 0");
  }
  if (!(c.dual_bound > 0.0) || !std::isfinite(c.dual_bound)) {
    return absl::InvalidArgumentError("dual_bound must be finite and > 0");
  }
  if (!(c.criterion.epsilon_f >= 0.0)) {
    return absl::InvalidArgumentError("epsilon_f must be >= 0");
  }
  if (!(c.privacy.epsilon_p >= 0.0)) {
    return absl::InvalidArgumentError("epsilon_p must be >= 0");
  }
  if (c.hidden < 1) return absl::InvalidArgumentError("hidden must be >= 1");
  if (!(c.participation > 0.0 && c.participation <= 1.0)) {
    return absl::InvalidArgumentError("participation must be in (0, 1]");
  }
  if (c.parallel_clients < 1) {
    return absl::InvalidArgumentError("parallel_clients must be >= 1");
  }
  return absl::OkStatus();
}

namespace {

using Clock = std::chrono::steady_clock;

int InputDim(const FederationConfig& config, int d, int num_groups) {
  return d + (config.sensitive_as_feature ? num_groups - 1 : 0);
}

// Rows [d, d + |A| - 1) hold the indicators 1{a == 1}, ..., 1{a == |A| - 1}.
void WriteAttributeIndicators(Eigen::Ref<Eigen::VectorXd> column, int d,
                              int num_groups, int attribute) {
  for (int g = 1; g < num_groups; ++g) {
    column[d + g - 1] = attribute == g ? 1.0 : 0.0;
  }
}

Eigen::MatrixXd BuildInputs(std::span<const Record> records, int input_dim,
                            const FederationConfig& config, int num_groups) {
  Eigen::MatrixXd inputs(input_dim, static_cast<Eigen::Index>(records.size()));
  for (size_t j = 0; j < records.size(); ++j) {
    const Eigen::Index col = static_cast<Eigen::Index>(j);
    const int d = static_cast<int>(records[j].features.size());
    inputs.col(col).head(d) = records[j].features;
    if (config.sensitive_as_feature) {
      WriteAttributeIndicators(inputs.col(col), d, num_groups,
                               records[j].sensitive);
    }
  }
  return inputs;
}

struct ClientState {
  int client_id = 0;
  int d = 0;
  Eigen::MatrixXd inputs;  // true attributes in the indicator rows
  std::vector<int> labels;
  std::vector<int> true_attributes;
  std::vector<int> observed;
  Rng shuffle_rng{0};
  Rng perturb_rng{0};
  std::vector<int> order;
};

struct ClientUpdate {
  Params params;
  int64_t excluded = 0;
  int64_t visits = 0;
};

struct EvalResult {
  double loss = 0.0;
  double error = 0.0;
  std::vector<int> predictions;
};

EvalResult Evaluate(const Params& params, const Eigen::MatrixXd& inputs,
                    std::span<const int> labels) {
  EvalResult out;
  const Eigen::MatrixXd logits = Logits(params, inputs);
  out.loss = MeanCrossEntropy<double>(logits, labels);
  out.predictions.resize(labels.size());
  int64_t wrong = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const int pred = PredictFromLogits(logits(0, j), logits(1, j));
    out.predictions[j] = pred;
    if (pred != labels[j]) ++wrong;
  }
  out.error = labels.empty() ? 0.0
                             : static_cast<double>(wrong) /
                                   static_cast<double>(labels.size());
  return out;
}

absl::StatusOr<ClientUpdate> TrainClient(
    ClientState& client, const Params& global, const DualVariables& duals,
    const MechanismDistribution& mechanism, const FederationConfig& config,
    int num_groups) {
  ClientUpdate update;
  update.params = global;
  const bool per_visit =
      config.PrivacyActive() &&
      config.perturbation == PerturbationSchedule::kPerVisit;
  const size_t n = client.labels.size();

  std::optional<Eigen::VectorXd> client_probs;
  LearnerOptions options;
  options.lagrangian_grad = config.FairnessActive() && config.lagrangian_grad;

  for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
    Shuffle(std::span<int>(client.order), client.shuffle_rng);
    if (per_visit) {
      // Every record is visited once per epoch, so the whole dataset can be
      // re-perturbed in visiting order before the batches are formed.
      for (int idx : client.order) {
        client.observed[idx] = PerturbAttribute(client.true_attributes[idx],
                                                mechanism, client.perturb_rng);
      }
      update.visits += static_cast<int64_t>(n);
    }
    if (config.cell_probs == CellProbabilityScope::kClient) {
      client_probs = CellProbabilities(client.observed, client.labels,
                                       duals.space);
      options.cell_probs_override = &*client_probs;
    }
    for (size_t start = 0; start < n;
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end =
          std::min(n, start + static_cast<size_t>(config.batch_size));
      LearnerBatch batch;
      batch.inputs.resize(client.inputs.rows(),
                          static_cast<Eigen::Index>(end - start));
      batch.attributes.reserve(end - start);
      batch.labels.reserve(end - start);
      for (size_t j = start; j < end; ++j) {
        const int idx = client.order[j];
        const Eigen::Index col = static_cast<Eigen::Index>(j - start);
        batch.inputs.col(col) = client.inputs.col(idx);
        if (config.sensitive_as_feature) {
          WriteAttributeIndicators(batch.inputs.col(col), client.d, num_groups,
                                   client.observed[idx]);
        }
        batch.attributes.push_back(client.observed[idx]);
        batch.labels.push_back(client.labels[idx]);
      }
      absl::StatusOr<LearnerResult> step = LearnerStep(
          update.params, batch, duals, config.eta_theta, options);
      if (!step.ok()) {
        return absl::Status(step.status().code(),
                            absl::StrCat("client ", client.client_id, ": ",
                                         step.status().message()));
      }
      update.excluded += step->excluded;
      update.params = std::move(step->params);
    }
  }
  if (!update.params.AllFinite()) {
    return absl::InternalError(
        absl::StrCat("client ", client.client_id, ": non-finite parameters"));
  }
  return update;
}

double SafeDiscrimination(const GroupStats& stats, RunDiagnostics& diag) {
  const Discrimination g = ComputeDiscrimination(stats);
  if (!g.defined) {
    ++diag.undefined_discrimination;
    return 0.0;
  }
  return g.value;
}

absl::Status WithRound(int round, const absl::Status& status) {
  return absl::Status(status.code(), absl::StrCat("round ", round, ": ",
                                                  status.message()));
}

std::vector<int> SampleParticipants(int n_clients, double fraction, Rng& rng) {
  std::vector<int> all(n_clients);
  for (int i = 0; i < n_clients; ++i) all[i] = i;
  if (fraction >= 1.0) return all;
  const int k = std::clamp(
      static_cast<int>(std::lround(fraction * n_clients)), 1, n_clients);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.Below(n_clients - i));
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

// Recomputes the mean in a different summation order and compares.
absl::Status CheckAggregation(std::span<const Params> models,
                              const Params& global) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(global.values().size());
  for (size_t i = models.size(); i-- > 0;) mean += models[i].values();
  mean /= static_cast<double>(models.size());
  const double scale = std::max(1.0, mean.cwiseAbs().maxCoeff());
  if ((mean - global.values()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    return absl::InternalError("aggregation is not the mean of client models");
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<RunResult> Run(const FederationConfig& config,
                              std::span<const ClientPartition> partitions,
                              std::span<const Record> test, int num_groups,
                              const RoundObserver& observer) {
  if (absl::Status s = ValidateFederationConfig(config); !s.ok()) return s;
  if (static_cast<int>(partitions.size()) != config.n_clients) {
    return absl::InvalidArgumentError(absl::StrCat(
        "expected ", config.n_clients, " partitions, got ", partitions.size()));
  }
  if (num_groups < 2) {
    return absl::InvalidArgumentError("need at least two sensitive groups");
  }
  int d = -1;
  for (const ClientPartition& p : partitions) {
    if (p.records.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("client ", p.client_id, " has no records"));
    }
    for (const Record& r : p.records) {
      if (d < 0) d = static_cast<int>(r.features.size());
      if (r.features.size() != d || r.sensitive < 0 ||
          r.sensitive >= num_groups || (r.label != 0 && r.label != 1)) {
        return absl::InvalidArgumentError(
            absl::StrCat("client ", p.client_id, ": malformed record"));
      }
    }
  }
  for (const Record& r : test) {
    if (r.features.size() != d || r.sensitive < 0 ||
        r.sensitive >= num_groups) {
      return absl::InvalidArgumentError("malformed test record");
    }
  }

  const ConstraintSpace space(config.criterion.kind, num_groups);
  PrivacyConfig privacy = config.privacy;
  privacy.enabled = config.PrivacyActive();
  absl::StatusOr<MechanismDistribution> mechanism =
      MechanismFor(privacy, num_groups);
  if (!mechanism.ok()) return mechanism.status();

  const int input_dim = InputDim(config, d, num_groups);
  Layout layout;
  layout.input_dim = input_dim;
  layout.hidden = config.hidden;
  Params global = InitParams<double>(layout, DeriveSeed(config.seed,
                                                        StreamTag::kInit));

  std::vector<ClientState> clients(partitions.size());
  for (size_t i = 0; i < partitions.size(); ++i) {
    const ClientPartition& p = partitions[i];
    ClientState& c = clients[i];
    c.client_id = p.client_id;
    c.d = d;
    c.inputs = BuildInputs(p.records, input_dim, config, num_groups);
    c.order.resize(p.records.size());
    for (size_t j = 0; j < p.records.size(); ++j) {
      c.labels.push_back(p.records[j].label);
      c.true_attributes.push_back(p.records[j].sensitive);
      c.order[j] = static_cast<int>(j);
    }
    c.observed = c.true_attributes;
    c.shuffle_rng = Rng(DeriveSeed(p.rng_seed, StreamTag::kShuffle));
    c.perturb_rng = Rng(DeriveSeed(p.rng_seed, StreamTag::kPerturb));
  }

  RunResult result;
  RunDiagnostics& diag = result.diagnostics;
  if (config.PrivacyActive() &&
      config.perturbation == PerturbationSchedule::kOneShot) {
    for (ClientState& c : clients) {
      for (size_t j = 0; j < c.observed.size(); ++j) {
        c.observed[j] =
            PerturbAttribute(c.true_attributes[j], *mechanism, c.perturb_rng);
      }
      diag.perturbation_visits += static_cast<int64_t>(c.observed.size());
    }
  }

  std::vector<int> test_labels;
  std::vector<int> test_attributes;
  for (const Record& r : test) {
    test_labels.push_back(r.label);
    test_attributes.push_back(r.sensitive);
  }
  const Eigen::MatrixXd test_inputs =
      BuildInputs(test, input_dim, config, num_groups);

  const size_t dual_count =
      config.dual_scope == DualScope::kGlobal ? 1 : partitions.size();
  std::vector<DualVariables> duals(dual_count,
                                   DualVariables(space, config.dual_bound));
  Rng sampling_rng(DeriveSeed(config.seed, StreamTag::kSampling));
  const DualVariables zero_duals(space, config.dual_bound);

  for (int round = 1; round <= config.rounds; ++round) {
    const Clock::time_point started = Clock::now();
    const std::vector<int> participants =
        SampleParticipants(config.n_clients, config.participation, sampling_rng);

    std::vector<std::optional<absl::StatusOr<ClientUpdate>>> updates(
        participants.size());
    auto train_one = [&](size_t slot) {
      const int i = participants[slot];
      const DualVariables& lambda =
          !config.FairnessActive()
              ? zero_duals
              : duals[config.dual_scope == DualScope::kGlobal ? 0 : i];
      updates[slot] = TrainClient(clients[i], global, lambda, *mechanism,
                                  config, num_groups);
    };
    const size_t workers = std::min<size_t>(
        static_cast<size_t>(config.parallel_clients), participants.size());
    if (workers <= 1) {
      for (size_t slot = 0; slot < participants.size(); ++slot) train_one(slot);
    } else {
      std::vector<std::thread> pool;
      for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (size_t slot = w; slot < participants.size(); slot += workers) {
            train_one(slot);
          }
        });
      }
      for (std::thread& t : pool) t.join();
    }

    std::vector<Params> client_models;
    client_models.reserve(participants.size());
    for (auto& u : updates) {
      if (!u->ok()) return WithRound(round, u->status());
      diag.excluded_examples += (*u)->excluded;
      diag.perturbation_visits += (*u)->visits;
      client_models.push_back(std::move((*u)->params));
    }
    absl::StatusOr<Params> averaged = AverageParams<double>(client_models);
    if (!averaged.ok()) return WithRound(round, averaged.status());
    global = *std::move(averaged);
    if (absl::Status s = CheckAggregation(client_models, global); !s.ok()) {
      return WithRound(round, s);
    }

    RoundMetrics m;
    m.round = round;

    // Global model on the training union: utility, true and perturbed group
    // statistics, and the per-client statistics the auditor consumes.
    GroupStats train_true(space);
    GroupStats train_observed(space);
    GroupStats audited(space);
    std::vector<GroupStats> client_observed(clients.size(), GroupStats(space));
    double loss_sum = 0.0;
    double wrong_sum = 0.0;
    double total = 0.0;
    for (size_t i = 0; i < clients.size(); ++i) {
      const ClientState& c = clients[i];
      const EvalResult eval = Evaluate(global, c.inputs, c.labels);
      const double n = static_cast<double>(c.labels.size());
      loss_sum += eval.loss * n;
      wrong_sum += eval.error * n;
      total += n;
      absl::StatusOr<GroupStats> t =
          ComputeGroupStats(eval.predictions, c.true_attributes, c.labels, space);
      if (!t.ok()) return WithRound(round, t.status());
      absl::StatusOr<GroupStats> o =
          ComputeGroupStats(eval.predictions, c.observed, c.labels, space);
      if (!o.ok()) return WithRound(round, o.status());
      train_true.Merge(*t);
      train_observed.Merge(*o);
      client_observed[i] = *std::move(o);
    }
    for (int i : participants) audited.Merge(client_observed[i]);
    m.train_loss = loss_sum / total;
    m.train_error = wrong_sum / total;
    m.train_discrimination = SafeDiscrimination(train_true, diag);
    m.perturbed_discrimination = SafeDiscrimination(train_observed, diag);

    if (!test.empty()) {
      const EvalResult eval = Evaluate(global, test_inputs, test_labels);
      m.test_loss = eval.loss;
      m.test_error = eval.error;
      absl::StatusOr<GroupStats> s =
          ComputeGroupStats(eval.predictions, test_attributes, test_labels, space);
      if (!s.ok()) return WithRound(round, s.status());
      m.discrimination = SafeDiscrimination(*s, diag);
    }

    // Lagrangian with the duals the clients trained against.
    double penalty = 0.0;
    std::vector<ViolationVector> violations;
    if (config.dual_scope == DualScope::kGlobal) {
      violations.push_back(ComputeViolations(audited, config.criterion));
      if (config.FairnessActive()) {
        penalty = duals[0].values.dot(violations[0].values);
      }
      if (audited.AbsentCells() > 0) ++diag.absent_cell_warnings;
    } else {
      for (int i : participants) {
        violations.push_back(
            ComputeViolations(client_observed[i], config.criterion));
        if (config.FairnessActive()) {
          penalty += duals[i].values.dot(violations.back().values);
        }
        if (client_observed[i].AbsentCells() > 0) ++diag.absent_cell_warnings;
      }
      penalty /= static_cast<double>(participants.size());
    }
    m.lagrangian = m.train_loss + penalty;

    if (config.FairnessActive()) {
      if (config.dual_scope == DualScope::kGlobal) {
        duals[0] = AuditorStep(duals[0], violations[0], config.eta_lambda);
      } else {
        for (size_t k = 0; k < participants.size(); ++k) {
          const int i = participants[k];
          duals[i] = AuditorStep(duals[i], violations[k], config.eta_lambda);
        }
      }
    }
    for (const DualVariables& lambda : duals) {
      if (!lambda.Feasible()) {
        return WithRound(round, absl::InternalError(absl::StrCat(
                                    "dual variables left the feasible set, "
                                    "l1 = ", lambda.L1())));
      }
      m.dual_l1 = std::max(m.dual_l1, lambda.L1());
    }
    diag.max_dual_l1 = std::max(diag.max_dual_l1, m.dual_l1);

    if (config.PrivacyActive()) {
      // Each uploaded model against its own client's data, per cell.
      std::vector<std::vector<GapEntry>> per_cell(space.num_cells());
      for (size_t k = 0; k < participants.size(); ++k) {
        const ClientState& c = clients[participants[k]];
        const EvalResult eval = Evaluate(client_models[k], c.inputs, c.labels);
        absl::StatusOr<GroupStats> t = ComputeGroupStats(
            eval.predictions, c.true_attributes, c.labels, space);
        if (!t.ok()) return WithRound(round, t.status());
        absl::StatusOr<GroupStats> o =
            ComputeGroupStats(eval.predictions, c.observed, c.labels, space);
        if (!o.ok()) return WithRound(round, o.status());
        for (int cell = 0; cell < space.num_cells(); ++cell) {
          absl::StatusOr<std::optional<double>> tv = CellTvDistance(
              c.true_attributes, c.observed, c.labels, space, cell);
          if (!tv.ok()) return WithRound(round, tv.status());
          if (!tv->has_value()) continue;
          m.max_tv = std::max(m.max_tv, **tv);
          per_cell[cell].push_back({*t->Gamma(cell), *o->Gamma(cell), **tv});
        }
      }
      for (const std::vector<GapEntry>& entries : per_cell) {
        if (entries.empty()) continue;
        ++diag.gap_checks;
        if (!FairnessGapSum(entries).holds) ++diag.gap_violations;
      }
      if (m.perturbed_discrimination > m.train_discrimination + 0.01) {
        ++diag.contraction_violations;
      }
    }

    m.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() -
                                                          started)
                    .count();
    result.rounds.push_back(m);

    if (observer) {
      RoundSnapshot snapshot;
      snapshot.round = round;
      snapshot.client_models = client_models;
      snapshot.global_model = &global;
      snapshot.duals = duals;
      if (absl::Status s = observer(snapshot); !s.ok()) {
        return WithRound(round, s);
      }
    }
  }

  result.final_model = std::move(global);
  result.final_duals = std::move(duals);
  return result;
}

FederationConfig WithAxisValue(FederationConfig config, SweepAxis axis,
                               double value) {
  switch (axis) {
    case SweepAxis::kEpsilonP:
      config.privacy.epsilon_p = value;
      config.privacy.enabled = true;
      break;
    case SweepAxis::kEpsilonF:
      config.criterion.epsilon_f = value;
      break;
  }
  return config;
}

absl::StatusOr<SweepResult> Sweep(const FederationConfig& config,
                                  SweepAxis axis, std::span<const double> values,
                                  int repeats, std::span<const Record> train,
                                  std::span<const Record> test, int num_groups) {
  if (values.empty()) return absl::InvalidArgumentError("sweep: no values");
  if (repeats < 1) return absl::InvalidArgumentError("sweep: repeats < 1");
  SweepResult out;
  constexpr size_t kCols = kRoundMetricColumns.size();
  for (double value : values) {
    std::vector<std::array<double, kCols>> finals;
    std::vector<double> wall;
    for (int i = 0; i < repeats; ++i) {
      FederationConfig run_config = WithAxisValue(config, axis, value);
      run_config.seed = config.seed + static_cast<uint64_t>(i);
      absl::StatusOr<std::vector<ClientPartition>> parts =
          PartitionIid(train, run_config.n_clients, run_config.seed);
      if (!parts.ok()) return parts.status();
      absl::StatusOr<RunResult> run =
          Run(run_config, *parts, test, num_groups);
      if (!run.ok()) {
        return absl::Status(run.status().code(),
                            absl::StrCat("sweep value ", value, " repeat ", i,
                                         ": ", run.status().message()));
      }
      finals.push_back(MetricValues(run->rounds.back()));
      wall.push_back(run->rounds.back().wall_ms);
      out.runs.push_back({value, i, run_config.seed, std::move(run->rounds),
                          run->diagnostics});
    }
    std::array<double, kCols> mean{};
    std::array<double, kCols> sd{};
    for (const auto& f : finals) {
      for (size_t k = 0; k < kCols; ++k) mean[k] += f[k];
    }
    for (double& v : mean) v /= static_cast<double>(finals.size());
    if (finals.size() > 1) {
      for (const auto& f : finals) {
        for (size_t k = 0; k < kCols; ++k) {
          sd[k] += (f[k] - mean[k]) * (f[k] - mean[k]);
        }
      }
      for (double& v : sd) {
        v = std::sqrt(v / static_cast<double>(finals.size() - 1));
      }
    }
    auto to_metrics = [](const std::array<double, kCols>& a) {
      RoundMetrics m;
      m.round = static_cast<int>(std::lround(a[0]));
      m.train_loss = a[1];
      m.test_loss = a[2];
      m.train_error = a[3];
      m.test_error = a[4];
      m.discrimination = a[5];
      m.train_discrimination = a[6];
      m.perturbed_discrimination = a[7];
      m.lagrangian = a[8];
      m.dual_l1 = a[9];
      m.max_tv = a[10];
      return m;
    };
    SweepRow row;
    row.value = value;
    row.runs = static_cast<int>(finals.size());
    row.mean = to_metrics(mean);
    row.stddev = to_metrics(sd);
    for (double x : wall) row.mean.wall_ms += x / static_cast<double>(wall.size());
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace fedpf
