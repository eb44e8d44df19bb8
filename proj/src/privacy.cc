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

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace fedpf {

absl::StatusOr<MechanismDistribution> MakeMechanismDistribution(
    double epsilon_p, int num_values) {
  if (num_values < 2) {
    return absl::InvalidArgumentError(
        "exponential mechanism needs at least two attribute values");
  }
  if (!(epsilon_p >= 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon_p must be >= 0, got ", epsilon_p));
  }
  // Divide through by e^eps: keep = 1 / (1 + (|A|-1) e^-eps).
  const double tail = std::exp(-epsilon_p);
  const double denom = 1.0 + (num_values - 1) * tail;
  MechanismDistribution dist;
  dist.num_values = num_values;
  dist.keep_prob = 1.0 / denom;
  dist.flip_prob = tail / denom;
  return dist;
}

absl::StatusOr<MechanismDistribution> MechanismFor(const PrivacyConfig& config,
                                                   int num_values) {
  if (!config.enabled) {
    return MakeMechanismDistribution(std::numeric_limits<double>::infinity(),
                                     num_values);
  }
  return MakeMechanismDistribution(config.epsilon_p, num_values);
}

int PerturbAttribute(int a, const MechanismDistribution& dist, Rng& rng) {
  if (dist.keep_prob >= 1.0) return a;
  if (rng.Uniform() < dist.keep_prob) return a;
  const int other = static_cast<int>(rng.Below(dist.num_values - 1));
  return other >= a ? other + 1 : other;
}

Eigen::VectorXd PerturbedStatistic(const Eigen::Ref<const Eigen::VectorXd>& gammas,
                                   const MechanismDistribution& dist) {
  const double total = gammas.sum();
  return dist.keep_prob * gammas.array() +
         dist.flip_prob * (total - gammas.array());
}

absl::StatusOr<double> TvDistance(const Eigen::Ref<const Eigen::VectorXd>& p,
                                  const Eigen::Ref<const Eigen::VectorXd>& q) {
  if (p.size() != q.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "tv_distance: length mismatch ", p.size(), " vs ", q.size()));
  }
  for (const auto* v : {&p, &q}) {
    if ((v->array() < 0.0).any() || std::abs(v->sum() - 1.0) > 1e-9) {
      return absl::InvalidArgumentError(
          "tv_distance: inputs must be probability vectors");
    }
  }
  return 0.5 * (p - q).lpNorm<1>();
}

}  // namespace fedpf
