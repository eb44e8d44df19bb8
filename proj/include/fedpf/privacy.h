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

#ifndef FEDPF_PRIVACY_H_
#define FEDPF_PRIVACY_H_

#include <limits>

#include <Eigen/Core>

#include "absl/status/statusor.h"
#include "fedpf/random.h"

namespace fedpf {

// Per-record budget for randomized response on the sensitive attribute.
// An infinite epsilon disables perturbation.
struct PrivacyConfig {
  double epsilon_p = std::numeric_limits<double>::infinity();
  bool enabled = false;
};

// Output law of the exponential mechanism over |A| attribute values:
//   keep:  e^eps / (|A| - 1 + e^eps)
//   flip:      1 / (|A| - 1 + e^eps)   (to each other value)
struct MechanismDistribution {
  double keep_prob = 1.0;
  double flip_prob = 0.0;
  int num_values = 2;
};

// Fails for |A| < 2 or a negative/NaN epsilon. Evaluated in a form that stays
// finite for large epsilon; epsilon = +inf gives keep 1, flip 0.
absl::StatusOr<MechanismDistribution> MakeMechanismDistribution(
    double epsilon_p, int num_values);

// The identity mechanism when the config is disabled.
absl::StatusOr<MechanismDistribution> MechanismFor(const PrivacyConfig& config,
                                                   int num_values);

// Keeps `a` with probability keep_prob, otherwise returns one of the other
// |A| - 1 values uniformly.
int PerturbAttribute(int a, const MechanismDistribution& dist, Rng& rng);

// Expected group statistic once attributes pass through the mechanism:
//   out_a = keep * g_a + flip * sum_{a' != a} g_a'
Eigen::VectorXd PerturbedStatistic(const Eigen::Ref<const Eigen::VectorXd>& gammas,
                                   const MechanismDistribution& dist);

// Half the l1 distance. Both inputs must be distributions of equal length.
absl::StatusOr<double> TvDistance(const Eigen::Ref<const Eigen::VectorXd>& p,
                                  const Eigen::Ref<const Eigen::VectorXd>& q);

}  // namespace fedpf

#endif  // FEDPF_PRIVACY_H_
