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

#ifndef FEDPF_METRICS_IO_H_
#define FEDPF_METRICS_IO_H_

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "fedpf/fairness.h"
#include "fedpf/federation.h"
#include "fedpf/game.h"
#include "fedpf/model.h"

namespace fedpf {

// %.9g, with "inf", "-inf" and "nan" spelled out.
std::string FormatDouble(double value);

// Header plus one row per round, columns as in kRoundMetricColumns.
std::string MetricsCsv(std::span<const RoundMetrics> rounds);

// round,wall_ms
std::string TimingCsv(std::span<const RoundMetrics> rounds);

// Per-run trajectories of a sweep, prefixed with value,repeat,seed.
std::string SweepMetricsCsv(std::span<const SweepRun> runs);

// One row per swept value: value,runs, then mean_<col>,std_<col> pairs.
std::string SweepTableCsv(absl::string_view axis_name,
                          std::span<const SweepRow> rows);

nlohmann::json ToJson(const RoundMetrics& m);
nlohmann::json ToJson(const RunDiagnostics& d);
// Keyed by cell name, e.g. {"a0y1": {"positives": 3, "count": 10}}.
nlohmann::json ToJson(const GroupStats& stats);
// Keyed by signed key name; absent keys map to null.
nlohmann::json ToJson(const ViolationVector& v);
// Keyed by signed key name, plus "bound".
nlohmann::json ToJson(const DualVariables& duals);

nlohmann::json ParamsToJson(const Params& params);
absl::StatusOr<Params> ParamsFromJson(const nlohmann::json& j);

absl::Status WriteTextFile(const std::string& path, absl::string_view contents);
absl::StatusOr<std::string> ReadTextFile(const std::string& path);

}  // namespace fedpf

#endif  // FEDPF_METRICS_IO_H_
