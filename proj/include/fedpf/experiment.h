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

#ifndef FEDPF_EXPERIMENT_H_
#define FEDPF_EXPERIMENT_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "fedpf/dataset.h"
#include "fedpf/federation.h"

namespace fedpf {

// Everything needed to reproduce one run or one sweep.
struct ExperimentSpec {
  // adult, bank, compas or synthetic.
  std::string dataset = "synthetic";
  std::string data_dir = FEDPF_DEFAULT_DATA_DIR;
  // Overrides data_dir/<dataset>.csv.
  std::string data_path;
  double train_fraction = 0.8;
  SyntheticSpec synthetic;
  FederationConfig federation;
  std::string out_dir = "fedpf_out";
  std::optional<SweepAxis> sweep_axis;
  std::vector<double> sweep_values;
  int repeats = 1;

  // Which keys were set explicitly; used for consistency warnings.
  bool criterion_set = false;
  bool epsilon_f_set = false;
  bool epsilon_p_set = false;
};

struct Diagnostic {
  enum class Severity { kError, kWarning };
  Severity severity = Severity::kError;
  std::string field;
  std::string message;

  bool IsError() const { return severity == Severity::kError; }
};

// Setting keys in canonical order; flags are the same names with '-'.
const std::vector<std::string>& SettingKeys();

// Applies one key = value pair.
absl::Status ApplySetting(ExperimentSpec& spec, absl::string_view key,
                          absl::string_view value);

// Flat "key = value" text; '#' starts a comment, strings may be quoted and
// lists are written [a, b, c].
absl::StatusOr<std::map<std::string, std::string>> ParseFlatConfig(
    absl::string_view text);

// Reads a flat config file, or a JSON object when the path ends in .json.
absl::StatusOr<std::map<std::string, std::string>> LoadConfigFile(
    const std::string& path);

// Applies settings in SettingKeys order; all failures are reported together.
absl::Status ApplySettings(ExperimentSpec& spec,
                           const std::map<std::string, std::string>& settings);

// Every problem with the experiment, errors and warnings, not just the first.
std::vector<Diagnostic> Validate(const ExperimentSpec& spec);

// All settings with exact values; feeding it back reproduces the experiment.
nlohmann::json ConfigEcho(const ExperimentSpec& spec);

absl::string_view ModeName(Mode mode);
absl::string_view AxisName(SweepAxis axis);

struct ExperimentData {
  std::vector<Record> train;
  std::vector<Record> test;
  int num_groups = 2;
  DatasetMeta meta;
};

absl::StatusOr<ExperimentData> LoadExperimentData(const ExperimentSpec& spec);

struct ExperimentOutcome {
  std::vector<std::string> written;
  std::optional<RunResult> run;
  std::optional<SweepResult> sweep;
};

// Loads data, executes the run or sweep, and writes metrics.csv,
// timing.csv, summary.json and config_echo.json (plus sweep.csv for sweeps)
// into spec.out_dir.
absl::StatusOr<ExperimentOutcome> RunExperiment(const ExperimentSpec& spec);

}  // namespace fedpf

#endif  // FEDPF_EXPERIMENT_H_
