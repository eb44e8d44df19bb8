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

#include "fedpf/cli.h"

#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_replace.h"
#include "fedpf/experiment.h"
#include "fedpf/metrics_io.h"

namespace fedpf {
namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

bool IsBoolSetting(const std::string& key) {
  return key == "sensitive_as_feature" || key == "lagrangian_grad";
}

}  // namespace

int RunCli(int argc, char** argv) {
  CLI::App app{"Federated learning simulator with private, fair training"};
  app.set_help_all_flag("--help-all", "Show all options");

  std::string config_path;
  app.add_option("--config", config_path,
                 "Flat key = value config file, or a config_echo.json");
  bool validate_only = false;
  app.add_flag("--validate-only", validate_only,
               "Print diagnostics and exit without running");

  // Every setting key is also a flag; values are parsed by ApplySetting.
  std::map<std::string, std::string> string_values;
  std::map<std::string, bool> bool_values;
  std::map<std::string, CLI::Option*> options;
  for (const std::string& key : SettingKeys()) {
    const std::string flag =
        absl::StrCat("--", absl::StrReplaceAll(key, {{"_", "-"}}));
    if (IsBoolSetting(key)) {
      bool_values[key] = false;
      options[key] = app.add_flag(flag, bool_values[key]);
    } else {
      string_values[key];
      options[key] = app.add_option(flag, string_values[key]);
    }
  }
  options["criterion"]->description("demp or eo");
  options["mode"]->description("fedavg, fair_only, privacy_only or fedpf");
  options["sweep_axis"]->description("epsilon_p or epsilon_f");
  options["sweep_values"]->description("Comma separated, e.g. 0.1,1,10");
  options["out"]->description("Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ExperimentSpec spec;
  if (!config_path.empty()) {
    absl::StatusOr<std::map<std::string, std::string>> file =
        LoadConfigFile(config_path);
    if (!file.ok()) {
      std::cerr << "error: " << file.status().message() << "\n";
      return kExitConfig;
    }
    if (absl::Status s = ApplySettings(spec, *file); !s.ok()) {
      std::cerr << "error: " << config_path << ": " << s.message() << "\n";
      return kExitConfig;
    }
  }
  std::map<std::string, std::string> overrides;
  for (const auto& [key, option] : options) {
    if (option->count() == 0) continue;
    overrides[key] = IsBoolSetting(key)
                         ? (bool_values[key] ? "true" : "false")
                         : string_values[key];
  }
  if (absl::Status s = ApplySettings(spec, overrides); !s.ok()) {
    std::cerr << "error: " << s.message() << "\n";
    return kExitConfig;
  }

  std::vector<std::string> errors;
  for (const Diagnostic& d : Validate(spec)) {
    if (d.IsError()) {
      errors.push_back(absl::StrCat(d.field, ": ", d.message));
    } else {
      std::cerr << "warning: " << d.field << ": " << d.message << "\n";
    }
  }
  if (!errors.empty()) {
    std::cerr << "error: " << absl::StrJoin(errors, "; ") << "\n";
    return kExitConfig;
  }
  if (validate_only) {
    std::cout << "config ok\n";
    return 0;
  }

  absl::StatusOr<ExperimentOutcome> outcome = RunExperiment(spec);
  if (!outcome.ok()) {
    std::cerr << "error: " << outcome.status().message() << "\n";
    return absl::IsInvalidArgument(outcome.status()) ||
                   absl::IsFailedPrecondition(outcome.status())
               ? kExitConfig
               : kExitRuntime;
  }
  if (outcome->run.has_value()) {
    const RoundMetrics& last = outcome->run->rounds.back();
    std::cout << "round " << last.round
              << " test_error=" << FormatDouble(last.test_error)
              << " test_loss=" << FormatDouble(last.test_loss)
              << " discrimination=" << FormatDouble(last.discrimination)
              << "\n";
  }
  for (const std::string& path : outcome->written) {
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace fedpf
