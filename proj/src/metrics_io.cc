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

#include "fedpf/metrics_io.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/string_view.h"

namespace fedpf {

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return absl::StrFormat("%.9g", value);
}

namespace {

void AppendMetricCells(std::string& out, const RoundMetrics& m) {
  const auto values = MetricValues(m);
  absl::StrAppend(&out, m.round);
  for (size_t k = 1; k < values.size(); ++k) {
    absl::StrAppend(&out, ",", FormatDouble(values[k]));
  }
}

double ToDouble(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

nlohmann::json Number(double v) {
  if (std::isfinite(v)) return v;
  return FormatDouble(v);
}

}  // namespace

std::string MetricsCsv(std::span<const RoundMetrics> rounds) {
  std::string out = absl::StrCat(absl::StrJoin(kRoundMetricColumns, ","), "\n");
  for (const RoundMetrics& m : rounds) {
    AppendMetricCells(out, m);
    out += "\n";
  }
  return out;
}

std::string TimingCsv(std::span<const RoundMetrics> rounds) {
  std::string out = "round,wall_ms\n";
  for (const RoundMetrics& m : rounds) {
    absl::StrAppend(&out, m.round, ",", FormatDouble(m.wall_ms), "\n");
  }
  return out;
}

std::string SweepMetricsCsv(std::span<const SweepRun> runs) {
  std::string out = absl::StrCat("value,repeat,seed,",
                                 absl::StrJoin(kRoundMetricColumns, ","), "\n");
  for (const SweepRun& run : runs) {
    for (const RoundMetrics& m : run.rounds) {
      absl::StrAppend(&out, FormatDouble(run.value), ",", run.repeat, ",",
                      run.seed, ",");
      AppendMetricCells(out, m);
      out += "\n";
    }
  }
  return out;
}

std::string SweepTableCsv(absl::string_view axis_name,
                          std::span<const SweepRow> rows) {
  std::string out = absl::StrCat(axis_name, ",runs");
  for (absl::string_view col : kRoundMetricColumns) {
    absl::StrAppend(&out, ",mean_", col, ",std_", col);
  }
  out += "\n";
  for (const SweepRow& row : rows) {
    absl::StrAppend(&out, FormatDouble(row.value), ",", row.runs);
    const auto mean = MetricValues(row.mean);
    const auto sd = MetricValues(row.stddev);
    for (size_t k = 0; k < mean.size(); ++k) {
      absl::StrAppend(&out, ",", FormatDouble(mean[k]), ",",
                      FormatDouble(sd[k]));
    }
    out += "\n";
  }
  return out;
}

nlohmann::json ToJson(const RoundMetrics& m) {
  nlohmann::json j = nlohmann::json::object();
  const auto values = MetricValues(m);
  j["round"] = m.round;
  for (size_t k = 1; k < values.size(); ++k) {
    j[std::string(kRoundMetricColumns[k])] = Number(values[k]);
  }
  return j;
}

nlohmann::json ToJson(const RunDiagnostics& d) {
  return {{"perturbation_visits", d.perturbation_visits},
          {"excluded_examples", d.excluded_examples},
          {"absent_cell_warnings", d.absent_cell_warnings},
          {"undefined_discrimination", d.undefined_discrimination},
          {"gap_checks", d.gap_checks},
          {"gap_violations", d.gap_violations},
          {"contraction_violations", d.contraction_violations},
          {"max_dual_l1", d.max_dual_l1}};
}

nlohmann::json ToJson(const GroupStats& stats) {
  nlohmann::json j = nlohmann::json::object();
  for (int cell = 0; cell < stats.space.num_cells(); ++cell) {
    j[stats.space.CellName(cell)] = {{"positives", stats.positives[cell]},
                                     {"count", stats.counts[cell]}};
  }
  return j;
}

nlohmann::json ToJson(const ViolationVector& v) {
  nlohmann::json j = nlohmann::json::object();
  for (int key = 0; key < v.space.size(); ++key) {
    j[v.space.KeyName(key)] =
        v.present[key] ? nlohmann::json(v.values[key]) : nlohmann::json();
  }
  return j;
}

nlohmann::json ToJson(const DualVariables& duals) {
  nlohmann::json values = nlohmann::json::object();
  for (int key = 0; key < duals.space.size(); ++key) {
    values[duals.space.KeyName(key)] = duals.values[key];
  }
  return {{"bound", duals.bound}, {"values", values}};
}

nlohmann::json ParamsToJson(const Params& params) {
  const Layout& l = params.layout();
  nlohmann::json j;
  j["layout"] = {{"input_dim", l.input_dim},
                 {"hidden", l.hidden},
                 {"second", l.second},
                 {"outputs", l.outputs}};
  j["values"] = std::vector<double>(params.values().data(),
                                    params.values().data() +
                                        params.values().size());
  return j;
}

absl::StatusOr<Params> ParamsFromJson(const nlohmann::json& j) {
  try {
    Layout l;
    const nlohmann::json& lj = j.at("layout");
    l.input_dim = lj.at("input_dim").get<int>();
    l.hidden = lj.at("hidden").get<int>();
    l.second = lj.at("second").get<int>();
    l.outputs = lj.at("outputs").get<int>();
    if (l.input_dim < 1 || l.hidden < 1 || l.second < 1 || l.outputs != 2) {
      return absl::InvalidArgumentError("checkpoint: bad layout");
    }
    const nlohmann::json& vals = j.at("values");
    if (!vals.is_array() ||
        static_cast<Eigen::Index>(vals.size()) != l.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "checkpoint: expected ", l.size(), " values, got ", vals.size()));
    }
    Params params(l);
    for (Eigen::Index k = 0; k < l.size(); ++k) {
      params.values()[k] = ToDouble(vals[static_cast<size_t>(k)]);
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("checkpoint: ", e.what()));
  }
}

absl::Status WriteTextFile(const std::string& path, absl::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) return absl::DataLossError(absl::StrCat("short write to ", path));
  return absl::OkStatus();
}

absl::StatusOr<std::string> ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace fedpf
