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

#include "fedpf/experiment.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/string_view.h"
#include "absl/strings/strip.h"
#include "fedpf/metrics_io.h"
#include "fedpf/random.h"

namespace fedpf {
namespace {

absl::StatusOr<double> ParseDouble(absl::string_view key, absl::string_view v) {
  double out = 0.0;
  if (!absl::SimpleAtod(v, &out) || std::isnan(out)) {
    return absl::InvalidArgumentError(
        absl::StrCat(key, ": expected a number, got '", v, "'"));
  }
  return out;
}

absl::StatusOr<int> ParseInt(absl::string_view key, absl::string_view v) {
  int out = 0;
  if (!absl::SimpleAtoi(v, &out)) {
    return absl::InvalidArgumentError(
        absl::StrCat(key, ": expected an integer, got '", v, "'"));
  }
  return out;
}

absl::StatusOr<bool> ParseBool(absl::string_view key, absl::string_view v) {
  bool out = false;
  if (!absl::SimpleAtob(v, &out)) {
    return absl::InvalidArgumentError(
        absl::StrCat(key, ": expected true or false, got '", v, "'"));
  }
  return out;
}

absl::StatusOr<std::vector<double>> ParseList(absl::string_view key,
                                              absl::string_view v) {
  absl::string_view body = absl::StripAsciiWhitespace(v);
  if (absl::ConsumePrefix(&body, "[") && !absl::ConsumeSuffix(&body, "]")) {
    return absl::InvalidArgumentError(absl::StrCat(key, ": unclosed list"));
  }
  std::vector<double> out;
  for (absl::string_view item : absl::StrSplit(body, ',', absl::SkipWhitespace())) {
    absl::StatusOr<double> x = ParseDouble(key, absl::StripAsciiWhitespace(item));
    if (!x.ok()) return x.status();
    out.push_back(*x);
  }
  return out;
}

std::string Lower(absl::string_view v) {
  std::string s(v);
  absl::AsciiStrToLower(&s);
  for (char& c : s) {
    if (c == '-') c = '_';
  }
  return s;
}

absl::StatusOr<Mode> ParseMode(absl::string_view v) {
  const std::string s = Lower(v);
  if (s == "fedavg") return Mode::kFedAvg;
  if (s == "fair_only" || s == "faironly") return Mode::kFairOnly;
  if (s == "privacy_only" || s == "privacyonly") return Mode::kPrivacyOnly;
  if (s == "fedpf") return Mode::kFedPF;
  return absl::InvalidArgumentError(absl::StrCat(
      "mode: expected fedavg, fair_only, privacy_only or fedpf, got '", v, "'"));
}

std::string Quote(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return absl::StrFormat("%.17g", v);
}

using Setter = std::function<absl::Status(ExperimentSpec&, absl::string_view,
                                          absl::string_view)>;

template <typename Parse, typename Assign>
Setter Make(Parse parse, Assign assign) {
  return [parse, assign](ExperimentSpec& spec, absl::string_view key,
                         absl::string_view value) -> absl::Status {
    auto parsed = parse(key, value);
    if (!parsed.ok()) return parsed.status();
    assign(spec, *parsed);
    return absl::OkStatus();
  };
}

absl::StatusOr<std::string> AsString(absl::string_view, absl::string_view v) {
  return std::string(v);
}

const std::vector<std::pair<std::string, Setter>>& Setters() {
  static const auto* setters = new std::vector<std::pair<std::string, Setter>>{
      {"dataset", Make(AsString, [](ExperimentSpec& s, std::string v) {
         s.dataset = Lower(v);
       })},
      {"data_dir", Make(AsString, [](ExperimentSpec& s, std::string v) {
         s.data_dir = std::move(v);
       })},
      {"data_path", Make(AsString, [](ExperimentSpec& s, std::string v) {
         s.data_path = std::move(v);
       })},
      {"train_fraction", Make(ParseDouble, [](ExperimentSpec& s, double v) {
         s.train_fraction = v;
       })},
      {"synthetic_n", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.synthetic.n = v < 0 ? 0 : static_cast<size_t>(v);
       })},
      {"synthetic_d", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.synthetic.d = v;
       })},
      {"synthetic_groups", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.synthetic.num_groups = v;
       })},
      {"synthetic_gap", Make(ParseDouble, [](ExperimentSpec& s, double v) {
         s.synthetic.group_gap = v;
       })},
      {"mode",
       [](ExperimentSpec& s, absl::string_view, absl::string_view v) {
         absl::StatusOr<Mode> m = ParseMode(v);
         if (!m.ok()) return m.status();
         s.federation.mode = *m;
         return absl::OkStatus();
       }},
      {"criterion",
       [](ExperimentSpec& s, absl::string_view, absl::string_view v) {
         const std::string c = Lower(v);
         if (c == "eo") {
           s.federation.criterion.kind = FairnessKind::kEqualizedOdds;
         } else if (c == "demp") {
           s.federation.criterion.kind = FairnessKind::kDemographicParity;
         } else {
           return absl::InvalidArgumentError(
               absl::StrCat("criterion: expected demp or eo, got '", v, "'"));
         }
         s.criterion_set = true;
         return absl::OkStatus();
       }},
      {"epsilon_f", Make(ParseDouble, [](ExperimentSpec& s, double v) {
         s.federation.criterion.epsilon_f = v;
         s.epsilon_f_set = true;
       })},
      {"epsilon_p", Make(ParseDouble, [](ExperimentSpec& s, double v) {
         s.federation.privacy.epsilon_p = v;
         s.federation.privacy.enabled = true;
         s.epsilon_p_set = true;
       })},
      {"rounds", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.federation.rounds = v;
       })},
      {"clients", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.federation.n_clients = v;
       })},
      {"local_epochs", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.federation.local_epochs = v;
       })},
      {"batch", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.federation.batch_size = v;
       })},
      {"eta_theta", Make(ParseDouble, [](ExperimentSpec& s, double v) {
         s.federation.eta_theta = v;
       })},
      {"eta_lambda", Make(ParseDouble, [](ExperimentSpec& s, double v) {
         s.federation.eta_lambda = v;
       })},
      {"dual_bound", Make(ParseDouble, [](ExperimentSpec& s, double v) {
         s.federation.dual_bound = v;
       })},
      {"seed",
       [](ExperimentSpec& s, absl::string_view key, absl::string_view v) {
         uint64_t seed = 0;
         if (!absl::SimpleAtoi(v, &seed)) {
           return absl::InvalidArgumentError(absl::StrCat(
               key, ": expected a nonnegative integer, got '", v, "'"));
         }
         s.federation.seed = seed;
         return absl::OkStatus();
       }},
      {"hidden", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.federation.hidden = v;
       })},
      {"sensitive_as_feature", Make(ParseBool, [](ExperimentSpec& s, bool v) {
         s.federation.sensitive_as_feature = v;
       })},
      {"lagrangian_grad", Make(ParseBool, [](ExperimentSpec& s, bool v) {
         s.federation.lagrangian_grad = v;
       })},
      {"perturbation",
       [](ExperimentSpec& s, absl::string_view, absl::string_view v) {
         const std::string p = Lower(v);
         if (p == "per_visit") {
           s.federation.perturbation = PerturbationSchedule::kPerVisit;
         } else if (p == "one_shot") {
           s.federation.perturbation = PerturbationSchedule::kOneShot;
         } else {
           return absl::InvalidArgumentError(absl::StrCat(
               "perturbation: expected per_visit or one_shot, got '", v, "'"));
         }
         return absl::OkStatus();
       }},
      {"dual_scope",
       [](ExperimentSpec& s, absl::string_view, absl::string_view v) {
         const std::string p = Lower(v);
         if (p == "global") {
           s.federation.dual_scope = DualScope::kGlobal;
         } else if (p == "per_client") {
           s.federation.dual_scope = DualScope::kPerClient;
         } else {
           return absl::InvalidArgumentError(absl::StrCat(
               "dual_scope: expected global or per_client, got '", v, "'"));
         }
         return absl::OkStatus();
       }},
      {"cell_probs",
       [](ExperimentSpec& s, absl::string_view, absl::string_view v) {
         const std::string p = Lower(v);
         if (p == "batch") {
           s.federation.cell_probs = CellProbabilityScope::kBatch;
         } else if (p == "client") {
           s.federation.cell_probs = CellProbabilityScope::kClient;
         } else {
           return absl::InvalidArgumentError(absl::StrCat(
               "cell_probs: expected batch or client, got '", v, "'"));
         }
         return absl::OkStatus();
       }},
      {"participation", Make(ParseDouble, [](ExperimentSpec& s, double v) {
         s.federation.participation = v;
       })},
      {"parallel_clients", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.federation.parallel_clients = v;
       })},
      {"sweep_axis",
       [](ExperimentSpec& s, absl::string_view, absl::string_view v) {
         const std::string a = Lower(v);
         if (a == "epsilon_p") {
           s.sweep_axis = SweepAxis::kEpsilonP;
         } else if (a == "epsilon_f") {
           s.sweep_axis = SweepAxis::kEpsilonF;
         } else if (a.empty() || a == "none") {
           s.sweep_axis.reset();
         } else {
           return absl::InvalidArgumentError(absl::StrCat(
               "sweep_axis: expected epsilon_p or epsilon_f, got '", v, "'"));
         }
         return absl::OkStatus();
       }},
      {"sweep_values",
       Make(ParseList, [](ExperimentSpec& s, std::vector<double> v) {
         s.sweep_values = std::move(v);
       })},
      {"repeats", Make(ParseInt, [](ExperimentSpec& s, int v) {
         s.repeats = v;
       })},
      {"out", Make(AsString, [](ExperimentSpec& s, std::string v) {
         s.out_dir = std::move(v);
       })},
  };
  return *setters;
}

absl::string_view Trim(absl::string_view s) { return absl::StripAsciiWhitespace(s); }

std::string Unquote(absl::string_view v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\''))) {
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

std::string JsonValueToSetting(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number()) return Quote(v.get<double>());
  if (v.is_array()) {
    std::vector<std::string> parts;
    for (const nlohmann::json& item : v) parts.push_back(JsonValueToSetting(item));
    return absl::StrCat("[", absl::StrJoin(parts, ", "), "]");
  }
  return v.dump();
}

bool KnownDataset(absl::string_view name) {
  return name == "adult" || name == "bank" || name == "compas" ||
         name == "synthetic";
}

}  // namespace

const std::vector<std::string>& SettingKeys() {
  static const auto* keys = [] {
    auto* out = new std::vector<std::string>();
    for (const auto& [key, setter] : Setters()) out->push_back(key);
    return out;
  }();
  return *keys;
}

absl::Status ApplySetting(ExperimentSpec& spec, absl::string_view key,
                          absl::string_view value) {
  const std::string canonical = Lower(key);
  for (const auto& [name, setter] : Setters()) {
    if (name == canonical) return setter(spec, name, Trim(value));
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown setting '", key, "'"));
}

absl::StatusOr<std::map<std::string, std::string>> ParseFlatConfig(
    absl::string_view text) {
  std::map<std::string, std::string> out;
  int line_no = 0;
  for (absl::string_view raw : absl::StrSplit(text, '\n')) {
    ++line_no;
    // Drop a trailing comment that is not inside quotes.
    char quote = 0;
    size_t cut = raw.size();
    for (size_t i = 0; i < raw.size(); ++i) {
      const char c = raw[i];
      if (quote != 0) {
        if (c == quote) quote = 0;
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '#') {
        cut = i;
        break;
      }
    }
    const absl::string_view line = Trim(raw.substr(0, cut));
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": expected key = value"));
    }
    const std::string key = Lower(Trim(line.substr(0, eq)));
    if (key.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": empty key"));
    }
    if (!out.emplace(key, Unquote(Trim(line.substr(eq + 1)))).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": duplicate key '", key, "'"));
    }
  }
  return out;
}

absl::StatusOr<std::map<std::string, std::string>> LoadConfigFile(
    const std::string& path) {
  absl::StatusOr<std::string> text = ReadTextFile(path);
  if (!text.ok()) {
    return absl::NotFoundError(absl::StrCat("config file not found: ", path));
  }
  if (!absl::EndsWith(path, ".json")) {
    absl::StatusOr<std::map<std::string, std::string>> parsed =
        ParseFlatConfig(*text);
    if (!parsed.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": ", parsed.status().message()));
    }
    return parsed;
  }
  nlohmann::json j = nlohmann::json::parse(*text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": expected a JSON object"));
  }
  std::map<std::string, std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    out[Lower(it.key())] = JsonValueToSetting(it.value());
  }
  return out;
}

absl::Status ApplySettings(ExperimentSpec& spec,
                           const std::map<std::string, std::string>& settings) {
  std::vector<std::string> errors;
  for (const auto& [key, value] : settings) {
    if (std::none_of(Setters().begin(), Setters().end(),
                     [&](const auto& s) { return s.first == key; })) {
      errors.push_back(absl::StrCat("unknown setting '", key, "'"));
    }
  }
  for (const auto& [key, setter] : Setters()) {
    auto it = settings.find(key);
    if (it == settings.end()) continue;
    if (absl::Status s = setter(spec, key, Trim(it->second)); !s.ok()) {
      errors.push_back(std::string(s.message()));
    }
  }
  if (!errors.empty()) {
    return absl::InvalidArgumentError(absl::StrJoin(errors, "; "));
  }
  return absl::OkStatus();
}

std::vector<Diagnostic> Validate(const ExperimentSpec& spec) {
  std::vector<Diagnostic> out;
  auto error = [&](std::string field, std::string message) {
    out.push_back({Diagnostic::Severity::kError, std::move(field),
                   std::move(message)});
  };
  auto warn = [&](std::string field, std::string message) {
    out.push_back({Diagnostic::Severity::kWarning, std::move(field),
                   std::move(message)});
  };
  const FederationConfig& f = spec.federation;

  if (!KnownDataset(spec.dataset)) {
    error("dataset", absl::StrCat("unknown dataset '", spec.dataset,
                                  "' (adult, bank, compas, synthetic)"));
  }
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    error("train_fraction", "must be in (0, 1)");
  }
  if (spec.dataset == "synthetic") {
    if (spec.synthetic.d < 1) error("synthetic_d", "must be >= 1");
    if (spec.synthetic.num_groups < 2) error("synthetic_groups", "must be >= 2");
    if (!(spec.synthetic.group_gap >= 0.0 && spec.synthetic.group_gap < 1.0)) {
      error("synthetic_gap", "must be in [0, 1)");
    }
    if (spec.synthetic.n < 2) error("synthetic_n", "must be >= 2");
  }
  if (!(f.criterion.epsilon_f >= 0.0) || !std::isfinite(f.criterion.epsilon_f)) {
    error("epsilon_f", "must be finite and >= 0");
  }
  if (!(f.privacy.epsilon_p >= 0.0)) error("epsilon_p", "must be >= 0");
  if (!(f.dual_bound > 0.0) || !std::isfinite(f.dual_bound)) {
    error("dual_bound", "must be finite and > 0");
  }
  if (f.rounds < 1) error("rounds", "must be >= 1");
  if (f.n_clients < 1) error("clients", "must be >= 1");
  if (f.batch_size < 1) error("batch", "must be >= 1");
  if (f.local_epochs < 1) error("local_epochs", "must be >= 1");
  if (!(f.eta_theta >= 0.0) || !std::isfinite(f.eta_theta)) {
    error("eta_theta", "must be finite and >= 0");
  }
  if (!(f.eta_lambda >= 0.0) || !std::isfinite(f.eta_lambda)) {
    error("eta_lambda", "must be finite and >= 0");
  }
  if (f.hidden < 1) error("hidden", "must be >= 1");
  if (!(f.participation > 0.0 && f.participation <= 1.0)) {
    error("participation", "must be in (0, 1]");
  }
  if (f.parallel_clients < 1) error("parallel_clients", "must be >= 1");
  if (spec.out_dir.empty()) error("out", "must name a directory");
  if (spec.repeats < 1) error("repeats", "must be >= 1");

  if (spec.sweep_axis.has_value()) {
    if (spec.sweep_values.empty()) {
      error("sweep_values", "a sweep needs at least one value");
    }
    for (double v : spec.sweep_values) {
      if (*spec.sweep_axis == SweepAxis::kEpsilonP && !(v >= 0.0)) {
        error("sweep_values", "epsilon_p values must be >= 0");
        break;
      }
      if (*spec.sweep_axis == SweepAxis::kEpsilonF &&
          !(v >= 0.0 && std::isfinite(v))) {
        error("sweep_values", "epsilon_f values must be finite and >= 0");
        break;
      }
    }
  } else if (!spec.sweep_values.empty()) {
    error("sweep_axis", "sweep_values given without a sweep axis");
  } else if (spec.repeats != 1) {
    error("repeats", "repeats only applies to sweeps");
  }

  const bool privacy_mode =
      f.mode == Mode::kPrivacyOnly || f.mode == Mode::kFedPF;
  const bool fair_mode = f.mode == Mode::kFairOnly || f.mode == Mode::kFedPF;
  const bool sweeping_p =
      spec.sweep_axis.has_value() && *spec.sweep_axis == SweepAxis::kEpsilonP;
  const bool sweeping_f =
      spec.sweep_axis.has_value() && *spec.sweep_axis == SweepAxis::kEpsilonF;
  if (privacy_mode && !spec.epsilon_p_set && !sweeping_p) {
    error("epsilon_p", absl::StrCat("mode ", ModeName(f.mode),
                                    " needs epsilon_p"));
  }
  if (!privacy_mode && (spec.epsilon_p_set || sweeping_p)) {
    warn("epsilon_p", absl::StrCat("ignored in mode ", ModeName(f.mode)));
  }
  if (!fair_mode && (spec.criterion_set || spec.epsilon_f_set || sweeping_f)) {
    warn("criterion", absl::StrCat("fairness criterion ignored in mode ",
                                   ModeName(f.mode)));
  }
  return out;
}

absl::string_view ModeName(Mode mode) {
  switch (mode) {
    case Mode::kFedAvg:
      return "fedavg";
    case Mode::kFairOnly:
      return "fair_only";
    case Mode::kPrivacyOnly:
      return "privacy_only";
    case Mode::kFedPF:
      return "fedpf";
  }
  return "unknown";
}

absl::string_view AxisName(SweepAxis axis) {
  return axis == SweepAxis::kEpsilonP ? "epsilon_p" : "epsilon_f";
}

nlohmann::json ConfigEcho(const ExperimentSpec& spec) {
  const FederationConfig& f = spec.federation;
  auto number = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return Quote(v);
  };
  nlohmann::json j;
  j["dataset"] = spec.dataset;
  j["data_dir"] = spec.data_dir;
  if (!spec.data_path.empty()) j["data_path"] = spec.data_path;
  j["train_fraction"] = spec.train_fraction;
  if (spec.dataset == "synthetic") {
    j["synthetic_n"] = spec.synthetic.n;
    j["synthetic_d"] = spec.synthetic.d;
    j["synthetic_groups"] = spec.synthetic.num_groups;
    j["synthetic_gap"] = spec.synthetic.group_gap;
  }
  j["mode"] = ModeName(f.mode);
  j["criterion"] =
      f.criterion.kind == FairnessKind::kEqualizedOdds ? "eo" : "demp";
  j["epsilon_f"] = f.criterion.epsilon_f;
  if (spec.epsilon_p_set) j["epsilon_p"] = number(f.privacy.epsilon_p);
  j["rounds"] = f.rounds;
  j["clients"] = f.n_clients;
  j["local_epochs"] = f.local_epochs;
  j["batch"] = f.batch_size;
  j["eta_theta"] = f.eta_theta;
  j["eta_lambda"] = f.eta_lambda;
  j["dual_bound"] = f.dual_bound;
  j["seed"] = f.seed;
  j["hidden"] = f.hidden;
  j["sensitive_as_feature"] = f.sensitive_as_feature;
  j["lagrangian_grad"] = f.lagrangian_grad;
  j["perturbation"] =
      f.perturbation == PerturbationSchedule::kPerVisit ? "per_visit"
                                                        : "one_shot";
  j["dual_scope"] =
      f.dual_scope == DualScope::kGlobal ? "global" : "per_client";
  j["cell_probs"] =
      f.cell_probs == CellProbabilityScope::kBatch ? "batch" : "client";
  j["participation"] = f.participation;
  j["parallel_clients"] = f.parallel_clients;
  if (spec.sweep_axis.has_value()) {
    j["sweep_axis"] = AxisName(*spec.sweep_axis);
    nlohmann::json values = nlohmann::json::array();
    for (double v : spec.sweep_values) values.push_back(number(v));
    j["sweep_values"] = values;
    j["repeats"] = spec.repeats;
  }
  j["out"] = spec.out_dir;
  return j;
}

absl::StatusOr<ExperimentData> LoadExperimentData(const ExperimentSpec& spec) {
  ExperimentData data;
  if (spec.dataset == "synthetic") {
    SyntheticSpec syn = spec.synthetic;
    syn.seed = spec.federation.seed;
    absl::StatusOr<std::vector<Record>> records = MakeSynthetic(syn);
    if (!records.ok()) return records.status();
    std::vector<size_t> order(records->size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(DeriveSeed(spec.federation.seed, StreamTag::kSplit));
    Shuffle(std::span<size_t>(order), rng);
    const size_t n_train = static_cast<size_t>(
        std::llround(spec.train_fraction * static_cast<double>(order.size())));
    for (size_t i = 0; i < order.size(); ++i) {
      (i < n_train ? data.train : data.test).push_back((*records)[order[i]]);
    }
    data.num_groups = syn.num_groups;
    data.meta.name = "synthetic";
    data.meta.d = syn.d;
    data.meta.num_sensitive_values = syn.num_groups;
    data.meta.sensitive_name = "group";
    data.meta.size = records->size();
    data.meta.sensitive_threshold = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < syn.d; ++k) {
      data.meta.feature_names.push_back(absl::StrCat("x", k));
    }
    data.meta.train_size = data.train.size();
    data.meta.test_size = data.test.size();
    return data;
  }
  absl::StatusOr<DatasetSchema> schema = BuiltinSchema(spec.dataset);
  if (!schema.ok()) return schema.status();
  const std::string path =
      spec.data_path.empty()
          ? absl::StrCat(spec.data_dir, "/", spec.dataset, ".csv")
          : spec.data_path;
  absl::StatusOr<LoadedDataset> loaded =
      LoadCsv(path, *schema, spec.federation.seed, spec.train_fraction);
  if (!loaded.ok()) return loaded.status();
  data.train = std::move(loaded->train);
  data.test = std::move(loaded->test);
  data.meta = std::move(loaded->meta);
  data.num_groups = data.meta.num_sensitive_values;
  return data;
}

namespace {

nlohmann::json MetaJson(const DatasetMeta& m) {
  return {{"name", m.name},
          {"d", m.d},
          {"num_sensitive_values", m.num_sensitive_values},
          {"sensitive", m.sensitive_name},
          {"sensitive_threshold",
           std::isfinite(m.sensitive_threshold)
               ? nlohmann::json(m.sensitive_threshold)
               : nlohmann::json()},
          {"size", m.size},
          {"train_size", m.train_size},
          {"test_size", m.test_size},
          {"missing_rows", m.missing_rows},
          {"skipped_rows", m.skipped_rows},
          {"features", m.feature_names}};
}

}  // namespace

absl::StatusOr<ExperimentOutcome> RunExperiment(const ExperimentSpec& spec) {
  std::vector<std::string> errors;
  for (const Diagnostic& d : Validate(spec)) {
    if (d.IsError()) errors.push_back(absl::StrCat(d.field, ": ", d.message));
  }
  if (!errors.empty()) {
    return absl::InvalidArgumentError(absl::StrJoin(errors, "; "));
  }
  std::error_code ec;
  std::filesystem::create_directories(spec.out_dir, ec);
  if (ec || !std::filesystem::is_directory(spec.out_dir)) {
    return absl::FailedPreconditionError(
        absl::StrCat("cannot create output directory ", spec.out_dir));
  }

  absl::StatusOr<ExperimentData> data = LoadExperimentData(spec);
  if (!data.ok()) return data.status();

  ExperimentOutcome outcome;
  const nlohmann::json echo = ConfigEcho(spec);
  nlohmann::json summary;
  summary["dataset"] = MetaJson(data->meta);
  summary["seed"] = spec.federation.seed;
  summary["config"] = echo;
  std::string metrics;
  std::string timing;

  if (!spec.sweep_axis.has_value()) {
    absl::StatusOr<std::vector<ClientPartition>> parts = PartitionIid(
        data->train, spec.federation.n_clients, spec.federation.seed);
    if (!parts.ok()) return parts.status();
    absl::StatusOr<RunResult> run =
        Run(spec.federation, *parts, data->test, data->num_groups);
    if (!run.ok()) return run.status();
    metrics = MetricsCsv(run->rounds);
    timing = TimingCsv(run->rounds);
    summary["final"] = ToJson(run->rounds.back());
    summary["diagnostics"] = ToJson(run->diagnostics);
    nlohmann::json duals = nlohmann::json::array();
    for (const DualVariables& d : run->final_duals) duals.push_back(ToJson(d));
    summary["final_duals"] = duals;
    outcome.run = *std::move(run);
  } else {
    absl::StatusOr<SweepResult> sweep =
        Sweep(spec.federation, *spec.sweep_axis, spec.sweep_values,
              spec.repeats, data->train, data->test, data->num_groups);
    if (!sweep.ok()) return sweep.status();
    metrics = SweepMetricsCsv(sweep->runs);
    timing = "value,repeat,round,wall_ms\n";
    nlohmann::json runs = nlohmann::json::array();
    for (const SweepRun& r : sweep->runs) {
      for (const RoundMetrics& m : r.rounds) {
        absl::StrAppend(&timing, FormatDouble(r.value), ",", r.repeat, ",",
                        m.round, ",", FormatDouble(m.wall_ms), "\n");
      }
      runs.push_back({{"value", Quote(r.value)},
                      {"repeat", r.repeat},
                      {"seed", r.seed},
                      {"diagnostics", ToJson(r.diagnostics)}});
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const SweepRow& row : sweep->rows) {
      rows.push_back({{"value", Quote(row.value)},
                      {"runs", row.runs},
                      {"mean", ToJson(row.mean)},
                      {"std", ToJson(row.stddev)}});
    }
    summary["sweep_axis"] = AxisName(*spec.sweep_axis);
    summary["rows"] = rows;
    summary["runs"] = runs;
    const std::string table =
        SweepTableCsv(AxisName(*spec.sweep_axis), sweep->rows);
    const std::string path = spec.out_dir + "/sweep.csv";
    if (absl::Status s = WriteTextFile(path, table); !s.ok()) return s;
    outcome.written.push_back(path);
    outcome.sweep = *std::move(sweep);
  }

  const std::vector<std::pair<std::string, std::string>> files = {
      {"metrics.csv", metrics},
      {"timing.csv", timing},
      {"summary.json", summary.dump(2) + "\n"},
      {"config_echo.json", echo.dump(2) + "\n"},
  };
  for (const auto& [name, contents] : files) {
    const std::string path = spec.out_dir + "/" + name;
    if (absl::Status s = WriteTextFile(path, contents); !s.ok()) return s;
    outcome.written.push_back(path);
  }
  return outcome;
}

}  // namespace fedpf
