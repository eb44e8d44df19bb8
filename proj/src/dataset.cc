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

#include "fedpf/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/string_view.h"
#include "fedpf/random.h"

namespace fedpf {
namespace {

// Splits one CSV line, honoring double-quoted fields with "" escapes.
std::vector<std::string> SplitCsvLine(absl::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool in_quotes = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::string(absl::StripAsciiWhitespace(current)));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::string(absl::StripAsciiWhitespace(current)));
  return fields;
}

std::optional<double> ParseDouble(absl::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

bool Contains(const std::vector<std::string>& values, absl::string_view v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

struct ParsedRow {
  std::vector<double> numeric;          // numeric_columns order
  std::vector<std::string> categorical;  // ordinal then onehot order
  double sensitive_value = 0.0;          // kMedianSplit
  int sensitive_index = 0;               // kCategorical
  int label = 0;
};

struct ColumnMoments {
  double mean = 0.0;
  double stddev = 0.0;
};

ColumnMoments Moments(const std::vector<double>& values) {
  ColumnMoments m;
  if (values.empty()) return m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return m;
}

double ZScore(double value, const ColumnMoments& m) {
  if (m.stddev <= 0.0) return 0.0;
  return (value - m.mean) / m.stddev;
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

absl::StatusOr<LoadedDataset> ParseCsv(absl::string_view contents,
                                       const DatasetSchema& schema,
                                       uint64_t split_seed,
                                       double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    return absl::InvalidArgumentError("train_fraction must be in (0, 1]");
  }
  std::vector<absl::string_view> lines;
  {
    size_t start = 0;
    while (start < contents.size()) {
      size_t end = contents.find('\n', start);
      if (end == absl::string_view::npos) end = contents.size();
      absl::string_view line = contents.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!absl::StripAsciiWhitespace(line).empty()) lines.push_back(line);
      start = end + 1;
    }
  }
  if (lines.empty()) {
    return absl::InvalidArgumentError(
        "schema error: file has no header row");
  }

  const std::vector<std::string> header = SplitCsvLine(lines.front());
  std::unordered_map<std::string, size_t> column_index;
  for (size_t i = 0; i < header.size(); ++i) column_index.emplace(header[i], i);
  auto find_column = [&](const std::string& name) -> absl::StatusOr<size_t> {
    auto it = column_index.find(name);
    if (it == column_index.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("schema error: missing column '", name, "'"));
    }
    return it->second;
  };

  if (schema.label_column.empty() || schema.sensitive_column.empty()) {
    return absl::InvalidArgumentError(
        "schema error: label and sensitive columns are required");
  }
  if (schema.sensitive_rule == SensitiveRule::kCategorical &&
      schema.sensitive_values.size() < 2) {
    return absl::InvalidArgumentError(
        "schema error: categorical sensitive attribute needs >= 2 values");
  }
  absl::StatusOr<size_t> label_col = find_column(schema.label_column);
  if (!label_col.ok()) return label_col.status();
  absl::StatusOr<size_t> sensitive_col = find_column(schema.sensitive_column);
  if (!sensitive_col.ok()) return sensitive_col.status();
  std::vector<size_t> numeric_cols;
  std::vector<size_t> categorical_cols;
  for (const auto& name : schema.numeric_columns) {
    auto col = find_column(name);
    if (!col.ok()) return col.status();
    numeric_cols.push_back(*col);
  }
  for (const auto* names : {&schema.ordinal_columns, &schema.onehot_columns}) {
    for (const auto& name : *names) {
      auto col = find_column(name);
      if (!col.ok()) return col.status();
      categorical_cols.push_back(*col);
    }
  }

  std::vector<ParsedRow> rows;
  size_t missing = 0;
  size_t skipped = 0;
  const size_t data_lines = lines.size() - 1;
  for (size_t li = 1; li < lines.size(); ++li) {
    const std::vector<std::string> fields = SplitCsvLine(lines[li]);
    if (fields.size() != header.size()) {
      ++skipped;
      continue;
    }
    auto is_na = [&](size_t col) { return Contains(schema.na_values, fields[col]); };
    bool row_missing = is_na(*label_col) || is_na(*sensitive_col);
    for (size_t c : numeric_cols) row_missing = row_missing || is_na(c);
    for (size_t c : categorical_cols) row_missing = row_missing || is_na(c);
    if (row_missing) {
      ++missing;
      continue;
    }

    ParsedRow row;
    bool ok = true;
    for (size_t c : numeric_cols) {
      std::optional<double> v = ParseDouble(fields[c]);
      if (!v) {
        ok = false;
        break;
      }
      row.numeric.push_back(*v);
    }
    if (!ok) {
      ++skipped;
      continue;
    }
    for (size_t c : categorical_cols) row.categorical.push_back(fields[c]);

    const std::string& sensitive_cell = fields[*sensitive_col];
    if (schema.sensitive_rule == SensitiveRule::kMedianSplit) {
      std::optional<double> v = ParseDouble(sensitive_cell);
      if (!v) {
        ++skipped;
        continue;
      }
      row.sensitive_value = *v;
    } else {
      auto it = std::find(schema.sensitive_values.begin(),
                          schema.sensitive_values.end(), sensitive_cell);
      if (it == schema.sensitive_values.end()) {
        ++skipped;
        continue;
      }
      row.sensitive_index =
          static_cast<int>(it - schema.sensitive_values.begin());
    }
    row.label = Contains(schema.label_positive, fields[*label_col]) ? 1 : 0;
    rows.push_back(std::move(row));
  }

  if (static_cast<double>(skipped) > 0.01 * static_cast<double>(data_lines)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "too many unparseable rows: ", skipped, " of ", data_lines));
  }
  if (rows.empty()) {
    return absl::InvalidArgumentError("schema error: no usable rows");
  }

  // Train/test split.
  std::vector<size_t> order(rows.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng split_rng(DeriveSeed(split_seed, StreamTag::kSplit));
  Shuffle(std::span<size_t>(order), split_rng);
  size_t n_train = static_cast<size_t>(
      std::llround(train_fraction * static_cast<double>(rows.size())));
  n_train = std::clamp<size_t>(n_train, 1, rows.size());
  const std::span<const size_t> train_rows(order.data(), n_train);

  // Numeric moments on the training split.
  std::vector<ColumnMoments> numeric_moments;
  for (size_t k = 0; k < numeric_cols.size(); ++k) {
    std::vector<double> values;
    values.reserve(n_train);
    for (size_t r : train_rows) values.push_back(rows[r].numeric[k]);
    numeric_moments.push_back(Moments(values));
  }

  // Category levels over every row so test-only levels still encode.
  std::vector<std::map<std::string, int>> levels(categorical_cols.size());
  for (size_t k = 0; k < categorical_cols.size(); ++k) {
    for (const auto& row : rows) levels[k].emplace(row.categorical[k], 0);
    int next = 0;
    for (auto& [level, index] : levels[k]) index = next++;
  }
  const size_t n_ordinal = schema.ordinal_columns.size();
  std::vector<ColumnMoments> ordinal_moments;
  for (size_t k = 0; k < n_ordinal; ++k) {
    std::vector<double> codes;
    codes.reserve(n_train);
    for (size_t r : train_rows) {
      codes.push_back(levels[k].at(rows[r].categorical[k]));
    }
    ordinal_moments.push_back(Moments(codes));
  }

  DatasetMeta meta;
  meta.name = schema.name;
  meta.sensitive_name = schema.sensitive_column;
  meta.size = rows.size();
  meta.missing_rows = missing;
  meta.skipped_rows = skipped;
  meta.train_size = n_train;
  meta.test_size = rows.size() - n_train;
  for (const auto& name : schema.numeric_columns) meta.feature_names.push_back(name);
  for (const auto& name : schema.ordinal_columns) meta.feature_names.push_back(name);
  for (size_t k = n_ordinal; k < categorical_cols.size(); ++k) {
    for (const auto& [level, index] : levels[k]) {
      meta.feature_names.push_back(
          absl::StrCat(schema.onehot_columns[k - n_ordinal], "=", level));
    }
  }
  meta.d = static_cast<int>(meta.feature_names.size());
  if (meta.d < 1) {
    return absl::InvalidArgumentError("schema error: no feature columns");
  }

  if (schema.sensitive_rule == SensitiveRule::kMedianSplit) {
    std::vector<double> values;
    values.reserve(n_train);
    for (size_t r : train_rows) values.push_back(rows[r].sensitive_value);
    meta.sensitive_threshold = Median(std::move(values));
    meta.num_sensitive_values = 2;
  } else {
    meta.sensitive_threshold = std::numeric_limits<double>::quiet_NaN();
    meta.num_sensitive_values = static_cast<int>(schema.sensitive_values.size());
  }

  auto encode = [&](const ParsedRow& row) {
    Record rec;
    rec.features.resize(meta.d);
    Eigen::Index f = 0;
    for (size_t k = 0; k < numeric_cols.size(); ++k) {
      rec.features[f++] = ZScore(row.numeric[k], numeric_moments[k]);
    }
    for (size_t k = 0; k < n_ordinal; ++k) {
      rec.features[f++] =
          ZScore(levels[k].at(row.categorical[k]), ordinal_moments[k]);
    }
    for (size_t k = n_ordinal; k < categorical_cols.size(); ++k) {
      const int hot = levels[k].at(row.categorical[k]);
      for (size_t l = 0; l < levels[k].size(); ++l) {
        rec.features[f++] = static_cast<int>(l) == hot ? 1.0 : 0.0;
      }
    }
    rec.sensitive = schema.sensitive_rule == SensitiveRule::kMedianSplit
                        ? (row.sensitive_value >= meta.sensitive_threshold ? 1 : 0)
                        : row.sensitive_index;
    rec.label = row.label;
    return rec;
  };

  LoadedDataset out;
  out.train.reserve(n_train);
  out.test.reserve(rows.size() - n_train);
  for (size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.train : out.test).push_back(encode(rows[order[i]]));
  }
  out.meta = std::move(meta);
  return out;
}

absl::StatusOr<LoadedDataset> LoadCsv(const std::string& path,
                                      const DatasetSchema& schema,
                                      uint64_t split_seed,
                                      double train_fraction) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open dataset '", path, "'"));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseCsv(buffer.str(), schema, split_seed, train_fraction);
}

absl::StatusOr<std::vector<ClientPartition>> PartitionIid(
    std::span<const Record> records, int n_clients, uint64_t seed) {
  if (n_clients < 1) {
    return absl::InvalidArgumentError("n_clients must be >= 1");
  }
  if (records.empty()) {
    return absl::InvalidArgumentError("cannot partition an empty dataset");
  }
  if (static_cast<size_t>(n_clients) > records.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "n_clients (", n_clients, ") exceeds record count (", records.size(),
        ")"));
  }
  std::vector<size_t> order(records.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(DeriveSeed(seed, StreamTag::kPartition));
  Shuffle(std::span<size_t>(order), rng);

  const size_t n = records.size();
  const size_t base = n / n_clients;
  const size_t extra = n % n_clients;
  std::vector<ClientPartition> partitions(n_clients);
  size_t next = 0;
  for (int c = 0; c < n_clients; ++c) {
    const size_t size = base + (static_cast<size_t>(c) < extra ? 1 : 0);
    ClientPartition& part = partitions[c];
    part.client_id = c;
    part.rng_seed = DeriveSeed(seed, StreamTag::kPartition, c + 1);
    part.records.reserve(size);
    for (size_t k = 0; k < size; ++k) part.records.push_back(records[order[next++]]);
  }
  return partitions;
}

namespace {

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kSyntheticSlope = 2.0;

// First-feature shift for group a; w.x then has mean w0 * shift and unit
// variance within the group.
double GroupShift(const SyntheticSpec& spec, int a) {
  return 2.0 * (SyntheticPositiveRate(spec, a) - 0.5);
}

// E[sigmoid(slope * s + b)] for s ~ N(mean, 1), by the trapezoidal rule on
// [mean - 10, mean + 10].
double ExpectedPositive(double mean, double intercept) {
  constexpr int kSteps = 4000;
  const double lo = -10.0;
  const double h = 20.0 / kSteps;
  double total = 0.0;
  for (int i = 0; i <= kSteps; ++i) {
    const double z = lo + h * i;
    const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    const double w = (i == 0 || i == kSteps) ? 0.5 : 1.0;
    total += w * density * Sigmoid(kSyntheticSlope * (mean + z) + intercept);
  }
  return total * h;
}

double SolveIntercept(double mean, double target) {
  if (target <= 0.0) return -std::numeric_limits<double>::infinity();
  if (target >= 1.0) return std::numeric_limits<double>::infinity();
  double lo = -60.0;
  double hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ExpectedPositive(mean, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double SyntheticPositiveRate(const SyntheticSpec& spec, int a) {
  const double position =
      spec.num_groups > 1 ? static_cast<double>(a) / (spec.num_groups - 1) : 0.5;
  return 0.5 + spec.group_gap * (position - 0.5);
}

absl::StatusOr<std::vector<Record>> MakeSynthetic(const SyntheticSpec& spec) {
  if (spec.n == 0) return absl::InvalidArgumentError("n must be positive");
  if (spec.d < 1) return absl::InvalidArgumentError("d must be >= 1");
  if (spec.num_groups < 2) {
    return absl::InvalidArgumentError("need at least two sensitive groups");
  }
  if (!(spec.group_gap >= 0.0 && spec.group_gap <= 1.0)) {
    return absl::InvalidArgumentError("group_gap must be in [0, 1]");
  }
  Rng rng(DeriveSeed(spec.seed, StreamTag::kSynthetic));

  Eigen::VectorXd weights(spec.d);
  for (int i = 0; i < spec.d; ++i) weights[i] = rng.Normal();
  weights /= weights.norm();

  std::vector<double> intercepts(spec.num_groups);
  for (int a = 0; a < spec.num_groups; ++a) {
    intercepts[a] = SolveIntercept(weights[0] * GroupShift(spec, a),
                                   SyntheticPositiveRate(spec, a));
  }

  std::vector<Record> records(spec.n);
  for (Record& rec : records) {
    rec.sensitive = static_cast<int>(rng.Below(spec.num_groups));
    rec.features.resize(spec.d);
    for (int i = 0; i < spec.d; ++i) rec.features[i] = rng.Normal();
    rec.features[0] += GroupShift(spec, rec.sensitive);
    const double p = Sigmoid(kSyntheticSlope * weights.dot(rec.features) +
                             intercepts[rec.sensitive]);
    rec.label = rng.Bernoulli(p) ? 1 : 0;
  }
  return records;
}

absl::StatusOr<DatasetSchema> BuiltinSchema(absl::string_view name) {
  DatasetSchema s;
  s.name = std::string(name);
  if (name == "adult") {
    s.label_column = "income";
    s.label_positive = {">50K", ">50K."};
    s.sensitive_column = "age";
    s.sensitive_rule = SensitiveRule::kMedianSplit;
    s.numeric_columns = {"education-num", "capital-gain", "capital-loss",
                         "hours-per-week"};
    s.ordinal_columns = {"workclass",    "marital-status", "occupation",
                         "relationship", "race",           "sex",
                         "native-country"};
    s.na_values = {"?"};
    return s;
  }
  if (name == "bank") {
    s.label_column = "default-payment-next-month";
    s.label_positive = {"1"};
    s.sensitive_column = "AGE";
    s.sensitive_rule = SensitiveRule::kMedianSplit;
    s.numeric_columns = {"LIMIT_BAL", "SEX",       "PAY_0",     "PAY_2",
                         "PAY_3",     "PAY_4",     "PAY_5",     "PAY_6",
                         "BILL_AMT1", "BILL_AMT2", "BILL_AMT3", "BILL_AMT4",
                         "BILL_AMT5", "BILL_AMT6", "PAY_AMT1",  "PAY_AMT2",
                         "PAY_AMT3",  "PAY_AMT4",  "PAY_AMT5",  "PAY_AMT6",
                         "MARRIAGE_1"};
    return s;
  }
  if (name == "compas") {
    s.label_column = "score_text";
    s.label_positive = {"Medium", "High"};
    s.sensitive_column = "sex";
    s.sensitive_rule = SensitiveRule::kCategorical;
    s.sensitive_values = {"Female", "Male"};
    s.numeric_columns = {"age", "juv_fel_count", "juv_misd_count",
                         "juv_other_count", "priors_count"};
    s.ordinal_columns = {"c_charge_degree"};
    s.onehot_columns = {"race"};
    return s;
  }
  return absl::NotFoundError(absl::StrCat("no builtin schema named '", name, "'"));
}

}  // namespace fedpf
