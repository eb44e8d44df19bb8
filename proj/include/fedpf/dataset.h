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

#ifndef FEDPF_DATASET_H_
#define FEDPF_DATASET_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace fedpf {

// One example: non-sensitive features, the sensitive attribute index and a
// binary label.
struct Record {
  Eigen::VectorXd features;
  int sensitive = 0;
  int label = 0;

  friend bool operator==(const Record& lhs, const Record& rhs) {
    return lhs.sensitive == rhs.sensitive && lhs.label == rhs.label &&
           lhs.features.size() == rhs.features.size() &&
           lhs.features == rhs.features;
  }
};

enum class SensitiveRule {
  // Numeric column; value >= training-split median maps to 1, else 0.
  kMedianSplit,
  // Categorical column; index is the position in `sensitive_values`.
  kCategorical,
};

// How a CSV file becomes Records. Column names refer to the header row; when
// a name appears more than once the first occurrence wins.
struct DatasetSchema {
  std::string name;
  std::string label_column;
  // Label is 1 iff the trimmed cell equals one of these.
  std::vector<std::string> label_positive;
  std::string sensitive_column;
  SensitiveRule sensitive_rule = SensitiveRule::kMedianSplit;
  std::vector<std::string> sensitive_values;
  // z-scored with training-split statistics.
  std::vector<std::string> numeric_columns;
  // Category index (levels sorted lexicographically), then z-scored.
  std::vector<std::string> ordinal_columns;
  // One 0/1 column per level, levels sorted lexicographically.
  std::vector<std::string> onehot_columns;
  // Cells equal to one of these mark the row as missing; such rows are
  // dropped and counted separately from unparseable rows.
  std::vector<std::string> na_values;
};

struct DatasetMeta {
  std::string name;
  int d = 0;
  int num_sensitive_values = 2;
  std::string sensitive_name;
  size_t size = 0;
  // Median threshold for kMedianSplit, NaN otherwise.
  double sensitive_threshold = 0.0;
  std::vector<std::string> feature_names;
  size_t train_size = 0;
  size_t test_size = 0;
  size_t missing_rows = 0;
  size_t skipped_rows = 0;
};

struct LoadedDataset {
  std::vector<Record> train;
  std::vector<Record> test;
  DatasetMeta meta;
};

struct ClientPartition {
  int client_id = 0;
  std::vector<Record> records;
  uint64_t rng_seed = 0;
};

// Parses `path` per `schema`, shuffles rows with `split_seed`, keeps the first
// `train_fraction` as the training split and encodes both splits with
// training-split statistics. Rows that fail to parse are skipped; more than 1%
// skipped is an error.
absl::StatusOr<LoadedDataset> LoadCsv(const std::string& path,
                                      const DatasetSchema& schema,
                                      uint64_t split_seed,
                                      double train_fraction = 0.8);

// Same as LoadCsv but reads from an in-memory CSV document.
absl::StatusOr<LoadedDataset> ParseCsv(absl::string_view contents,
                                       const DatasetSchema& schema,
                                       uint64_t split_seed,
                                       double train_fraction = 0.8);

// Deterministic IID split; sizes differ by at most one.
absl::StatusOr<std::vector<ClientPartition>> PartitionIid(
    std::span<const Record> records, int n_clients, uint64_t seed);

struct SyntheticSpec {
  size_t n = 1000;
  int d = 4;
  int num_groups = 2;
  // Positive rate of the last group minus that of the first.
  double group_gap = 0.2;
  uint64_t seed = 0;
};

// Gaussian features, labels from a logistic model whose per-group intercept is
// solved so that group a has positive rate 0.5 + gap * (a / (|A| - 1) - 0.5).
// Group membership is uniform; the first feature is shifted by group.
absl::StatusOr<std::vector<Record>> MakeSynthetic(const SyntheticSpec& spec);

// Target positive rate of group `a` under MakeSynthetic.
double SyntheticPositiveRate(const SyntheticSpec& spec, int a);

// Schemas for the bundled data/{adult,bank,compas}.csv files. Returns
// NotFound for other names.
absl::StatusOr<DatasetSchema> BuiltinSchema(absl::string_view name);

}  // namespace fedpf

#endif  // FEDPF_DATASET_H_
