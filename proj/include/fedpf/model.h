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

#ifndef FEDPF_MODEL_H_
#define FEDPF_MODEL_H_

#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>

#include <Eigen/Dense>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "fedpf/random.h"

namespace fedpf {

// Shapes of the classifier input -> hidden (ReLU) -> second -> 2 logits and
// the offsets of each block in the flat parameter vector. Weight blocks are
// stored column-major as (fan_out x fan_in).
struct Layout {
  int input_dim = 1;
  int hidden = 64;
  int second = 200;
  int outputs = 2;

  Eigen::Index w1_size() const { return Eigen::Index{hidden} * input_dim; }
  Eigen::Index w2_size() const { return Eigen::Index{second} * hidden; }
  Eigen::Index w3_size() const { return Eigen::Index{outputs} * second; }

  Eigen::Index w1_offset() const { return 0; }
  Eigen::Index b1_offset() const { return w1_offset() + w1_size(); }
  Eigen::Index w2_offset() const { return b1_offset() + hidden; }
  Eigen::Index b2_offset() const { return w2_offset() + w2_size(); }
  Eigen::Index w3_offset() const { return b2_offset() + second; }
  Eigen::Index b3_offset() const { return w3_offset() + w3_size(); }
  Eigen::Index size() const { return b3_offset() + outputs; }

  friend bool operator==(const Layout&, const Layout&) = default;
};

// Flat parameter vector plus typed views of each layer.
template <typename Scalar>
class ModelParams {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorSegment = Eigen::VectorBlock<Vector>;
  using ConstVectorSegment = Eigen::VectorBlock<const Vector>;

  ModelParams() = default;
  explicit ModelParams(const Layout& layout)
      : layout_(layout), values_(Vector::Zero(layout.size())) {}
  ModelParams(const Layout& layout, Vector values)
      : layout_(layout), values_(std::move(values)) {}

  const Layout& layout() const { return layout_; }
  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  MatrixMap w1() { return Block(layout_.w1_offset(), layout_.hidden, layout_.input_dim); }
  MatrixMap w2() { return Block(layout_.w2_offset(), layout_.second, layout_.hidden); }
  MatrixMap w3() { return Block(layout_.w3_offset(), layout_.outputs, layout_.second); }
  VectorSegment b1() { return values_.segment(layout_.b1_offset(), layout_.hidden); }
  VectorSegment b2() { return values_.segment(layout_.b2_offset(), layout_.second); }
  VectorSegment b3() { return values_.segment(layout_.b3_offset(), layout_.outputs); }

  ConstMatrixMap w1() const { return Block(layout_.w1_offset(), layout_.hidden, layout_.input_dim); }
  ConstMatrixMap w2() const { return Block(layout_.w2_offset(), layout_.second, layout_.hidden); }
  ConstMatrixMap w3() const { return Block(layout_.w3_offset(), layout_.outputs, layout_.second); }
  ConstVectorSegment b1() const { return values_.segment(layout_.b1_offset(), layout_.hidden); }
  ConstVectorSegment b2() const { return values_.segment(layout_.b2_offset(), layout_.second); }
  ConstVectorSegment b3() const { return values_.segment(layout_.b3_offset(), layout_.outputs); }

  bool AllFinite() const { return values_.allFinite(); }

 private:
  MatrixMap Block(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
    return MatrixMap(values_.data() + offset, rows, cols);
  }
  ConstMatrixMap Block(Eigen::Index offset, Eigen::Index rows,
                       Eigen::Index cols) const {
    return ConstMatrixMap(values_.data() + offset, rows, cols);
  }

  Layout layout_;
  Vector values_;
};

// Gradients share the parameter layout.
template <typename Scalar>
using Gradient = ModelParams<Scalar>;

using Params = ModelParams<double>;

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
template <typename Scalar>
ModelParams<Scalar> InitParams(const Layout& layout, uint64_t seed) {
  ModelParams<Scalar> params(layout);
  Rng rng(seed);
  auto fill = [&](Eigen::Index offset, Eigen::Index count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < count; ++i) {
      params.values()[offset + i] =
          static_cast<Scalar>(bound * (2.0 * rng.Uniform() - 1.0));
    }
  };
  fill(layout.w1_offset(), layout.w1_size(), layout.input_dim);
  fill(layout.b1_offset(), layout.hidden, layout.input_dim);
  fill(layout.w2_offset(), layout.w2_size(), layout.hidden);
  fill(layout.b2_offset(), layout.second, layout.hidden);
  fill(layout.w3_offset(), layout.w3_size(), layout.second);
  fill(layout.b3_offset(), layout.outputs, layout.second);
  return params;
}

// Logits for a batch; `inputs` holds one example per column.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> Logits(
    const ModelParams<Scalar>& params, const Eigen::MatrixBase<Derived>& inputs) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix hidden = (params.w1() * inputs).colwise() + params.b1();
  hidden = hidden.cwiseMax(Scalar(0));
  Matrix second = (params.w2() * hidden).colwise() + params.b2();
  return (params.w3() * second).colwise() + params.b3();
}

// Softmax probability of class 1 from a logit pair, computed as
// sigmoid(z1 - z0) without overflow.
template <typename Scalar>
Scalar PositiveProbability(Scalar z0, Scalar z1) {
  const Scalar margin = z1 - z0;
  if (margin >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-margin));
  const Scalar e = std::exp(margin);
  return e / (Scalar(1) + e);
}

// Argmax with ties going to class 0.
template <typename Scalar>
int PredictFromLogits(Scalar z0, Scalar z1) {
  return z1 > z0 ? 1 : 0;
}

template <typename Scalar>
struct ForwardResult {
  Eigen::Matrix<Scalar, 2, 1> logits;
  int prediction = 0;
  Scalar prob = Scalar(0.5);
};

template <typename Scalar>
absl::StatusOr<ForwardResult<Scalar>> Forward(
    const ModelParams<Scalar>& params,
    const Eigen::Ref<const Eigen::Matrix<std::type_identity_t<Scalar>, Eigen::Dynamic, 1>>& features) {
  if (features.size() != params.layout().input_dim) {
    return absl::InvalidArgumentError(absl::StrCat(
        "forward: expected ", params.layout().input_dim, " features, got ",
        features.size()));
  }
  const auto logits = Logits(params, features);
  ForwardResult<Scalar> out;
  out.logits = logits.col(0);
  out.prediction = PredictFromLogits(out.logits[0], out.logits[1]);
  out.prob = PositiveProbability(out.logits[0], out.logits[1]);
  return out;
}

template <typename Scalar>
struct LossAndGradient {
  Scalar loss = Scalar(0);
  Gradient<Scalar> grad;
};

// Expected cost under the softmax,
//   mean_j [ p_j * c1_j + (1 - p_j) * c0_j ],
// and its exact gradient by backpropagation.
template <typename Scalar, typename Derived>
absl::StatusOr<LossAndGradient<Scalar>> WeightedLossGrad(
    const ModelParams<Scalar>& params, const Eigen::MatrixBase<Derived>& inputs,
    const Eigen::Ref<const Eigen::Matrix<std::type_identity_t<Scalar>, Eigen::Dynamic, 1>>& cost0,
    const Eigen::Ref<const Eigen::Matrix<std::type_identity_t<Scalar>, Eigen::Dynamic, 1>>& cost1) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  const Layout& layout = params.layout();
  const Eigen::Index n = inputs.cols();
  if (n == 0) return absl::InvalidArgumentError("weighted loss: empty batch");
  if (inputs.rows() != layout.input_dim || cost0.size() != n ||
      cost1.size() != n) {
    return absl::InvalidArgumentError("weighted loss: shape mismatch");
  }
  if (!cost0.allFinite() || !cost1.allFinite()) {
    return absl::InvalidArgumentError("weighted loss: non-finite cost");
  }

  const Matrix pre_hidden = (params.w1() * inputs).colwise() + params.b1();
  const Matrix hidden = pre_hidden.cwiseMax(Scalar(0));
  const Matrix second = (params.w2() * hidden).colwise() + params.b2();
  const Matrix logits = (params.w3() * second).colwise() + params.b3();

  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  RowVector slope(n);
  Scalar loss = Scalar(0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar p = PositiveProbability(logits(0, j), logits(1, j));
    loss += p * cost1[j] + (Scalar(1) - p) * cost0[j];
    slope[j] = (cost1[j] - cost0[j]) * p * (Scalar(1) - p) * inv_n;
  }

  LossAndGradient<Scalar> out;
  out.loss = loss * inv_n;
  out.grad = Gradient<Scalar>(layout);
  Gradient<Scalar>& g = out.grad;

  // d logits: the margin z1 - z0 carries the whole dependence on p.
  Matrix d_logits(layout.outputs, n);
  d_logits.row(0) = -slope;
  d_logits.row(1) = slope;
  g.w3().noalias() = d_logits * second.transpose();
  g.b3() = d_logits.rowwise().sum();

  const Matrix d_second = params.w3().transpose() * d_logits;
  g.w2().noalias() = d_second * hidden.transpose();
  g.b2() = d_second.rowwise().sum();

  Matrix d_hidden = params.w2().transpose() * d_second;
  d_hidden = (pre_hidden.array() > Scalar(0)).select(d_hidden, Scalar(0));
  g.w1().noalias() = d_hidden * inputs.transpose();
  g.b1() = d_hidden.rowwise().sum();
  return out;
}

// params - eta * grad.
template <typename Scalar>
absl::StatusOr<ModelParams<Scalar>> SgdStep(const ModelParams<Scalar>& params,
                                            const Gradient<Scalar>& grad,
                                            Scalar eta) {
  if (!(params.layout() == grad.layout())) {
    return absl::InvalidArgumentError("sgd_step: layout mismatch");
  }
  if (!(eta >= Scalar(0))) {
    return absl::InvalidArgumentError("sgd_step: eta must be >= 0");
  }
  return ModelParams<Scalar>(params.layout(), params.values() - eta * grad.values());
}

// Elementwise mean of the client models.
template <typename Scalar>
absl::StatusOr<ModelParams<Scalar>> AverageParams(
    std::span<const ModelParams<Scalar>> models) {
  if (models.empty()) {
    return absl::InvalidArgumentError("average_params: no models");
  }
  ModelParams<Scalar> out(models.front().layout());
  for (const auto& m : models) {
    if (!(m.layout() == out.layout())) {
      return absl::InvalidArgumentError("average_params: layout mismatch");
    }
    out.values() += m.values();
  }
  out.values() /= static_cast<Scalar>(models.size());
  return out;
}

// Mean negative log-likelihood of `labels` under the softmax of `logits`.
template <typename Scalar>
Scalar MeanCrossEntropy(
    const Eigen::Ref<const Eigen::Matrix<std::type_identity_t<Scalar>, Eigen::Dynamic, Eigen::Dynamic>>& logits,
    std::span<const int> labels) {
  Scalar total = Scalar(0);
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Scalar z0 = logits(0, j);
    const Scalar z1 = logits(1, j);
    const Scalar top = std::max(z0, z1);
    const Scalar log_norm =
        top + std::log(std::exp(z0 - top) + std::exp(z1 - top));
    total += log_norm - (labels[j] == 1 ? z1 : z0);
  }
  return logits.cols() > 0 ? total / static_cast<Scalar>(logits.cols())
                           : Scalar(0);
}

extern template class ModelParams<double>;
extern template class ModelParams<float>;

}  // namespace fedpf

#endif  // FEDPF_MODEL_H_
