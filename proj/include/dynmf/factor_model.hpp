// Copyright 2026 The dynmf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYNMF_FACTOR_MODEL_HPP_
#define DYNMF_FACTOR_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dynmf/usage_cube.hpp"

namespace dynmf {

struct ModelShape {
  Index nodes = 0;
  Index metrics = 0;
  Index times = 0;
  Index rank = 0;

  Index size() const { return (nodes + metrics + times * nodes) * rank; }
  bool operator==(const ModelShape&) const = default;
};

// The three factor blocks of the model stored in one contiguous vector so an
// optimizer can treat them as a single parameter vector. Layout: static node
// factors (N x K), metric factors (M x K), then T dynamic node slices (N x K);
// each block column-major.
class FactorSet {
 public:
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  FactorSet() = default;
  // Zero-initialized. Throws std::invalid_argument on a non-positive dimension.
  explicit FactorSet(const ModelShape& shape);

  const ModelShape& shape() const { return shape_; }

  MatrixMap static_nodes() { return {data_.data(), shape_.nodes, shape_.rank}; }
  ConstMatrixMap static_nodes() const { return {data_.data(), shape_.nodes, shape_.rank}; }
  MatrixMap metrics() { return {data_.data() + metrics_offset(), shape_.metrics, shape_.rank}; }
  ConstMatrixMap metrics() const {
    return {data_.data() + metrics_offset(), shape_.metrics, shape_.rank};
  }
  MatrixMap dynamic_nodes(Index t) {
    return {data_.data() + dynamic_offset(t), shape_.nodes, shape_.rank};
  }
  ConstMatrixMap dynamic_nodes(Index t) const {
    return {data_.data() + dynamic_offset(t), shape_.nodes, shape_.rank};
  }

  Vector& flat() { return data_; }
  const Vector& flat() const { return data_; }

  bool operator==(const FactorSet& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  Index metrics_offset() const { return shape_.nodes * shape_.rank; }
  Index dynamic_offset(Index t) const {
    return (shape_.nodes + shape_.metrics + t * shape_.nodes) * shape_.rank;
  }

  ModelShape shape_;
  Vector data_;
};

// Fitted factors together with the labels of the cube they describe. The
// reconstruction of cell (n, m, t) is sum_k ubar(n,k) * uhat_t(n,k) * v(m,k).
//
// Only the products ubar(n,k) * uhat_t(n,k) are identified by data: scaling a
// static column by c and the matching dynamic entries by 1/c changes nothing.
struct LatentModel {
  FactorSet factors;
  std::vector<std::string> node_ids;
  std::vector<std::string> metric_ids;
  std::vector<std::int64_t> timestamps;

  const ModelShape& shape() const { return factors.shape(); }
  Index rank() const { return factors.shape().rank; }

  // Empty model of the cube's dimensions with its labels copied.
  static LatentModel for_cube(const UsageCube& cube, Index rank);
};

struct ObjectiveOptions {
  // Weight of lambda * (|Ubar|^2 + |V|^2 + sum_t |Uhat_t|^2); 0 disables it.
  double l2_lambda = 0.0;
  // Sum per-timestep terms in a fixed pairwise order so results do not
  // depend on the number of worker threads.
  bool reproducible_reduction = true;
};

double reconstruct_cell(const LatentModel& model, Index node, Index metric, Index time);
Matrix reconstruct_slice(const LatentModel& model, Index time);

// Sum over observed cells of squared residuals (plus the optional L2 term).
double objective(const LatentModel& model, const UsageCube& cube,
                 const ObjectiveOptions& options = {});

// Gradient of objective() with respect to every factor, in model layout.
FactorSet gradients(const LatentModel& model, const UsageCube& cube,
                    const ObjectiveOptions& options = {});

// Objective and gradient in one pass over the data, evaluated only on the
// listed time slices (all slices when `slices` is empty). Data terms of the
// objective and gradient are multiplied by `slice_weight`; the L2 term is
// always evaluated in full. Dynamic factors of skipped slices receive only
// their L2 gradient.
double objective_and_gradient(const FactorSet& params, const UsageCube& cube,
                              const ObjectiveOptions& options, FactorSet& grad,
                              std::span<const Index> slices = {},
                              double slice_weight = 1.0);

// Throws DimensionError unless the model shape matches the cube.
void check_compatible(const ModelShape& shape, const UsageCube& cube);

}  // namespace dynmf

#endif  // DYNMF_FACTOR_MODEL_HPP_
