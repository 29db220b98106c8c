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

#ifndef DYNMF_USAGE_CUBE_HPP_
#define DYNMF_USAGE_CUBE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dynmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

// Per-metric affine transform applied by normalize(): z' = (z - mean) / std.
struct MetricScaling {
  double mean = 0.0;
  double std = 1.0;
};

// Node x metric usage observed over T timesteps: slice t is an N x M matrix
// with rows indexed by node and columns by metric.
//
// Cells with mask == false are unobserved; their stored value is 0 and they
// are excluded from normalization statistics, the training objective and the
// anomaly score.
struct UsageCube {
  std::vector<std::string> node_ids;
  std::vector<std::string> metric_ids;
  std::vector<std::int64_t> timestamps;  // epoch seconds, strictly increasing
  std::vector<Matrix> values;            // T slices of N x M
  std::optional<std::vector<BoolMatrix>> mask;
  std::optional<std::vector<MetricScaling>> normalization;

  Index num_nodes() const { return static_cast<Index>(node_ids.size()); }
  Index num_metrics() const { return static_cast<Index>(metric_ids.size()); }
  Index num_times() const { return static_cast<Index>(timestamps.size()); }

  bool observed(Index n, Index m, Index t) const {
    return !mask || (*mask)[static_cast<std::size_t>(t)](n, m);
  }
  // True when every cell is observed (no mask, or a mask of all true).
  bool complete() const;
  std::size_t observed_count() const;

  // Throws DataError if labels, timestamps, slice shapes or values violate
  // the cube invariants.
  void validate() const;
};

// Z-scores every metric over all observed (node, time) cells using the
// population standard deviation. Constant metrics get std = 1. Throws
// std::logic_error if the cube already carries normalization constants.
UsageCube normalize(const UsageCube& cube);

// Applies the inverse of the stored scaling. Throws std::logic_error if the
// cube is not normalized.
UsageCube denormalize(const UsageCube& cube);

}  // namespace dynmf

#endif  // DYNMF_USAGE_CUBE_HPP_
