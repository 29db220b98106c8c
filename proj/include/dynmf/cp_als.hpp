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

#ifndef DYNMF_CP_ALS_HPP_
#define DYNMF_CP_ALS_HPP_

#include <cstdint>
#include <vector>

#include "dynmf/anomaly.hpp"
#include "dynmf/usage_cube.hpp"

namespace dynmf {

// Rank-R CP (PARAFAC) model of the node x metric x time tensor:
//   x(n, m, t) ~ sum_r weights(r) * nodes(n, r) * metrics(m, r) * times(t, r)
// In canonical form every factor column has unit norm (or is zero) and the
// weights are non-negative.
struct CPModel {
  Index rank = 0;
  Matrix nodes;    // N x R
  Matrix metrics;  // M x R
  Matrix times;    // T x R
  Vector weights;  // R

  Matrix reconstruct_slice(Index t) const;
};

struct CPFit {
  CPModel model;
  // Frobenius norm of the residual tensor after each sweep.
  std::vector<double> error_trace;
  // Normal-equation solves that fell back to a least-norm solution.
  std::size_t least_norm_fallbacks = 0;
};

// Alternating least squares: each sweep solves for the node, metric and time
// factors in turn from ridge-jittered (1e-10) normal equations, then
// normalizes columns into the weights. Metric and time factors start from
// Normal(0, 1) draws seeded by `seed`. Requires a complete cube.
CPFit cp_als_fit(const UsageCube& cube, Index rank, std::int64_t sweeps, std::uint64_t seed);

double cp_reconstruction_error(const CPModel& model, const UsageCube& cube);

// Mean absolute residual over metrics per (node, time), as for the dynamic
// factor score.
AnomalyScoreSeries cp_node_scores(const CPModel& model, const UsageCube& cube);

}  // namespace dynmf

#endif  // DYNMF_CP_ALS_HPP_
