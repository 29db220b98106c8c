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

#ifndef DYNMF_TRAINER_HPP_
#define DYNMF_TRAINER_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynmf/adam.hpp"
#include "dynmf/factor_model.hpp"
#include "dynmf/usage_cube.hpp"

namespace dynmf {

struct FitConfig {
  Index rank = 10;
  std::int64_t max_iter = 20000;
  std::uint64_t seed = 42;
  double init_std = 0.1;
  AdamHyper adam;
  double l2_lambda = 0.0;
  // Sample this many time slices per step (gradients rescaled by T/S).
  std::optional<Index> minibatch_slices;
  std::int64_t trace_every = 100;
  bool reproducible_reduction = true;
  // Stop once the objective changes by less than 1e-8 (relative) over 100
  // iterations.
  bool early_stop = false;

  void validate() const;
};

struct TracePoint {
  std::int64_t iteration;  // number of Adam steps taken
  double objective;
};

struct FitReport {
  std::vector<TracePoint> objective_trace;
  double final_objective = 0.0;
  // Mean over observed cells of |z - zhat| for the returned model.
  double final_avg_abs_error = 0.0;
  std::int64_t iterations_run = 0;
  double wall_time_seconds = 0.0;
  FitConfig config;
  std::vector<std::string> warnings;
};

// All factor entries i.i.d. Normal(0, init_std^2) from a generator seeded by
// config.seed, filled in parameter-vector order.
LatentModel init_model(const UsageCube& cube, const FitConfig& config);

// Runs config.max_iter joint Adam steps over all factor blocks. Throws
// std::invalid_argument for an invalid config and NumericalError if the
// objective becomes non-finite.
std::pair<LatentModel, FitReport> fit(const UsageCube& cube, const FitConfig& config);

// One fit per entry of `ranks`, all with config's seed, in input order.
std::vector<FitReport> k_sweep(const UsageCube& cube, const std::vector<Index>& ranks,
                               const FitConfig& config);

// Mean absolute residual over observed cells.
double mean_abs_residual(const LatentModel& model, const UsageCube& cube);

}  // namespace dynmf

#endif  // DYNMF_TRAINER_HPP_
