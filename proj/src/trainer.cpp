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

#include "dynmf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dynmf/error.hpp"

namespace dynmf {

namespace {

constexpr std::int64_t kEarlyStopWindow = 100;
constexpr double kEarlyStopTolerance = 1e-8;
// Separates the minibatch sampling stream from the initialization stream.
constexpr std::uint64_t kBatchStreamSalt = 0x9e3779b97f4a7c15ULL;

std::vector<Index> sample_slices(std::mt19937_64& rng, Index total, Index count) {
  std::vector<Index> pool(static_cast<std::size_t>(total));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, total - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

void FitConfig::validate() const {
  if (rank < 1) throw std::invalid_argument("rank K must be >= 1");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (!(init_std > 0.0)) throw std::invalid_argument("init_std must be > 0");
  if (!(l2_lambda >= 0.0)) throw std::invalid_argument("l2 lambda must be >= 0");
  if (trace_every < 1) throw std::invalid_argument("trace_every must be >= 1");
  if (minibatch_slices && *minibatch_slices < 1) {
    throw std::invalid_argument("minibatch slice count must be >= 1");
  }
  adam.validate();
}

LatentModel init_model(const UsageCube& cube, const FitConfig& config) {
  config.validate();
  LatentModel model = LatentModel::for_cube(cube, config.rank);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  for (auto& x : model.factors.flat()) x = normal(rng);
  return model;
}

double mean_abs_residual(const LatentModel& model, const UsageCube& cube) {
  check_compatible(model.shape(), cube);
  double total = 0.0;
  std::size_t count = 0;
  for (Index t = 0; t < cube.num_times(); ++t) {
    const Matrix recon = reconstruct_slice(model, t);
    for (Index n = 0; n < cube.num_nodes(); ++n) {
      for (Index m = 0; m < cube.num_metrics(); ++m) {
        if (!cube.observed(n, m, t)) continue;
        total += std::abs(cube.values[t](n, m) - recon(n, m));
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

std::pair<LatentModel, FitReport> fit(const UsageCube& cube, const FitConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();

  FitReport report;
  report.config = config;
  if (!cube.normalization) {
    report.warnings.push_back("cube is not normalized; objective scale follows raw units");
  }

  LatentModel model = init_model(cube, config);
  FactorSet& params = model.factors;
  FactorSet grad(params.shape());
  AdamState adam(params.flat().size(), config.adam);
  const ObjectiveOptions options{config.l2_lambda, config.reproducible_reduction};

  const Index num_t = cube.num_times();
  const bool minibatch = config.minibatch_slices && *config.minibatch_slices < num_t;
  std::mt19937_64 batch_rng(config.seed ^ kBatchStreamSalt);
  std::vector<Index> batch;
  const double batch_weight =
      minibatch ? static_cast<double>(num_t) / static_cast<double>(*config.minibatch_slices)
                : 1.0;

  auto full_objective = [&] {
    return objective(model, cube, options);
  };
  auto check_finite = [](double value, std::int64_t iter) {
    if (!std::isfinite(value)) {
      throw NumericalError("non-finite objective at iteration " + std::to_string(iter));
    }
  };

  std::optional<double> window_start_value;
  std::int64_t iter = 0;
  for (; iter < config.max_iter; ++iter) {
    if (minibatch) batch = sample_slices(batch_rng, num_t, *config.minibatch_slices);
    const double value =
        objective_and_gradient(params, cube, options, grad, batch, batch_weight);
    check_finite(value, iter);

    const bool trace_now = iter % config.trace_every == 0;
    const bool window_now = config.early_stop && iter % kEarlyStopWindow == 0;
    if (trace_now || window_now) {
      const double current = minibatch ? full_objective() : value;
      check_finite(current, iter);
      if (trace_now) report.objective_trace.push_back({iter, current});
      if (window_now) {
        if (window_start_value && iter > 0 &&
            std::abs(*window_start_value - current) <=
                kEarlyStopTolerance * std::abs(*window_start_value)) {
          break;
        }
        window_start_value = current;
      }
    }
    adam_step(adam, params.flat(), grad.flat());
  }

  report.iterations_run = iter;
  report.final_objective = full_objective();
  check_finite(report.final_objective, iter);
  if (report.objective_trace.empty() || report.objective_trace.back().iteration != iter) {
    report.objective_trace.push_back({iter, report.final_objective});
  } else {
    report.objective_trace.back().objective = report.final_objective;
  }
  report.final_avg_abs_error = mean_abs_residual(model, cube);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(model), std::move(report)};
}

std::vector<FitReport> k_sweep(const UsageCube& cube, const std::vector<Index>& ranks,
                               const FitConfig& config) {
  if (ranks.empty()) throw std::invalid_argument("k_sweep needs at least one rank");
  std::vector<FitReport> reports;
  reports.reserve(ranks.size());
  for (Index k : ranks) {
    FitConfig c = config;
    c.rank = k;
    reports.push_back(fit(cube, c).second);
  }
  return reports;
}

}  // namespace dynmf
