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

#include "dynmf/cp_als.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "dynmf/error.hpp"

namespace dynmf {

namespace {

constexpr double kRidge = 1e-10;

// Solves X * gram = rhs for X. gram is symmetric positive semi-definite.
Matrix solve_normal_equations(const Matrix& gram, const Matrix& rhs, std::size_t& fallbacks) {
  const Index r = gram.rows();
  const Matrix regularized = gram + kRidge * Matrix::Identity(r, r);
  Eigen::LLT<Matrix> llt(regularized);
  if (llt.info() == Eigen::Success) {
    Matrix x = llt.solve(rhs.transpose()).transpose();
    if (x.allFinite()) return x;
  }
  ++fallbacks;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gram);
  return cod.solve(rhs.transpose()).transpose();
}

// Scales columns to unit norm; returns the norms. Zero columns stay zero.
Vector normalize_columns(Matrix& factor) {
  Vector norms = factor.colwise().norm().transpose();
  for (Index r = 0; r < factor.cols(); ++r) {
    if (norms(r) > 0.0) factor.col(r) /= norms(r);
  }
  return norms;
}

void check_dims(const CPModel& model, const UsageCube& cube) {
  if (model.nodes.rows() != cube.num_nodes() || model.metrics.rows() != cube.num_metrics() ||
      model.times.rows() != cube.num_times()) {
    throw DimensionError("CP model does not match cube dimensions");
  }
}

}  // namespace

Matrix CPModel::reconstruct_slice(Index t) const {
  if (t < 0 || t >= times.rows()) throw DimensionError("time index out of range");
  const Vector scale = weights.cwiseProduct(times.row(t).transpose());
  return nodes * scale.asDiagonal() * metrics.transpose();
}

double cp_reconstruction_error(const CPModel& model, const UsageCube& cube) {
  check_dims(model, cube);
  double sq = 0.0;
  for (Index t = 0; t < cube.num_times(); ++t) {
    sq += (cube.values[t] - model.reconstruct_slice(t)).squaredNorm();
  }
  return std::sqrt(sq);
}

CPFit cp_als_fit(const UsageCube& cube, Index rank, std::int64_t sweeps, std::uint64_t seed) {
  if (rank < 1) throw std::invalid_argument("CP rank must be >= 1");
  if (sweeps < 1) throw std::invalid_argument("CP sweep count must be >= 1");
  if (!cube.complete()) throw std::invalid_argument("CP-ALS requires a complete cube");

  const Index num_n = cube.num_nodes(), num_m = cube.num_metrics(), num_t = cube.num_times();
  CPFit fit;
  CPModel& model = fit.model;
  model.rank = rank;
  model.nodes = Matrix::Zero(num_n, rank);
  model.metrics.resize(num_m, rank);
  model.times.resize(num_t, rank);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index r = 0; r < rank; ++r) {
    for (Index m = 0; m < num_m; ++m) model.metrics(m, r) = normal(rng);
  }
  for (Index r = 0; r < rank; ++r) {
    for (Index t = 0; t < num_t; ++t) model.times(t, r) = normal(rng);
  }
  normalize_columns(model.metrics);
  normalize_columns(model.times);
  model.weights = Vector::Ones(rank);

  Matrix rhs;
  for (std::int64_t sweep = 0; sweep < sweeps; ++sweep) {
    // Node factors: sum_t X_t B diag(C_t).
    rhs = Matrix::Zero(num_n, rank);
    for (Index t = 0; t < num_t; ++t) {
      rhs.noalias() += cube.values[t] * model.metrics * model.times.row(t).asDiagonal();
    }
    model.nodes = solve_normal_equations(
        (model.metrics.transpose() * model.metrics)
            .cwiseProduct(model.times.transpose() * model.times),
        rhs, fit.least_norm_fallbacks);
    model.weights = normalize_columns(model.nodes);

    // Metric factors: sum_t X_t^T A diag(C_t).
    rhs = Matrix::Zero(num_m, rank);
    for (Index t = 0; t < num_t; ++t) {
      rhs.noalias() += cube.values[t].transpose() * model.nodes * model.times.row(t).asDiagonal();
    }
    model.metrics = solve_normal_equations(
        (model.nodes.transpose() * model.nodes)
            .cwiseProduct(model.times.transpose() * model.times),
        rhs, fit.least_norm_fallbacks);
    model.weights = normalize_columns(model.metrics);

    // Time factors: row t is colsum((X_t B) .* A).
    rhs.resize(num_t, rank);
    for (Index t = 0; t < num_t; ++t) {
      rhs.row(t) = (cube.values[t] * model.metrics).cwiseProduct(model.nodes).colwise().sum();
    }
    model.times = solve_normal_equations(
        (model.nodes.transpose() * model.nodes)
            .cwiseProduct(model.metrics.transpose() * model.metrics),
        rhs, fit.least_norm_fallbacks);
    model.weights = normalize_columns(model.times);

    const double err = cp_reconstruction_error(model, cube);
    if (!std::isfinite(err)) {
      throw NumericalError("CP-ALS produced a non-finite error at sweep " +
                           std::to_string(sweep));
    }
    fit.error_trace.push_back(err);
  }
  return fit;
}

AnomalyScoreSeries cp_node_scores(const CPModel& model, const UsageCube& cube) {
  check_dims(model, cube);
  std::vector<Matrix> recon;
  recon.reserve(static_cast<std::size_t>(cube.num_times()));
  for (Index t = 0; t < cube.num_times(); ++t) recon.push_back(model.reconstruct_slice(t));
  return score_residuals(cube, recon);
}

}  // namespace dynmf
