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

#include "dynmf/factor_model.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dynmf/error.hpp"

namespace dynmf {

namespace {

// Residual R_t = Z_t - (Ubar .* Uhat_t) V^T with unobserved cells zeroed.
// `product` receives Ubar .* Uhat_t.
void slice_residual(const FactorSet& params, const UsageCube& cube, Index t, Matrix& product,
                    Matrix& residual) {
  product = params.static_nodes().cwiseProduct(params.dynamic_nodes(t));
  residual = cube.values[static_cast<std::size_t>(t)];
  residual.noalias() -= product * params.metrics().transpose();
  if (cube.mask) residual = (*cube.mask)[static_cast<std::size_t>(t)].select(residual, 0.0);
}

void pairwise_reduce(std::vector<Matrix>& parts, std::size_t count) {
  for (std::size_t stride = 1; stride < count; stride *= 2) {
    for (std::size_t i = 0; i + stride < count; i += 2 * stride) parts[i] += parts[i + stride];
  }
}

void pairwise_reduce(std::vector<double>& parts, std::size_t count) {
  for (std::size_t stride = 1; stride < count; stride *= 2) {
    for (std::size_t i = 0; i + stride < count; i += 2 * stride) parts[i] += parts[i + stride];
  }
}

double l2_norm_sq(const FactorSet& params) { return params.flat().squaredNorm(); }

std::vector<Index> all_slices(Index count) {
  std::vector<Index> out(static_cast<std::size_t>(count));
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

void check_index(Index value, Index bound, const char* what) {
  if (value < 0 || value >= bound) {
    throw DimensionError(std::string(what) + " index " + std::to_string(value) +
                         " out of range [0, " + std::to_string(bound) + ")");
  }
}

}  // namespace

FactorSet::FactorSet(const ModelShape& shape) : shape_(shape) {
  if (shape.nodes < 1 || shape.metrics < 1 || shape.times < 1 || shape.rank < 1) {
    throw std::invalid_argument("model dimensions and rank must be positive");
  }
  data_ = Vector::Zero(shape.size());
}

LatentModel LatentModel::for_cube(const UsageCube& cube, Index rank) {
  LatentModel model;
  model.factors = FactorSet({cube.num_nodes(), cube.num_metrics(), cube.num_times(), rank});
  model.node_ids = cube.node_ids;
  model.metric_ids = cube.metric_ids;
  model.timestamps = cube.timestamps;
  return model;
}

void check_compatible(const ModelShape& shape, const UsageCube& cube) {
  if (shape.nodes != cube.num_nodes() || shape.metrics != cube.num_metrics() ||
      shape.times != cube.num_times()) {
    throw DimensionError("model shape (" + std::to_string(shape.nodes) + " nodes, " +
                         std::to_string(shape.metrics) + " metrics, " +
                         std::to_string(shape.times) + " times) does not match cube (" +
                         std::to_string(cube.num_nodes()) + ", " +
                         std::to_string(cube.num_metrics()) + ", " +
                         std::to_string(cube.num_times()) + ")");
  }
}

double reconstruct_cell(const LatentModel& model, Index node, Index metric, Index time) {
  const auto& s = model.shape();
  check_index(node, s.nodes, "node");
  check_index(metric, s.metrics, "metric");
  check_index(time, s.times, "time");
  const auto& f = model.factors;
  return (f.static_nodes().row(node).cwiseProduct(f.dynamic_nodes(time).row(node)))
      .dot(f.metrics().row(metric));
}

Matrix reconstruct_slice(const LatentModel& model, Index time) {
  check_index(time, model.shape().times, "time");
  const auto& f = model.factors;
  return f.static_nodes().cwiseProduct(f.dynamic_nodes(time)) * f.metrics().transpose();
}

double objective(const LatentModel& model, const UsageCube& cube,
                 const ObjectiveOptions& options) {
  check_compatible(model.shape(), cube);
  const Index num_t = cube.num_times();
  std::vector<double> terms(static_cast<std::size_t>(num_t), 0.0);
#pragma omp parallel
  {
    Matrix product, residual;
#pragma omp for schedule(static)
    for (Index t = 0; t < num_t; ++t) {
      slice_residual(model.factors, cube, t, product, residual);
      terms[static_cast<std::size_t>(t)] = residual.squaredNorm();
    }
  }
  pairwise_reduce(terms, terms.size());
  double value = terms.front();
  if (options.l2_lambda > 0.0) value += options.l2_lambda * l2_norm_sq(model.factors);
  return value;
}

FactorSet gradients(const LatentModel& model, const UsageCube& cube,
                    const ObjectiveOptions& options) {
  FactorSet grad;
  objective_and_gradient(model.factors, cube, options, grad);
  return grad;
}

double objective_and_gradient(const FactorSet& params, const UsageCube& cube,
                              const ObjectiveOptions& options, FactorSet& grad,
                              std::span<const Index> slices, double slice_weight) {
  const ModelShape& shape = params.shape();
  check_compatible(shape, cube);
  std::vector<Index> every;
  if (slices.empty()) {
    every = all_slices(shape.times);
    slices = every;
  }
  for (Index t : slices) check_index(t, shape.times, "time");

  if (!(grad.shape() == shape)) grad = FactorSet(shape);
  if (options.l2_lambda > 0.0) {
    grad.flat() = (2.0 * options.l2_lambda) * params.flat();
  } else {
    grad.flat().setZero();
  }

  const auto count = slices.size();
  const double scale = -2.0 * slice_weight;
  const auto ubar = params.static_nodes();
  const auto v = params.metrics();
  double data_term = 0.0;

  if (options.reproducible_reduction) {
    // One partial per slice, reduced in a fixed tree order afterwards.
    // Buffers are reused across calls; bind references outside the parallel
    // region so workers share the calling thread's storage.
    static thread_local std::vector<Matrix> node_cache, metric_cache;
    static thread_local std::vector<double> obj_cache;
    auto& node_parts = node_cache;
    auto& metric_parts = metric_cache;
    auto& obj_parts = obj_cache;
    node_parts.resize(count);
    metric_parts.resize(count);
    obj_parts.assign(count, 0.0);
#pragma omp parallel
    {
      Matrix product, residual, rv;
#pragma omp for schedule(static)
      for (std::size_t i = 0; i < count; ++i) {
        const Index t = slices[i];
        slice_residual(params, cube, t, product, residual);
        obj_parts[i] = residual.squaredNorm();
        rv.noalias() = residual * v;
        grad.dynamic_nodes(t) += scale * rv.cwiseProduct(ubar);
        node_parts[i] = scale * rv.cwiseProduct(params.dynamic_nodes(t));
        metric_parts[i].noalias() = scale * residual.transpose() * product;
      }
    }
    pairwise_reduce(node_parts, count);
    pairwise_reduce(metric_parts, count);
    pairwise_reduce(obj_parts, count);
    grad.static_nodes() += node_parts.front();
    grad.metrics() += metric_parts.front();
    data_term = obj_parts.front();
  } else {
#pragma omp parallel
    {
      Matrix product, residual, rv;
      Matrix node_acc = Matrix::Zero(shape.nodes, shape.rank);
      Matrix metric_acc = Matrix::Zero(shape.metrics, shape.rank);
      double obj_acc = 0.0;
#pragma omp for schedule(static) nowait
      for (std::size_t i = 0; i < count; ++i) {
        const Index t = slices[i];
        slice_residual(params, cube, t, product, residual);
        obj_acc += residual.squaredNorm();
        rv.noalias() = residual * v;
        grad.dynamic_nodes(t) += scale * rv.cwiseProduct(ubar);
        node_acc += scale * rv.cwiseProduct(params.dynamic_nodes(t));
        metric_acc.noalias() += scale * residual.transpose() * product;
      }
#pragma omp critical(dynmf_gradient_reduce)
      {
        grad.static_nodes() += node_acc;
        grad.metrics() += metric_acc;
        data_term += obj_acc;
      }
    }
  }

  double value = slice_weight * data_term;
  if (options.l2_lambda > 0.0) value += options.l2_lambda * l2_norm_sq(params);
  return value;
}

}  // namespace dynmf
