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

#include "dynmf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "dynmf/text.hpp"

namespace dynmf {

Projection2D pca_2d(const Matrix& rows, const std::vector<std::string>& labels) {
  if (rows.rows() < 2) throw std::invalid_argument("PCA needs at least two points");
  if (rows.cols() < 2) throw std::invalid_argument("PCA needs at least two dimensions");
  if (static_cast<Index>(labels.size()) != rows.rows()) {
    throw std::invalid_argument("one label per row is required");
  }
  if (!rows.allFinite()) throw std::invalid_argument("PCA input has non-finite entries");

  const Matrix centered = rows.rowwise() - rows.colwise().mean();
  const Matrix covariance =
      (centered.transpose() * centered) / static_cast<double>(rows.rows() - 1);
  const double total = covariance.trace();
  if (!(total > 0.0)) throw std::invalid_argument("PCA input has rank 0 (identical rows)");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  const Index k = rows.cols();

  Projection2D out;
  out.labels = labels;
  out.loadings.resize(k, 2);
  for (int c = 0; c < 2; ++c) {
    // Eigenvalues come back in ascending order.
    const Index idx = k - 1 - c;
    Vector axis = solver.eigenvectors().col(idx);
    Index largest = 0;
    for (Index i = 1; i < k; ++i) {
      if (std::abs(axis(i)) > std::abs(axis(largest))) largest = i;
    }
    if (axis(largest) < 0.0) axis = -axis;
    out.loadings.col(c) = axis;
    out.explained_variance[static_cast<std::size_t>(c)] =
        std::clamp(solver.eigenvalues()(idx) / total, 0.0, 1.0);
  }
  out.coordinates = centered * out.loadings;
  return out;
}

CorrelationMatrix column_correlations(const Matrix& samples) {
  if (samples.rows() < 2) throw std::invalid_argument("correlation needs at least two samples");
  const Index k = samples.cols();
  const Matrix centered = samples.rowwise() - samples.colwise().mean();
  const Vector norms = centered.colwise().norm();

  CorrelationMatrix out;
  out.values = Matrix::Identity(k, k);
  for (Index i = 0; i < k; ++i) {
    if (norms(i) == 0.0) out.degenerate_dimensions.push_back(i);
  }
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) {
      double r = 0.0;
      if (norms(i) > 0.0 && norms(j) > 0.0) {
        r = std::clamp(centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j)), -1.0, 1.0);
      }
      out.values(i, j) = r;
      out.values(j, i) = r;
    }
  }
  return out;
}

CorrelationMatrix latent_correlations(const LatentModel& model) {
  const auto& s = model.shape();
  Matrix pooled(s.nodes * s.times, s.rank);
  for (Index t = 0; t < s.times; ++t) {
    pooled.middleRows(t * s.nodes, s.nodes) = model.factors.dynamic_nodes(t);
  }
  return column_correlations(pooled);
}

void write_projection_csv(const Projection2D& projection, const std::string& path) {
  auto out = text::open_output(path);
  out << "label,pc1,pc2\n";
  for (Index i = 0; i < projection.coordinates.rows(); ++i) {
    out << projection.labels[i] << ',' << text::format_double(projection.coordinates(i, 0))
        << ',' << text::format_double(projection.coordinates(i, 1)) << '\n';
  }
}

void write_correlation_csv(const CorrelationMatrix& corr, const std::string& path) {
  auto out = text::open_output(path);
  out << "dim";
  for (Index j = 0; j < corr.values.cols(); ++j) out << ',' << j;
  out << '\n';
  for (Index i = 0; i < corr.values.rows(); ++i) {
    out << i;
    for (Index j = 0; j < corr.values.cols(); ++j) {
      out << ',' << text::format_double(corr.values(i, j));
    }
    out << '\n';
  }
}

}  // namespace dynmf
