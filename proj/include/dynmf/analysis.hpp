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

#ifndef DYNMF_ANALYSIS_HPP_
#define DYNMF_ANALYSIS_HPP_

#include <array>
#include <string>
#include <vector>

#include "dynmf/factor_model.hpp"

namespace dynmf {

struct Projection2D {
  std::vector<std::string> labels;
  Matrix coordinates;                        // P x 2
  std::array<double, 2> explained_variance;  // fractions of total variance
  Matrix loadings;                           // K x 2, unit columns
};

// Projects the centered rows onto the top two eigenvectors of their sample
// covariance (1 / (P - 1)). Each loading vector is oriented so its entry of
// largest magnitude is positive (earliest index on ties).
//
// Throws std::invalid_argument if P < 2, K < 2, labels do not match the rows,
// an entry is non-finite, or all rows are identical.
Projection2D pca_2d(const Matrix& rows, const std::vector<std::string>& labels);

struct CorrelationMatrix {
  Matrix values;  // K x K
  // Dimensions with zero variance; their off-diagonal entries are 0.
  std::vector<Index> degenerate_dimensions;
};

// Pearson correlation between columns of `samples` (one observation per row).
CorrelationMatrix column_correlations(const Matrix& samples);

// Correlations among latent dimensions over the pooled (node, time) samples
// of the dynamic node factors.
CorrelationMatrix latent_correlations(const LatentModel& model);

// `label,pc1,pc2`
void write_projection_csv(const Projection2D& projection, const std::string& path);
// Header `dim,0,1,...,K-1`; one row per dimension starting with its index.
void write_correlation_csv(const CorrelationMatrix& corr, const std::string& path);

}  // namespace dynmf

#endif  // DYNMF_ANALYSIS_HPP_
