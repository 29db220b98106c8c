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

#include "dynmf/usage_cube.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "dynmf/error.hpp"

namespace dynmf {

namespace {

void check_unique(const std::vector<std::string>& labels, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& label : labels) {
    if (label.empty()) throw DataError(std::string("empty ") + what + " label");
    if (!seen.insert(label).second) {
      throw DataError(std::string("duplicate ") + what + " label '" + label + "'");
    }
  }
}

}  // namespace

bool UsageCube::complete() const {
  if (!mask) return true;
  for (const auto& slice : *mask) {
    if (!slice.all()) return false;
  }
  return true;
}

std::size_t UsageCube::observed_count() const {
  if (!mask) {
    return static_cast<std::size_t>(num_nodes() * num_metrics() * num_times());
  }
  std::size_t count = 0;
  for (const auto& slice : *mask) count += static_cast<std::size_t>(slice.count());
  return count;
}

void UsageCube::validate() const {
  if (node_ids.empty() || metric_ids.empty() || timestamps.empty()) {
    throw DataError("cube must have at least one node, metric and timestamp");
  }
  check_unique(node_ids, "node");
  check_unique(metric_ids, "metric");
  for (std::size_t t = 1; t < timestamps.size(); ++t) {
    if (timestamps[t] <= timestamps[t - 1]) {
      throw DataError("timestamps must be strictly increasing");
    }
  }
  if (values.size() != timestamps.size()) {
    throw DataError("number of value slices does not match number of timestamps");
  }
  if (mask && mask->size() != timestamps.size()) {
    throw DataError("number of mask slices does not match number of timestamps");
  }
  for (Index t = 0; t < num_times(); ++t) {
    const auto& slice = values[static_cast<std::size_t>(t)];
    if (slice.rows() != num_nodes() || slice.cols() != num_metrics()) {
      throw DataError("slice " + std::to_string(t) + " has wrong shape");
    }
    if (mask) {
      const auto& m = (*mask)[static_cast<std::size_t>(t)];
      if (m.rows() != num_nodes() || m.cols() != num_metrics()) {
        throw DataError("mask slice " + std::to_string(t) + " has wrong shape");
      }
    }
    for (Index n = 0; n < num_nodes(); ++n) {
      for (Index m = 0; m < num_metrics(); ++m) {
        if (observed(n, m, t) && !std::isfinite(slice(n, m))) {
          throw DataError("non-finite value at node '" + node_ids[n] + "', metric '" +
                          metric_ids[m] + "', timestamp " +
                          std::to_string(timestamps[t]));
        }
      }
    }
  }
  if (normalization && normalization->size() != metric_ids.size()) {
    throw DataError("normalization constants do not match metric count");
  }
}

UsageCube normalize(const UsageCube& cube) {
  if (cube.normalization) throw std::logic_error("cube is already normalized");
  const Index num_m = cube.num_metrics();
  std::vector<MetricScaling> scaling(static_cast<std::size_t>(num_m));

  for (Index m = 0; m < num_m; ++m) {
    // Two passes over the observed cells; the second is on centered values.
    double sum = 0.0;
    std::size_t count = 0;
    for (Index t = 0; t < cube.num_times(); ++t) {
      for (Index n = 0; n < cube.num_nodes(); ++n) {
        if (!cube.observed(n, m, t)) continue;
        sum += cube.values[t](n, m);
        ++count;
      }
    }
    auto& s = scaling[static_cast<std::size_t>(m)];
    if (count == 0) continue;
    s.mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (Index t = 0; t < cube.num_times(); ++t) {
      for (Index n = 0; n < cube.num_nodes(); ++n) {
        if (!cube.observed(n, m, t)) continue;
        const double d = cube.values[t](n, m) - s.mean;
        sq += d * d;
      }
    }
    s.std = std::sqrt(sq / static_cast<double>(count));
    if (s.std == 0.0) s.std = 1.0;
  }

  UsageCube out = cube;
  for (Index t = 0; t < cube.num_times(); ++t) {
    auto& slice = out.values[t];
    for (Index n = 0; n < cube.num_nodes(); ++n) {
      for (Index m = 0; m < num_m; ++m) {
        if (!cube.observed(n, m, t)) {
          slice(n, m) = 0.0;
          continue;
        }
        const auto& s = scaling[static_cast<std::size_t>(m)];
        slice(n, m) = (slice(n, m) - s.mean) / s.std;
      }
    }
  }
  out.normalization = std::move(scaling);
  return out;
}

UsageCube denormalize(const UsageCube& cube) {
  if (!cube.normalization) throw std::logic_error("cube is not normalized");
  UsageCube out = cube;
  const auto& scaling = *cube.normalization;
  for (Index t = 0; t < cube.num_times(); ++t) {
    for (Index n = 0; n < cube.num_nodes(); ++n) {
      for (Index m = 0; m < cube.num_metrics(); ++m) {
        if (!cube.observed(n, m, t)) continue;
        const auto& s = scaling[static_cast<std::size_t>(m)];
        out.values[t](n, m) = cube.values[t](n, m) * s.std + s.mean;
      }
    }
  }
  out.normalization.reset();
  return out;
}

}  // namespace dynmf
