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

#ifndef DYNMF_SYNTH_HPP_
#define DYNMF_SYNTH_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dynmf/anomaly.hpp"
#include "dynmf/factor_model.hpp"
#include "dynmf/usage_cube.hpp"

namespace dynmf {

enum class InjectionShape {
  kSpike,       // added on [begin, end)
  kLevelShift,  // added from begin to the last timestep
};

struct Injection {
  Index node = 0;
  Index begin = 0;
  Index end = 1;
  std::vector<Index> metrics;  // empty: every metric
  double magnitude = 8.0;      // in multiples of noise_std
  InjectionShape shape = InjectionShape::kSpike;
};

struct NormalParams {
  double mean = 0.0;
  double std = 1.0;
};

// Planted-model cube generator settings.
struct SynthSpec {
  Index nodes = 50;
  Index metrics = 20;
  Index times = 200;
  Index rank = 5;
  double noise_std = 0.1;
  NormalParams static_nodes{0.0, 1.0};
  NormalParams metric_factors{0.0, 1.0};
  NormalParams dynamic_nodes{1.0, 0.2};
  std::vector<Injection> injections;
  std::uint64_t seed = 42;
  std::int64_t start_timestamp = 1362100201;
  std::int64_t step_seconds = 600;

  void validate() const;
};

// Cells touched by injections. `indicator` is T x N.
struct GroundTruth {
  std::vector<std::string> node_ids;
  std::vector<std::int64_t> timestamps;
  BoolMatrix indicator;
  std::vector<Injection> injections;

  std::size_t positives() const { return static_cast<std::size_t>(indicator.count()); }
};

struct SynthResult {
  UsageCube cube;
  LatentModel planted;
  GroundTruth truth;
  UsageCube clean;  // reconstruction of the planted model before noise
};

// `count` injections on distinct nodes, each `length` steps long with a start
// drawn uniformly so it fits in the series. Requires count <= nodes.
std::vector<Injection> random_injections(const SynthSpec& spec, Index count, Index length,
                                         double magnitude, InjectionShape shape,
                                         std::uint64_t seed);

// N=50, M=20, T=200, K=5, noise 0.1 and 20 five-step spikes of 8 noise-sigma
// across all metrics.
SynthSpec standard_benchmark_spec(std::uint64_t seed = 42);

// cube = planted reconstruction + Normal(0, noise_std^2) + injections.
// Draw order: static node factors, metric factors, dynamic slices, noise
// (t-major), all from one generator seeded by spec.seed.
SynthResult generate(const SynthSpec& spec);

// JSON spec file. Accepts explicit "injections" and/or a "random_injections"
// block {count, length, magnitude, shape, seed}.
SynthSpec synth_spec_from_json(const nlohmann::json& doc);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

// Truth CSV: `timestamp,node,injection` listing every injected cell.
void write_truth_csv(const GroundTruth& truth, const std::string& path);
// Reads truth cells against the label grid of `scores`; unknown labels are
// an error.
GroundTruth read_truth_csv(const std::string& path, const AnomalyScoreSeries& scores);

struct ThresholdMetrics {
  std::string label;
  double threshold = 0.0;
  std::size_t flagged = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::optional<double> precision;  // undefined when nothing is flagged
  std::optional<double> recall;     // undefined without positives
  std::optional<double> false_alarms_per_node_day;
};

struct DetectorMetrics {
  std::optional<double> auc;  // undefined without both classes
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::vector<ThresholdMetrics> thresholds;
};

// Rank-based ROC AUC with ties counted half.
std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<bool>& labels);

// AUC over scorable cells plus precision/recall for the series' own flags
// (if any) and for every extra method.
DetectorMetrics evaluate_detector(const AnomalyScoreSeries& scores, const GroundTruth& truth,
                                  const std::vector<FlagMethod>& methods = {});

// Negatives scoring at or above the lowest threshold that still captures
// ceil(recall * positives) positives.
std::size_t false_flags_at_recall(const AnomalyScoreSeries& scores, const GroundTruth& truth,
                                  double recall);

void write_metrics_csv(const DetectorMetrics& metrics, const std::string& path);

}  // namespace dynmf

#endif  // DYNMF_SYNTH_HPP_
