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

#ifndef DYNMF_ANOMALY_HPP_
#define DYNMF_ANOMALY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynmf/factor_model.hpp"
#include "dynmf/usage_cube.hpp"

namespace dynmf {

// Per-node, per-timestep anomaly scores. `scores` and `flags` are T x N
// (row = timestep, column = node).
struct AnomalyScoreSeries {
  std::vector<std::string> node_ids;
  std::vector<std::int64_t> timestamps;
  Matrix scores;
  // False where every metric of the cell was unobserved; such cells score 0
  // and are never flagged or used for thresholds.
  BoolMatrix scorable;
  std::optional<double> threshold;
  std::optional<BoolMatrix> flags;  // flags(t, n) = scores(t, n) > threshold

  Index num_nodes() const { return static_cast<Index>(node_ids.size()); }
  Index num_times() const { return static_cast<Index>(timestamps.size()); }

  // Scores of scorable cells in (t, n) order.
  std::vector<double> scorable_values() const;
  // Fraction of scorable cells that are flagged; 0 without flags.
  double flag_rate() const;
};

// a(n, t) = mean over observed metrics m of |z(n,m,t) - zhat(n,m,t)|.
AnomalyScoreSeries score(const LatentModel& model, const UsageCube& cube);

// Shared helper for detectors that produce a full reconstruction: averages
// |residual| over observed metrics for every (t, n) cell.
AnomalyScoreSeries score_residuals(const UsageCube& cube, const std::vector<Matrix>& recon);

struct FlagMethod {
  enum class Kind { kQuantile, kZScore };
  Kind kind = Kind::kQuantile;
  double parameter = 0.99;  // q in (0, 1) or k > 0

  // Parses "quantile:<q>" or "zscore:<k>"; throws std::invalid_argument.
  static FlagMethod parse(const std::string& text);
  std::string to_string() const;
};

// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);

// Threshold from all scorable scores (quantile or mean + k * population std);
// flags cells strictly above it. Throws std::invalid_argument for q outside
// (0, 1), k <= 0, or a series with no scorable cell.
AnomalyScoreSeries flag(const AnomalyScoreSeries& scores, const FlagMethod& method);

struct ErrorType {
  enum class Kind { kWriteError, kSegfault, kInodeError, kOther };
  Kind kind = Kind::kOther;
  std::string label;  // canonical name; free-form for kOther

  static ErrorType parse(const std::string& text);
  const std::string& name() const { return label; }
};

struct EventRecord {
  std::int64_t timestamp = 0;
  std::string node;
  ErrorType error_type;
};

struct EventMatch {
  EventRecord event;
  bool resolved = false;  // node found in the score series
  std::vector<Index> time_steps;  // within +-window of the event (inclusive)
  std::optional<double> local_score;  // max score over time_steps
  bool flag_cooccurs = false;
};

struct ErrorTypeSummary {
  std::string error_type;
  std::size_t events = 0;
  std::size_t resolved = 0;
  std::size_t cooccurring = 0;
  double cooccurrence_rate = 0.0;  // cooccurring / resolved
  std::size_t adjacent_cells = 0;
  double adjacent_mean = 0.0;
  double adjacent_median = 0.0;
};

struct AlignmentReport {
  std::int64_t window_seconds = 0;
  std::vector<EventMatch> matches;     // input order
  std::vector<EventRecord> unresolved;
  std::vector<ErrorTypeSummary> by_type;  // sorted by error type name
  double base_flag_rate = 0.0;
  std::size_t background_cells = 0;  // scorable cells adjacent to no event
  double background_mean = 0.0;
  double background_median = 0.0;
};

// Matches every event to the timesteps within +-window seconds at its node.
// Requires flagged scores. Throws std::invalid_argument if window <= 0 or the
// series carries no flags.
AlignmentReport align_events(const AnomalyScoreSeries& scores,
                             const std::vector<EventRecord>& events,
                             std::int64_t window_seconds = 600);

// Scores CSV: `timestamp,node,score,flag`, sorted by timestamp then node.
// An empty score marks an unscorable cell; flag is 1/0, or empty for an
// unflagged series.
void write_scores_csv(const AnomalyScoreSeries& scores, const std::string& path);
// Rebuilds a series from a scores CSV. When flags are present the threshold is
// recovered as the largest unflagged score, which reproduces the flags.
AnomalyScoreSeries read_scores_csv(const std::string& path);

// Events CSV: `timestamp,node,error_type`.
std::vector<EventRecord> read_events_csv(const std::string& path);
void write_events_csv(const std::vector<EventRecord>& events, const std::string& path);

// Per-event rows plus a per-error-type summary file.
void write_alignment_csv(const AlignmentReport& report, const std::string& path);
void write_alignment_summary_csv(const AlignmentReport& report, const std::string& path);

}  // namespace dynmf

#endif  // DYNMF_ANOMALY_HPP_
