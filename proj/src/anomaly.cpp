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

#include "dynmf/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "dynmf/error.hpp"
#include "dynmf/text.hpp"

namespace dynmf {

namespace {

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double median_of(const std::vector<double>& values) {
  return values.empty() ? 0.0 : quantile(values, 0.5);
}

// Column order of node labels when sorted lexicographically.
std::vector<Index> sorted_node_order(const std::vector<std::string>& labels) {
  std::vector<Index> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return labels[a] < labels[b]; });
  return order;
}

}  // namespace

std::vector<double> AnomalyScoreSeries::scorable_values() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(scores.size()));
  for (Index t = 0; t < scores.rows(); ++t) {
    for (Index n = 0; n < scores.cols(); ++n) {
      if (scorable(t, n)) out.push_back(scores(t, n));
    }
  }
  return out;
}

double AnomalyScoreSeries::flag_rate() const {
  if (!flags) return 0.0;
  const auto total = scorable.count();
  if (total == 0) return 0.0;
  return static_cast<double>((flags->array() && scorable.array()).count()) /
         static_cast<double>(total);
}

AnomalyScoreSeries score_residuals(const UsageCube& cube, const std::vector<Matrix>& recon) {
  if (static_cast<Index>(recon.size()) != cube.num_times()) {
    throw DimensionError("reconstruction has wrong number of slices");
  }
  AnomalyScoreSeries out;
  out.node_ids = cube.node_ids;
  out.timestamps = cube.timestamps;
  out.scores = Matrix::Zero(cube.num_times(), cube.num_nodes());
  out.scorable = BoolMatrix::Constant(cube.num_times(), cube.num_nodes(), true);
  for (Index t = 0; t < cube.num_times(); ++t) {
    const Matrix& r = recon[static_cast<std::size_t>(t)];
    if (r.rows() != cube.num_nodes() || r.cols() != cube.num_metrics()) {
      throw DimensionError("reconstruction slice has wrong shape");
    }
    for (Index n = 0; n < cube.num_nodes(); ++n) {
      double sum = 0.0;
      Index count = 0;
      for (Index m = 0; m < cube.num_metrics(); ++m) {
        if (!cube.observed(n, m, t)) continue;
        sum += std::abs(cube.values[t](n, m) - r(n, m));
        ++count;
      }
      if (count == 0) {
        out.scorable(t, n) = false;
      } else {
        out.scores(t, n) = sum / static_cast<double>(count);
      }
    }
  }
  return out;
}

AnomalyScoreSeries score(const LatentModel& model, const UsageCube& cube) {
  check_compatible(model.shape(), cube);
  std::vector<Matrix> recon(static_cast<std::size_t>(cube.num_times()));
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < cube.num_times(); ++t) {
    recon[static_cast<std::size_t>(t)] = reconstruct_slice(model, t);
  }
  return score_residuals(cube, recon);
}

FlagMethod FlagMethod::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("flag method must be quantile:<q> or zscore:<k>");
  }
  const std::string kind = spec.substr(0, colon);
  const auto value = text::parse_finite(spec.substr(colon + 1));
  if (!value) throw std::invalid_argument("invalid flag parameter in '" + spec + "'");
  FlagMethod method;
  method.parameter = *value;
  if (kind == "quantile") {
    method.kind = Kind::kQuantile;
  } else if (kind == "zscore") {
    method.kind = Kind::kZScore;
  } else {
    throw std::invalid_argument("unknown flag method '" + kind + "'");
  }
  return method;
}

std::string FlagMethod::to_string() const {
  return (kind == Kind::kQuantile ? "quantile:" : "zscore:") + text::format_double(parameter);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

AnomalyScoreSeries flag(const AnomalyScoreSeries& scores, const FlagMethod& method) {
  if (method.kind == FlagMethod::Kind::kQuantile &&
      !(method.parameter > 0.0 && method.parameter < 1.0)) {
    throw std::invalid_argument("quantile level must be in (0, 1)");
  }
  if (method.kind == FlagMethod::Kind::kZScore && !(method.parameter > 0.0)) {
    throw std::invalid_argument("z-score multiplier must be > 0");
  }
  const auto values = scores.scorable_values();
  if (values.empty()) throw std::invalid_argument("no scorable cells to threshold");

  double threshold = 0.0;
  if (method.kind == FlagMethod::Kind::kQuantile) {
    threshold = quantile(values, method.parameter);
  } else {
    const double mu = mean_of(values);
    double sq = 0.0;
    for (double v : values) sq += (v - mu) * (v - mu);
    threshold = mu + method.parameter * std::sqrt(sq / static_cast<double>(values.size()));
  }

  AnomalyScoreSeries out = scores;
  out.threshold = threshold;
  out.flags = (scores.scores.array() > threshold) && scores.scorable.array();
  return out;
}

ErrorType ErrorType::parse(const std::string& raw) {
  const std::string name = text::trim(raw);
  if (name.empty()) throw std::invalid_argument("empty error type");
  if (name == "write_error") return {Kind::kWriteError, name};
  if (name == "segfault") return {Kind::kSegfault, name};
  if (name == "inode_error") return {Kind::kInodeError, name};
  return {Kind::kOther, name};
}

AlignmentReport align_events(const AnomalyScoreSeries& scores,
                             const std::vector<EventRecord>& events,
                             std::int64_t window_seconds) {
  if (window_seconds <= 0) throw std::invalid_argument("alignment window must be > 0");
  if (!scores.flags) throw std::invalid_argument("alignment requires flagged scores");
  const BoolMatrix& flags = *scores.flags;

  std::unordered_map<std::string, Index> node_index;
  for (Index n = 0; n < scores.num_nodes(); ++n) node_index.emplace(scores.node_ids[n], n);

  AlignmentReport report;
  report.window_seconds = window_seconds;
  report.base_flag_rate = scores.flag_rate();
  BoolMatrix adjacent_any = BoolMatrix::Constant(scores.num_times(), scores.num_nodes(), false);
  std::map<std::string, BoolMatrix> adjacent_by_type;
  std::map<std::string, ErrorTypeSummary> summaries;

  for (const auto& event : events) {
    EventMatch match;
    match.event = event;
    auto& summary = summaries[event.error_type.name()];
    summary.error_type = event.error_type.name();
    summary.events += 1;

    const auto it = node_index.find(event.node);
    if (it == node_index.end()) {
      report.unresolved.push_back(event);
      report.matches.push_back(std::move(match));
      continue;
    }
    match.resolved = true;
    summary.resolved += 1;
    const Index n = it->second;
    auto& adjacent = adjacent_by_type
                         .try_emplace(summary.error_type,
                                      BoolMatrix::Constant(scores.num_times(),
                                                           scores.num_nodes(), false))
                         .first->second;

    const auto first = std::lower_bound(scores.timestamps.begin(), scores.timestamps.end(),
                                        event.timestamp - window_seconds);
    const auto last = std::upper_bound(scores.timestamps.begin(), scores.timestamps.end(),
                                       event.timestamp + window_seconds);
    for (auto ts = first; ts != last; ++ts) {
      const auto t = static_cast<Index>(ts - scores.timestamps.begin());
      match.time_steps.push_back(t);
      if (!scores.scorable(t, n)) continue;
      match.local_score = std::max(match.local_score.value_or(scores.scores(t, n)),
                                   scores.scores(t, n));
      match.flag_cooccurs = match.flag_cooccurs || flags(t, n);
      adjacent(t, n) = true;
      adjacent_any(t, n) = true;
    }
    if (match.flag_cooccurs) summary.cooccurring += 1;
    report.matches.push_back(std::move(match));
  }

  for (auto& [name, summary] : summaries) {
    summary.cooccurrence_rate =
        summary.resolved == 0 ? 0.0
                              : static_cast<double>(summary.cooccurring) /
                                    static_cast<double>(summary.resolved);
    std::vector<double> adjacent_scores;
    if (const auto a = adjacent_by_type.find(name); a != adjacent_by_type.end()) {
      for (Index t = 0; t < scores.num_times(); ++t) {
        for (Index n = 0; n < scores.num_nodes(); ++n) {
          if (a->second(t, n)) adjacent_scores.push_back(scores.scores(t, n));
        }
      }
    }
    summary.adjacent_cells = adjacent_scores.size();
    summary.adjacent_mean = mean_of(adjacent_scores);
    summary.adjacent_median = median_of(adjacent_scores);
    report.by_type.push_back(summary);
  }

  std::vector<double> background;
  for (Index t = 0; t < scores.num_times(); ++t) {
    for (Index n = 0; n < scores.num_nodes(); ++n) {
      if (scores.scorable(t, n) && !adjacent_any(t, n)) background.push_back(scores.scores(t, n));
    }
  }
  report.background_cells = background.size();
  report.background_mean = mean_of(background);
  report.background_median = median_of(background);
  return report;
}

void write_scores_csv(const AnomalyScoreSeries& scores, const std::string& path) {
  auto out = text::open_output(path);
  out << "timestamp,node,score,flag\n";
  const auto order = sorted_node_order(scores.node_ids);
  for (Index t = 0; t < scores.num_times(); ++t) {
    for (Index n : order) {
      out << scores.timestamps[t] << ',' << scores.node_ids[n] << ',';
      if (scores.scorable(t, n)) out << text::format_double(scores.scores(t, n));
      out << ',';
      if (scores.flags) out << ((*scores.flags)(t, n) ? '1' : '0');
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

AnomalyScoreSeries read_scores_csv(const std::string& path) {
  struct Row {
    std::int64_t timestamp;
    std::string node;
    std::optional<double> score;
    std::optional<bool> flag;
    std::size_t line;
  };
  text::LineReader reader(path);
  std::string line;
  if (!reader.next(line)) throw DataError("empty file '" + path + "'");
  if (text::trim(line) != "timestamp,node,score,flag") {
    throw DataError("header must be 'timestamp,node,score,flag'", 1);
  }
  std::vector<Row> rows;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = text::split_fields(line);
    const std::size_t ln = reader.line_number();
    if (fields.size() != 4) throw DataError("expected 4 fields", ln);
    Row row{0, text::trim(fields[1]), std::nullopt, std::nullopt, ln};
    const auto ts = text::parse_int(text::trim(fields[0]));
    if (!ts) throw DataError("invalid timestamp", ln);
    row.timestamp = *ts;
    if (row.node.empty()) throw DataError("empty node label", ln);
    if (const auto s = text::trim(fields[2]); !s.empty()) {
      row.score = text::parse_finite(s);
      if (!row.score || *row.score < 0.0) throw DataError("invalid score '" + s + "'", ln);
    }
    if (const auto f = text::trim(fields[3]); !f.empty()) {
      if (f != "0" && f != "1") throw DataError("flag must be 0, 1 or empty", ln);
      row.flag = f == "1";
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows in '" + path + "'");

  std::set<std::string> nodes;
  std::set<std::int64_t> times;
  for (const auto& r : rows) {
    nodes.insert(r.node);
    times.insert(r.timestamp);
  }
  AnomalyScoreSeries out;
  out.node_ids.assign(nodes.begin(), nodes.end());
  out.timestamps.assign(times.begin(), times.end());
  std::unordered_map<std::string, Index> node_index;
  for (Index n = 0; n < out.num_nodes(); ++n) node_index.emplace(out.node_ids[n], n);
  std::unordered_map<std::int64_t, Index> time_index;
  for (Index t = 0; t < out.num_times(); ++t) time_index.emplace(out.timestamps[t], t);

  const bool flagged = rows.front().flag.has_value();
  out.scores = Matrix::Zero(out.num_times(), out.num_nodes());
  out.scorable = BoolMatrix::Constant(out.num_times(), out.num_nodes(), false);
  BoolMatrix seen = BoolMatrix::Constant(out.num_times(), out.num_nodes(), false);
  BoolMatrix flags = BoolMatrix::Constant(out.num_times(), out.num_nodes(), false);
  for (const auto& r : rows) {
    if (r.flag.has_value() != flagged) {
      throw DataError("flag column must be filled on every row or on none", r.line);
    }
    const Index t = time_index.at(r.timestamp);
    const Index n = node_index.at(r.node);
    if (seen(t, n)) throw DataError("duplicate row for node '" + r.node + "'", r.line);
    seen(t, n) = true;
    if (r.score) {
      out.scores(t, n) = *r.score;
      out.scorable(t, n) = true;
    }
    if (r.flag) flags(t, n) = *r.flag;
  }
  if (!seen.all()) throw DataError("scores file does not cover every (timestamp, node) pair");

  if (flagged) {
    if ((flags && !out.scorable).any()) throw DataError("unscorable cell is flagged");
    std::optional<double> max_unflagged, min_flagged;
    for (Index t = 0; t < out.num_times(); ++t) {
      for (Index n = 0; n < out.num_nodes(); ++n) {
        if (!out.scorable(t, n)) continue;
        const double s = out.scores(t, n);
        if (flags(t, n)) {
          min_flagged = std::min(min_flagged.value_or(s), s);
        } else {
          max_unflagged = std::max(max_unflagged.value_or(s), s);
        }
      }
    }
    if (max_unflagged && min_flagged && !(*min_flagged > *max_unflagged)) {
      throw DataError("flags are not consistent with any score threshold");
    }
    out.threshold = max_unflagged ? *max_unflagged
                                  : std::nextafter(min_flagged.value_or(0.0), -HUGE_VAL);
    out.flags = std::move(flags);
  }
  return out;
}

std::vector<EventRecord> read_events_csv(const std::string& path) {
  text::LineReader reader(path);
  std::string line;
  if (!reader.next(line)) throw DataError("empty file '" + path + "'");
  if (text::trim(line) != "timestamp,node,error_type") {
    throw DataError("header must be 'timestamp,node,error_type'", 1);
  }
  std::vector<EventRecord> events;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = text::split_fields(line);
    const std::size_t ln = reader.line_number();
    if (fields.size() != 3) throw DataError("expected 3 fields", ln);
    const auto ts = text::parse_int(text::trim(fields[0]));
    if (!ts) throw DataError("invalid timestamp", ln);
    EventRecord event;
    event.timestamp = *ts;
    event.node = text::trim(fields[1]);
    if (event.node.empty()) throw DataError("empty node label", ln);
    try {
      event.error_type = ErrorType::parse(std::string(fields[2]));
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what(), ln);
    }
    events.push_back(std::move(event));
  }
  return events;
}

void write_events_csv(const std::vector<EventRecord>& events, const std::string& path) {
  auto out = text::open_output(path);
  out << "timestamp,node,error_type\n";
  for (const auto& e : events) {
    out << e.timestamp << ',' << e.node << ',' << e.error_type.name() << '\n';
  }
}

void write_alignment_csv(const AlignmentReport& report, const std::string& path) {
  auto out = text::open_output(path);
  out << "event_index,timestamp,node,error_type,resolved,matched_steps,local_score,"
         "flag_cooccurs\n";
  for (std::size_t i = 0; i < report.matches.size(); ++i) {
    const auto& m = report.matches[i];
    out << i << ',' << m.event.timestamp << ',' << m.event.node << ','
        << m.event.error_type.name() << ',' << (m.resolved ? 1 : 0) << ','
        << m.time_steps.size() << ',';
    if (m.local_score) out << text::format_double(*m.local_score);
    out << ',' << (m.flag_cooccurs ? 1 : 0) << '\n';
  }
}

void write_alignment_summary_csv(const AlignmentReport& report, const std::string& path) {
  auto out = text::open_output(path);
  out << "error_type,events,resolved,cooccurring,cooccurrence_rate,adjacent_cells,"
         "adjacent_mean,adjacent_median,background_cells,background_mean,"
         "background_median,base_flag_rate\n";
  for (const auto& s : report.by_type) {
    out << s.error_type << ',' << s.events << ',' << s.resolved << ',' << s.cooccurring << ','
        << text::format_double(s.cooccurrence_rate) << ',' << s.adjacent_cells << ','
        << text::format_double(s.adjacent_mean) << ','
        << text::format_double(s.adjacent_median) << ',' << report.background_cells << ','
        << text::format_double(report.background_mean) << ','
        << text::format_double(report.background_median) << ','
        << text::format_double(report.base_flag_rate) << '\n';
  }
}

}  // namespace dynmf
