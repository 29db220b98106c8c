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

#include "dynmf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "dynmf/error.hpp"
#include "dynmf/text.hpp"

namespace dynmf {

using nlohmann::json;

namespace {

std::string padded_label(const char* prefix, Index i, Index count) {
  int width = 1;
  for (Index c = count - 1; c >= 10; c /= 10) ++width;
  width = std::max(width, 3);
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return prefix + digits;
}

const char* shape_name(InjectionShape shape) {
  return shape == InjectionShape::kSpike ? "spike" : "level-shift";
}

InjectionShape parse_shape(const std::string& name) {
  if (name == "spike") return InjectionShape::kSpike;
  if (name == "level-shift" || name == "level_shift") return InjectionShape::kLevelShift;
  throw std::invalid_argument("unknown injection shape '" + name + "'");
}

NormalParams normal_from_json(const json& doc, const char* key, NormalParams fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& j = doc.at(key);
  return {j.value("mean", fallback.mean), j.value("std", fallback.std)};
}

template <typename Map>
void fill_normal(Map&& block, std::mt19937_64& rng, const NormalParams& params) {
  std::normal_distribution<double> dist(params.mean, params.std);
  for (Index c = 0; c < block.cols(); ++c) {
    for (Index r = 0; r < block.rows(); ++r) block(r, c) = dist(rng);
  }
}

std::optional<double> node_days(Index nodes, const std::vector<std::int64_t>& timestamps) {
  if (timestamps.size() < 2) return std::nullopt;
  std::int64_t step = timestamps[1] - timestamps[0];
  for (std::size_t i = 2; i < timestamps.size(); ++i) {
    step = std::min(step, timestamps[i] - timestamps[i - 1]);
  }
  return static_cast<double>(nodes) * static_cast<double>(timestamps.size()) *
         static_cast<double>(step) / 86400.0;
}

void check_aligned(const AnomalyScoreSeries& scores, const GroundTruth& truth) {
  if (scores.node_ids != truth.node_ids || scores.timestamps != truth.timestamps) {
    throw DimensionError("scores and ground truth cover different cells");
  }
}

std::string optional_field(const std::optional<double>& value) {
  return value ? text::format_double(*value) : std::string("undefined");
}

}  // namespace

void SynthSpec::validate() const {
  if (nodes < 1 || metrics < 1 || times < 1 || rank < 1) {
    throw std::invalid_argument("synthetic dimensions must be >= 1");
  }
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
  if (step_seconds < 1) throw std::invalid_argument("step_seconds must be >= 1");
  for (const auto& inj : injections) {
    if (inj.node < 0 || inj.node >= nodes) throw std::invalid_argument("injection node out of range");
    if (inj.begin < 0 || inj.begin >= times || inj.end <= inj.begin || inj.end > times) {
      throw std::invalid_argument("injection time range out of range");
    }
    for (Index m : inj.metrics) {
      if (m < 0 || m >= metrics) throw std::invalid_argument("injection metric out of range");
    }
  }
}

std::vector<Injection> random_injections(const SynthSpec& spec, Index count, Index length,
                                         double magnitude, InjectionShape shape,
                                         std::uint64_t seed) {
  if (count < 0 || count > spec.nodes) {
    throw std::invalid_argument("injection count must be in [0, nodes]");
  }
  if (length < 1 || length > spec.times) {
    throw std::invalid_argument("injection length must be in [1, times]");
  }
  std::mt19937_64 rng(seed);
  std::vector<Index> nodes(static_cast<std::size_t>(spec.nodes));
  for (Index n = 0; n < spec.nodes; ++n) nodes[static_cast<std::size_t>(n)] = n;
  std::shuffle(nodes.begin(), nodes.end(), rng);
  std::uniform_int_distribution<Index> start(0, spec.times - length);
  std::vector<Injection> out;
  for (Index i = 0; i < count; ++i) {
    Injection inj;
    inj.node = nodes[static_cast<std::size_t>(i)];
    inj.begin = start(rng);
    inj.end = inj.begin + length;
    inj.magnitude = magnitude;
    inj.shape = shape;
    out.push_back(inj);
  }
  std::sort(out.begin(), out.end(), [](const Injection& a, const Injection& b) {
    return std::tie(a.begin, a.node) < std::tie(b.begin, b.node);
  });
  return out;
}

SynthSpec standard_benchmark_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.injections = random_injections(spec, 20, 5, 8.0, InjectionShape::kSpike, seed + 1);
  return spec;
}

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  SynthResult result;
  UsageCube& cube = result.cube;
  for (Index n = 0; n < spec.nodes; ++n) cube.node_ids.push_back(padded_label("node-", n, spec.nodes));
  for (Index m = 0; m < spec.metrics; ++m) {
    cube.metric_ids.push_back(padded_label("metric-", m, spec.metrics));
  }
  for (Index t = 0; t < spec.times; ++t) {
    cube.timestamps.push_back(spec.start_timestamp + t * spec.step_seconds);
  }

  std::mt19937_64 rng(spec.seed);
  LatentModel& planted = result.planted;
  planted = LatentModel::for_cube(cube, spec.rank);
  fill_normal(planted.factors.static_nodes(), rng, spec.static_nodes);
  fill_normal(planted.factors.metrics(), rng, spec.metric_factors);
  for (Index t = 0; t < spec.times; ++t) {
    fill_normal(planted.factors.dynamic_nodes(t), rng, spec.dynamic_nodes);
  }

  result.clean = cube;
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Index t = 0; t < spec.times; ++t) {
    Matrix slice = reconstruct_slice(planted, t);
    result.clean.values.push_back(slice);
    if (spec.noise_std > 0.0) {
      for (Index n = 0; n < spec.nodes; ++n) {
        for (Index m = 0; m < spec.metrics; ++m) slice(n, m) += spec.noise_std * noise(rng);
      }
    }
    cube.values.push_back(std::move(slice));
  }

  GroundTruth& truth = result.truth;
  truth.node_ids = cube.node_ids;
  truth.timestamps = cube.timestamps;
  truth.indicator = BoolMatrix::Constant(spec.times, spec.nodes, false);
  truth.injections = spec.injections;
  for (const auto& inj : spec.injections) {
    const Index end = inj.shape == InjectionShape::kSpike ? inj.end : spec.times;
    const double delta = inj.magnitude * spec.noise_std;
    for (Index t = inj.begin; t < end; ++t) {
      truth.indicator(t, inj.node) = true;
      if (inj.metrics.empty()) {
        cube.values[t].row(inj.node).array() += delta;
      } else {
        for (Index m : inj.metrics) cube.values[t](inj.node, m) += delta;
      }
    }
  }
  return result;
}

SynthSpec synth_spec_from_json(const json& doc) {
  SynthSpec spec;
  try {
    spec.nodes = doc.value("nodes", spec.nodes);
    spec.metrics = doc.value("metrics", spec.metrics);
    spec.times = doc.value("times", spec.times);
    spec.rank = doc.value("rank", spec.rank);
    spec.noise_std = doc.value("noise_std", spec.noise_std);
    spec.seed = doc.value("seed", spec.seed);
    spec.start_timestamp = doc.value("start_timestamp", spec.start_timestamp);
    spec.step_seconds = doc.value("step_seconds", spec.step_seconds);
    spec.static_nodes = normal_from_json(doc, "static_nodes", spec.static_nodes);
    spec.metric_factors = normal_from_json(doc, "metric_factors", spec.metric_factors);
    spec.dynamic_nodes = normal_from_json(doc, "dynamic_nodes", spec.dynamic_nodes);
    if (doc.contains("injections")) {
      for (const auto& j : doc.at("injections")) {
        Injection inj;
        inj.node = j.at("node").get<Index>();
        inj.begin = j.at("begin").get<Index>();
        inj.end = j.value("end", inj.begin + 1);
        inj.metrics = j.value("metrics", std::vector<Index>{});
        inj.magnitude = j.value("magnitude", inj.magnitude);
        inj.shape = parse_shape(j.value("shape", std::string("spike")));
        spec.injections.push_back(std::move(inj));
      }
    }
    if (doc.contains("random_injections")) {
      const auto& r = doc.at("random_injections");
      const auto extra = random_injections(
          spec, r.value("count", Index{20}), r.value("length", Index{5}),
          r.value("magnitude", 8.0), parse_shape(r.value("shape", std::string("spike"))),
          r.value("seed", spec.seed + 1));
      spec.injections.insert(spec.injections.end(), extra.begin(), extra.end());
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed synth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json synth_spec_to_json(const SynthSpec& spec) {
  json doc;
  doc["nodes"] = spec.nodes;
  doc["metrics"] = spec.metrics;
  doc["times"] = spec.times;
  doc["rank"] = spec.rank;
  doc["noise_std"] = spec.noise_std;
  doc["seed"] = spec.seed;
  doc["start_timestamp"] = spec.start_timestamp;
  doc["step_seconds"] = spec.step_seconds;
  doc["static_nodes"] = {{"mean", spec.static_nodes.mean}, {"std", spec.static_nodes.std}};
  doc["metric_factors"] = {{"mean", spec.metric_factors.mean}, {"std", spec.metric_factors.std}};
  doc["dynamic_nodes"] = {{"mean", spec.dynamic_nodes.mean}, {"std", spec.dynamic_nodes.std}};
  json injections = json::array();
  for (const auto& inj : spec.injections) {
    injections.push_back({{"node", inj.node},
                          {"begin", inj.begin},
                          {"end", inj.end},
                          {"metrics", inj.metrics},
                          {"magnitude", inj.magnitude},
                          {"shape", shape_name(inj.shape)}});
  }
  doc["injections"] = injections;
  return doc;
}

void write_truth_csv(const GroundTruth& truth, const std::string& path) {
  // Injection index per cell; later injections win on overlap.
  Eigen::Array<long long, Eigen::Dynamic, Eigen::Dynamic> owner =
      Eigen::Array<long long, Eigen::Dynamic, Eigen::Dynamic>::Constant(
          truth.indicator.rows(), truth.indicator.cols(), -1);
  const auto num_t = static_cast<Index>(truth.timestamps.size());
  for (std::size_t i = 0; i < truth.injections.size(); ++i) {
    const auto& inj = truth.injections[i];
    const Index end = inj.shape == InjectionShape::kSpike ? inj.end : num_t;
    for (Index t = inj.begin; t < end; ++t) owner(t, inj.node) = static_cast<long long>(i);
  }
  std::vector<Index> order(truth.node_ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return truth.node_ids[a] < truth.node_ids[b]; });

  auto out = text::open_output(path);
  out << "timestamp,node,injection\n";
  for (Index t = 0; t < num_t; ++t) {
    for (Index n : order) {
      if (!truth.indicator(t, n)) continue;
      out << truth.timestamps[t] << ',' << truth.node_ids[n] << ',';
      if (owner(t, n) >= 0) out << owner(t, n);
      out << '\n';
    }
  }
}

GroundTruth read_truth_csv(const std::string& path, const AnomalyScoreSeries& scores) {
  text::LineReader reader(path);
  std::string line;
  if (!reader.next(line)) throw DataError("empty file '" + path + "'");
  if (text::trim(line) != "timestamp,node,injection") {
    throw DataError("header must be 'timestamp,node,injection'", 1);
  }
  GroundTruth truth;
  truth.node_ids = scores.node_ids;
  truth.timestamps = scores.timestamps;
  truth.indicator = BoolMatrix::Constant(scores.num_times(), scores.num_nodes(), false);
  std::unordered_map<std::string, Index> node_index;
  for (Index n = 0; n < scores.num_nodes(); ++n) node_index.emplace(scores.node_ids[n], n);
  std::unordered_map<std::int64_t, Index> time_index;
  for (Index t = 0; t < scores.num_times(); ++t) time_index.emplace(scores.timestamps[t], t);

  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = text::split_fields(line);
    const std::size_t ln = reader.line_number();
    if (fields.size() != 3) throw DataError("expected 3 fields", ln);
    const auto ts = text::parse_int(text::trim(fields[0]));
    if (!ts) throw DataError("invalid timestamp", ln);
    const auto t = time_index.find(*ts);
    if (t == time_index.end()) throw DataError("timestamp not present in scores", ln);
    const auto n = node_index.find(text::trim(fields[1]));
    if (n == node_index.end()) throw DataError("node not present in scores", ln);
    truth.indicator(t->second, n->second) = true;
  }
  return truth;
}

std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores/labels size mismatch");
  const std::size_t total = scores.size();
  std::size_t positives = 0;
  for (bool l : labels) positives += l ? 1 : 0;
  const std::size_t negatives = total - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of mid-ranks (1-based) of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j < total && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) rank_sum += mid_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

DetectorMetrics evaluate_detector(const AnomalyScoreSeries& scores, const GroundTruth& truth,
                                  const std::vector<FlagMethod>& methods) {
  check_aligned(scores, truth);
  std::vector<double> values;
  std::vector<bool> labels;
  for (Index t = 0; t < scores.num_times(); ++t) {
    for (Index n = 0; n < scores.num_nodes(); ++n) {
      if (!scores.scorable(t, n)) continue;
      values.push_back(scores.scores(t, n));
      labels.push_back(truth.indicator(t, n));
    }
  }
  DetectorMetrics metrics;
  metrics.auc = roc_auc(values, labels);
  for (bool l : labels) (l ? metrics.positives : metrics.negatives) += 1;

  const auto days = node_days(scores.num_nodes(), scores.timestamps);
  auto summarize = [&](const AnomalyScoreSeries& flagged, const std::string& label) {
    ThresholdMetrics tm;
    tm.label = label;
    tm.threshold = *flagged.threshold;
    for (Index t = 0; t < flagged.num_times(); ++t) {
      for (Index n = 0; n < flagged.num_nodes(); ++n) {
        if (!flagged.scorable(t, n) || !(*flagged.flags)(t, n)) continue;
        tm.flagged += 1;
        (truth.indicator(t, n) ? tm.true_positives : tm.false_positives) += 1;
      }
    }
    if (tm.flagged > 0) {
      tm.precision = static_cast<double>(tm.true_positives) / static_cast<double>(tm.flagged);
    }
    if (metrics.positives > 0) {
      tm.recall =
          static_cast<double>(tm.true_positives) / static_cast<double>(metrics.positives);
    }
    if (days && *days > 0.0) {
      tm.false_alarms_per_node_day = static_cast<double>(tm.false_positives) / *days;
    }
    metrics.thresholds.push_back(tm);
  };
  if (scores.flags) summarize(scores, "input");
  for (const auto& method : methods) summarize(flag(scores, method), method.to_string());
  return metrics;
}

std::size_t false_flags_at_recall(const AnomalyScoreSeries& scores, const GroundTruth& truth,
                                  double recall) {
  check_aligned(scores, truth);
  if (!(recall > 0.0 && recall <= 1.0)) throw std::invalid_argument("recall must be in (0, 1]");
  std::vector<double> positive_scores, negative_scores;
  for (Index t = 0; t < scores.num_times(); ++t) {
    for (Index n = 0; n < scores.num_nodes(); ++n) {
      if (!scores.scorable(t, n)) continue;
      (truth.indicator(t, n) ? positive_scores : negative_scores).push_back(scores.scores(t, n));
    }
  }
  if (positive_scores.empty()) throw std::invalid_argument("ground truth has no positives");
  std::sort(positive_scores.begin(), positive_scores.end(), std::greater<>());
  const auto needed = static_cast<std::size_t>(
      std::ceil(recall * static_cast<double>(positive_scores.size()) - 1e-12));
  const double threshold = positive_scores[std::max<std::size_t>(needed, 1) - 1];
  return static_cast<std::size_t>(
      std::count_if(negative_scores.begin(), negative_scores.end(),
                    [&](double s) { return s >= threshold; }));
}

void write_metrics_csv(const DetectorMetrics& metrics, const std::string& path) {
  auto out = text::open_output(path);
  out << "label,threshold,auc,positives,negatives,flagged,true_positives,false_positives,"
         "precision,recall,false_alarms_per_node_day\n";
  const std::string auc = optional_field(metrics.auc);
  if (metrics.thresholds.empty()) {
    out << ",," << auc << ',' << metrics.positives << ',' << metrics.negatives << ",,,,,,\n";
    return;
  }
  for (const auto& tm : metrics.thresholds) {
    out << tm.label << ',' << text::format_double(tm.threshold) << ',' << auc << ','
        << metrics.positives << ',' << metrics.negatives << ',' << tm.flagged << ','
        << tm.true_positives << ',' << tm.false_positives << ','
        << optional_field(tm.precision) << ',' << optional_field(tm.recall) << ','
        << optional_field(tm.false_alarms_per_node_day) << '\n';
  }
}

}  // namespace dynmf
