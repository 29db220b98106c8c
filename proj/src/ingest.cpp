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

#include "dynmf/ingest.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "dynmf/error.hpp"
#include "dynmf/text.hpp"

namespace dynmf {

namespace {

struct CellRecord {
  std::int64_t timestamp;
  std::string node;
  std::string metric;
  std::optional<double> value;  // nullopt: explicitly empty (wide format)
  std::size_t line;
};

std::vector<std::string> split_header(const std::string& line) {
  std::vector<std::string> out;
  for (auto field : text::split_fields(line)) out.push_back(text::trim(field));
  return out;
}

void read_long(text::LineReader& reader, std::vector<CellRecord>& records) {
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = text::split_fields(line);
    const std::size_t ln = reader.line_number();
    if (fields.size() != 4) {
      throw DataError("expected 4 fields, found " + std::to_string(fields.size()), ln);
    }
    const auto ts = text::parse_int(text::trim(fields[0]));
    if (!ts) throw DataError("invalid timestamp '" + std::string(fields[0]) + "'", ln);
    auto node = text::trim(fields[1]);
    auto metric = text::trim(fields[2]);
    if (node.empty() || metric.empty()) throw DataError("empty node or metric label", ln);
    const auto value = text::parse_finite(text::trim(fields[3]));
    if (!value) throw DataError("invalid value '" + std::string(fields[3]) + "'", ln);
    records.push_back({*ts, std::move(node), std::move(metric), value, ln});
  }
}

void read_wide(text::LineReader& reader, const std::vector<std::string>& header,
               std::vector<CellRecord>& records) {
  const std::vector<std::string> metrics(header.begin() + 2, header.end());
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = text::split_fields(line);
    const std::size_t ln = reader.line_number();
    if (fields.size() != header.size()) {
      throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                          std::to_string(fields.size()),
                      ln);
    }
    const auto ts = text::parse_int(text::trim(fields[0]));
    if (!ts) throw DataError("invalid timestamp '" + std::string(fields[0]) + "'", ln);
    const auto node = text::trim(fields[1]);
    if (node.empty()) throw DataError("empty node label", ln);
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      const auto raw = text::trim(fields[i + 2]);
      std::optional<double> value;
      if (!raw.empty()) {
        value = text::parse_finite(raw);
        if (!value) {
          throw DataError("invalid value '" + raw + "' for metric '" + metrics[i] + "'", ln);
        }
      }
      records.push_back({*ts, node, metrics[i], value, ln});
    }
  }
}

template <typename Set>
std::unordered_map<std::string, Index> index_of(const Set& labels) {
  std::unordered_map<std::string, Index> out;
  Index i = 0;
  for (const auto& label : labels) out.emplace(label, i++);
  return out;
}

}  // namespace

UsageCube load_csv(const std::string& path, const IngestConfig& config) {
  text::LineReader reader(path);
  std::string header_line;
  if (!reader.next(header_line) || text::trim(header_line).empty()) {
    throw DataError("empty file '" + path + "'");
  }
  const auto header = split_header(header_line);

  std::vector<CellRecord> records;
  if (config.format == CsvFormat::kLong) {
    const std::vector<std::string> expected{"timestamp", "node", "metric", "value"};
    if (header != expected) {
      throw DataError("header must be 'timestamp,node,metric,value'", 1);
    }
    read_long(reader, records);
  } else {
    if (header.size() < 3 || header[0] != "timestamp" || header[1] != "node") {
      throw DataError("header must be 'timestamp,node,<metric>,...'", 1);
    }
    std::set<std::string> seen;
    for (std::size_t i = 2; i < header.size(); ++i) {
      if (header[i].empty()) throw DataError("empty metric name in header", 1);
      if (!seen.insert(header[i]).second) {
        throw DataError("duplicate metric column '" + header[i] + "'", 1);
      }
    }
    read_wide(reader, header, records);
  }
  if (records.empty()) throw DataError("no data rows in '" + path + "'");

  std::set<std::string> nodes, metrics;
  std::set<std::int64_t> times;
  std::optional<std::set<std::string>> allowed_nodes, allowed_metrics;
  if (config.known_nodes) {
    allowed_nodes.emplace(config.known_nodes->begin(), config.known_nodes->end());
  }
  if (config.known_metrics) {
    allowed_metrics.emplace(config.known_metrics->begin(), config.known_metrics->end());
  }
  for (const auto& r : records) {
    if (allowed_nodes && !allowed_nodes->count(r.node)) {
      throw DataError("unknown node '" + r.node + "'", r.line);
    }
    if (allowed_metrics && !allowed_metrics->count(r.metric)) {
      throw DataError("unknown metric '" + r.metric + "'", r.line);
    }
    nodes.insert(r.node);
    metrics.insert(r.metric);
    times.insert(r.timestamp);
  }

  UsageCube cube;
  cube.node_ids.assign(nodes.begin(), nodes.end());
  cube.metric_ids.assign(metrics.begin(), metrics.end());
  cube.timestamps.assign(times.begin(), times.end());
  const Index num_n = cube.num_nodes(), num_m = cube.num_metrics(), num_t = cube.num_times();
  const auto node_index = index_of(nodes);
  const auto metric_index = index_of(metrics);
  std::unordered_map<std::int64_t, Index> time_index;
  for (Index t = 0; t < num_t; ++t) time_index.emplace(cube.timestamps[t], t);

  cube.values.assign(static_cast<std::size_t>(num_t), Matrix::Zero(num_n, num_m));
  std::vector<BoolMatrix> present(static_cast<std::size_t>(num_t),
                                  BoolMatrix::Constant(num_n, num_m, false));
  // Line of the first record for each cell, for duplicate diagnostics.
  std::map<std::tuple<Index, Index, Index>, std::size_t> first_line;

  for (const auto& r : records) {
    const Index t = time_index.at(r.timestamp);
    const Index n = node_index.at(r.node);
    const Index m = metric_index.at(r.metric);
    if (!r.value) continue;
    if (present[t](n, m)) {
      if (cube.values[t](n, m) != *r.value) {
        throw DataError("conflicting duplicate for node '" + r.node + "', metric '" +
                            r.metric + "', timestamp " + std::to_string(r.timestamp) +
                            " (first seen on line " +
                            std::to_string(first_line.at({t, n, m})) + ")",
                        r.line);
      }
      continue;
    }
    present[t](n, m) = true;
    cube.values[t](n, m) = *r.value;
    first_line.emplace(std::make_tuple(t, n, m), r.line);
  }

  bool complete = true;
  for (Index t = 0; t < num_t && complete; ++t) {
    if (present[t].all()) continue;
    complete = false;
    if (config.missing == MissingPolicy::kReject) {
      for (Index n = 0; n < num_n; ++n) {
        for (Index m = 0; m < num_m; ++m) {
          if (!present[t](n, m)) {
            throw DataError("missing cell: node '" + cube.node_ids[n] + "', metric '" +
                            cube.metric_ids[m] + "', timestamp " +
                            std::to_string(cube.timestamps[t]));
          }
        }
      }
    }
  }
  if (!complete) cube.mask = std::move(present);

  cube.validate();
  if (config.normalization == Normalization::kZScore) return normalize(cube);
  return cube;
}

void write_csv(const UsageCube& cube, const std::string& path, CsvFormat format) {
  auto out = text::open_output(path);
  if (format == CsvFormat::kLong) {
    out << "timestamp,node,metric,value\n";
    for (Index t = 0; t < cube.num_times(); ++t) {
      for (Index n = 0; n < cube.num_nodes(); ++n) {
        for (Index m = 0; m < cube.num_metrics(); ++m) {
          if (!cube.observed(n, m, t)) continue;
          out << cube.timestamps[t] << ',' << cube.node_ids[n] << ',' << cube.metric_ids[m]
              << ',' << text::format_double(cube.values[t](n, m)) << '\n';
        }
      }
    }
  } else {
    out << "timestamp,node";
    for (const auto& metric : cube.metric_ids) out << ',' << metric;
    out << '\n';
    for (Index t = 0; t < cube.num_times(); ++t) {
      for (Index n = 0; n < cube.num_nodes(); ++n) {
        out << cube.timestamps[t] << ',' << cube.node_ids[n];
        for (Index m = 0; m < cube.num_metrics(); ++m) {
          out << ',';
          if (cube.observed(n, m, t)) out << text::format_double(cube.values[t](n, m));
        }
        out << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

CsvFormat parse_csv_format(const std::string& name) {
  if (name == "long") return CsvFormat::kLong;
  if (name == "wide") return CsvFormat::kWide;
  throw std::invalid_argument("unknown CSV format '" + name + "'");
}

MissingPolicy parse_missing_policy(const std::string& name) {
  if (name == "reject") return MissingPolicy::kReject;
  if (name == "impute-zero" || name == "impute_zero") return MissingPolicy::kImputeZero;
  throw std::invalid_argument("unknown missing policy '" + name + "'");
}

}  // namespace dynmf
