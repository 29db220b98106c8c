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

#ifndef DYNMF_INGEST_HPP_
#define DYNMF_INGEST_HPP_

#include <optional>
#include <string>
#include <vector>

#include "dynmf/usage_cube.hpp"

namespace dynmf {

enum class CsvFormat { kLong, kWide };
enum class MissingPolicy { kReject, kImputeZero };
enum class Normalization { kZScore, kNone };

struct IngestConfig {
  CsvFormat format = CsvFormat::kLong;
  MissingPolicy missing = MissingPolicy::kReject;
  Normalization normalization = Normalization::kNone;
  // When set, rows naming a label outside these lists are rejected.
  std::optional<std::vector<std::string>> known_nodes;
  std::optional<std::vector<std::string>> known_metrics;
};

// Reads a long (`timestamp,node,metric,value`) or wide
// (`timestamp,node,<metric>...`) CSV into a cube. Node and metric labels are
// sorted lexicographically; timestamps are sorted and deduplicated. A repeated
// (node, metric, timestamp) cell is accepted only if it repeats the same
// value. Throws DataError (with the offending line where known).
UsageCube load_csv(const std::string& path, const IngestConfig& config);

// Writes observed cells in the given layout, ordered by timestamp, node,
// metric. Masked cells are omitted (long) or left empty (wide).
void write_csv(const UsageCube& cube, const std::string& path,
               CsvFormat format = CsvFormat::kLong);

CsvFormat parse_csv_format(const std::string& name);
MissingPolicy parse_missing_policy(const std::string& name);

}  // namespace dynmf

#endif  // DYNMF_INGEST_HPP_
