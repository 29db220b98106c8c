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

#include "dynmf/model_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dynmf/error.hpp"
#include "dynmf/text.hpp"

namespace dynmf {

namespace fs = std::filesystem;
using nlohmann::json;

void write_matrix_csv(const Eigen::Ref<const Matrix>& matrix, const std::string& path) {
  auto out = text::open_output(path);
  for (Index r = 0; r < matrix.rows(); ++r) {
    for (Index c = 0; c < matrix.cols(); ++c) {
      if (c > 0) out << ',';
      out << text::format_double(matrix(r, c));
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::string& path, Index rows, Index cols) {
  text::LineReader reader(path);
  Matrix out(rows, cols);
  std::string line;
  Index r = 0;
  while (reader.next(line)) {
    if (line.empty()) continue;
    if (r >= rows) throw DataError(path + ": more rows than expected", reader.line_number());
    const auto fields = text::split_fields(line);
    if (static_cast<Index>(fields.size()) != cols) {
      throw DataError(path + ": expected " + std::to_string(cols) + " columns",
                      reader.line_number());
    }
    for (Index c = 0; c < cols; ++c) {
      const auto value = text::parse_finite(text::trim(fields[c]));
      if (!value) throw DataError(path + ": invalid number", reader.line_number());
      out(r, c) = *value;
    }
    ++r;
  }
  if (r != rows) throw DataError(path + ": expected " + std::to_string(rows) + " rows");
  return out;
}

void save_model(const LatentModel& model, const std::string& dir) {
  const auto& s = model.shape();
  const fs::path root(dir);
  fs::create_directories(root / "U_hat");

  json manifest;
  manifest["kind"] = "latent_model";
  manifest["format_version"] = "1";
  manifest["num_nodes"] = s.nodes;
  manifest["num_metrics"] = s.metrics;
  manifest["num_times"] = s.times;
  manifest["rank"] = s.rank;
  manifest["node_ids"] = model.node_ids;
  manifest["metric_ids"] = model.metric_ids;
  manifest["timestamps"] = model.timestamps;
  manifest["files"] = {{"static_nodes", "U_bar.csv"},
                       {"metrics", "V.csv"},
                       {"dynamic_nodes", "U_hat/t<index>.csv"}};
  {
    auto out = text::open_output((root / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }
  write_matrix_csv(model.factors.static_nodes(), (root / "U_bar.csv").string());
  write_matrix_csv(model.factors.metrics(), (root / "V.csv").string());
  for (Index t = 0; t < s.times; ++t) {
    write_matrix_csv(model.factors.dynamic_nodes(t),
                     (root / "U_hat" / ("t" + std::to_string(t) + ".csv")).string());
  }
}

LatentModel load_model(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw DataError("cannot open '" + (root / "manifest.json").string() + "'");
  LatentModel model;
  ModelShape shape;
  try {
    const json manifest = json::parse(in);
    if (manifest.at("kind") != "latent_model") throw DataError("manifest is not a model");
    if (manifest.at("format_version") != "1") throw DataError("unsupported model version");
    shape = {manifest.at("num_nodes").get<Index>(), manifest.at("num_metrics").get<Index>(),
             manifest.at("num_times").get<Index>(), manifest.at("rank").get<Index>()};
    model.node_ids = manifest.at("node_ids").get<std::vector<std::string>>();
    model.metric_ids = manifest.at("metric_ids").get<std::vector<std::string>>();
    model.timestamps = manifest.at("timestamps").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw DataError("malformed model manifest: " + std::string(e.what()));
  }
  if (static_cast<Index>(model.node_ids.size()) != shape.nodes ||
      static_cast<Index>(model.metric_ids.size()) != shape.metrics ||
      static_cast<Index>(model.timestamps.size()) != shape.times) {
    throw DataError("model manifest dimensions disagree with its label lists");
  }
  try {
    model.factors = FactorSet(shape);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid model dimensions: ") + e.what());
  }
  model.factors.static_nodes() =
      read_matrix_csv((root / "U_bar.csv").string(), shape.nodes, shape.rank);
  model.factors.metrics() = read_matrix_csv((root / "V.csv").string(), shape.metrics, shape.rank);
  for (Index t = 0; t < shape.times; ++t) {
    model.factors.dynamic_nodes(t) = read_matrix_csv(
        (root / "U_hat" / ("t" + std::to_string(t) + ".csv")).string(), shape.nodes, shape.rank);
  }
  return model;
}

}  // namespace dynmf
