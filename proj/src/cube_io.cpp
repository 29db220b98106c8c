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

#include "dynmf/cube_io.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "dynmf/error.hpp"
#include "dynmf/text.hpp"

namespace dynmf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormatVersion = "1";

void put_le64(std::ofstream& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

double get_le64(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::vector<unsigned char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void save_cube(const UsageCube& cube, const std::string& dir) {
  cube.validate();
  fs::create_directories(dir);
  const bool with_mask = !cube.complete();

  json manifest;
  manifest["kind"] = "usage_cube";
  manifest["format_version"] = kFormatVersion;
  manifest["storage"] = "binary-f64le";
  manifest["layout"] = "t-major, node rows, metric columns";
  manifest["values_file"] = "values.bin";
  manifest["mask_file"] = with_mask ? json("mask.bin") : json(nullptr);
  manifest["num_nodes"] = cube.num_nodes();
  manifest["num_metrics"] = cube.num_metrics();
  manifest["num_times"] = cube.num_times();
  manifest["node_ids"] = cube.node_ids;
  manifest["metric_ids"] = cube.metric_ids;
  manifest["timestamps"] = cube.timestamps;
  if (cube.normalization) {
    json norm = json::array();
    for (std::size_t m = 0; m < cube.metric_ids.size(); ++m) {
      norm.push_back({{"metric", cube.metric_ids[m]},
                      {"mean", (*cube.normalization)[m].mean},
                      {"std", (*cube.normalization)[m].std}});
    }
    manifest["normalization"] = norm;
  } else {
    manifest["normalization"] = nullptr;
  }
  {
    auto out = text::open_output((fs::path(dir) / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }

  auto values = text::open_output((fs::path(dir) / "values.bin").string());
  for (Index t = 0; t < cube.num_times(); ++t) {
    for (Index n = 0; n < cube.num_nodes(); ++n) {
      for (Index m = 0; m < cube.num_metrics(); ++m) put_le64(values, cube.values[t](n, m));
    }
  }
  if (with_mask) {
    auto mask = text::open_output((fs::path(dir) / "mask.bin").string());
    for (Index t = 0; t < cube.num_times(); ++t) {
      for (Index n = 0; n < cube.num_nodes(); ++n) {
        for (Index m = 0; m < cube.num_metrics(); ++m) {
          mask.put(cube.observed(n, m, t) ? 1 : 0);
        }
      }
    }
  }
}

UsageCube load_cube(const std::string& dir) {
  const fs::path root(dir);
  json manifest;
  try {
    std::ifstream in(root / "manifest.json");
    if (!in) throw DataError("cannot open '" + (root / "manifest.json").string() + "'");
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed cube manifest: " + std::string(e.what()));
  }

  UsageCube cube;
  std::size_t cells = 0;
  try {
    if (manifest.at("kind") != "usage_cube") throw DataError("manifest is not a usage cube");
    if (manifest.at("format_version") != kFormatVersion) {
      throw DataError("unsupported cube format version");
    }
    if (manifest.at("storage") != "binary-f64le") throw DataError("unsupported cube storage");
    cube.node_ids = manifest.at("node_ids").get<std::vector<std::string>>();
    cube.metric_ids = manifest.at("metric_ids").get<std::vector<std::string>>();
    cube.timestamps = manifest.at("timestamps").get<std::vector<std::int64_t>>();
    if (manifest.at("num_nodes").get<Index>() != cube.num_nodes() ||
        manifest.at("num_metrics").get<Index>() != cube.num_metrics() ||
        manifest.at("num_times").get<Index>() != cube.num_times()) {
      throw DataError("manifest dimensions disagree with its label lists");
    }
    if (!manifest.at("normalization").is_null()) {
      std::vector<MetricScaling> scaling;
      for (const auto& entry : manifest.at("normalization")) {
        scaling.push_back({entry.at("mean").get<double>(), entry.at("std").get<double>()});
      }
      cube.normalization = std::move(scaling);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed cube manifest: " + std::string(e.what()));
  }
  cells = static_cast<std::size_t>(cube.num_nodes() * cube.num_metrics() * cube.num_times());

  const auto raw = read_all(root / manifest.at("values_file").get<std::string>());
  if (raw.size() != cells * 8) throw DataError("values.bin size does not match manifest");
  cube.values.assign(cube.timestamps.size(), Matrix(cube.num_nodes(), cube.num_metrics()));
  std::size_t offset = 0;
  for (Index t = 0; t < cube.num_times(); ++t) {
    for (Index n = 0; n < cube.num_nodes(); ++n) {
      for (Index m = 0; m < cube.num_metrics(); ++m, offset += 8) {
        cube.values[t](n, m) = get_le64(raw.data() + offset);
      }
    }
  }
  if (!manifest.at("mask_file").is_null()) {
    const auto bytes = read_all(root / manifest.at("mask_file").get<std::string>());
    if (bytes.size() != cells) throw DataError("mask.bin size does not match manifest");
    std::vector<BoolMatrix> mask(cube.timestamps.size(),
                                 BoolMatrix(cube.num_nodes(), cube.num_metrics()));
    offset = 0;
    for (Index t = 0; t < cube.num_times(); ++t) {
      for (Index n = 0; n < cube.num_nodes(); ++n) {
        for (Index m = 0; m < cube.num_metrics(); ++m) mask[t](n, m) = bytes[offset++] != 0;
      }
    }
    cube.mask = std::move(mask);
  }
  cube.validate();
  return cube;
}

}  // namespace dynmf
