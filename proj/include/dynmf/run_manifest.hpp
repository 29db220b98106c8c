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

#ifndef DYNMF_RUN_MANIFEST_HPP_
#define DYNMF_RUN_MANIFEST_HPP_

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

namespace dynmf {

inline constexpr const char* kVersion = "0.1.0";

// SHA-256 (hex) of a file, or of a directory: every regular file below it in
// sorted relative-path order, hashing path and contents. Files named
// `run_manifest.json` are skipped.
std::string content_digest(const std::string& path);

// Provenance record written next to every CLI output.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void add_input(const std::string& role, const std::string& path);
  void add_output(const std::string& role, const std::string& path);

  nlohmann::json to_json() const;

  // `<file>.manifest.json` for file outputs, `<dir>/run_manifest.json` for
  // directory outputs.
  static std::string path_for(const std::string& output);
  void write(const std::string& output) const;

 private:
  struct Artifact {
    std::string role;
    std::string path;
    std::string sha256;
  };

  std::string subcommand_;
  nlohmann::json config_ = nlohmann::json::object();
  std::vector<Artifact> inputs_;
  std::vector<Artifact> outputs_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point started_steady_;
};

}  // namespace dynmf

#endif  // DYNMF_RUN_MANIFEST_HPP_
