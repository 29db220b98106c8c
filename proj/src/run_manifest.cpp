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

#include "dynmf/run_manifest.hpp"

#include <algorithm>
#include <array>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

#include "dynmf/error.hpp"
#include "dynmf/text.hpp"

namespace dynmf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("SHA-256 initialization failed");
    }
  }

  void update(const void* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) {
      throw std::runtime_error("SHA-256 update failed");
    }
  }

  void update_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    std::array<char, 1 << 16> buf;
    while (in) {
      in.read(buf.data(), buf.size());
      update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
  }

  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), digest, &len) != 1) {
      throw std::runtime_error("SHA-256 finalization failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[digest[i] >> 4]);
      out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string iso8601(std::chrono::system_clock::time_point tp) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(tp);
  std::tm utc{};
  gmtime_r(&secs, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace

std::string content_digest(const std::string& path) {
  Sha256 sha;
  const fs::path root(path);
  if (fs::is_directory(root)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() != "run_manifest.json") {
        files.push_back(fs::relative(entry.path(), root));
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& rel : files) {
      const std::string name = rel.generic_string();
      sha.update(name.data(), name.size() + 1);  // include the terminator as separator
      sha.update_file(root / rel);
    }
  } else {
    sha.update_file(root);
  }
  return sha.hex();
}

RunManifest::RunManifest(std::string subcommand)
    : subcommand_(std::move(subcommand)),
      started_(std::chrono::system_clock::now()),
      started_steady_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::string& role, const std::string& path) {
  inputs_.push_back({role, path, content_digest(path)});
}

void RunManifest::add_output(const std::string& role, const std::string& path) {
  outputs_.push_back({role, path, content_digest(path)});
}

json RunManifest::to_json() const {
  auto artifacts = [](const std::vector<Artifact>& list) {
    json out = json::array();
    for (const auto& a : list) {
      out.push_back({{"role", a.role}, {"path", a.path}, {"sha256", a.sha256}});
    }
    return out;
  };
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                     started_steady_)
                           .count();
  json doc;
  doc["artifact"] = "dynmf";
  doc["version"] = kVersion;
  doc["subcommand"] = subcommand_;
  doc["config"] = config_;
  doc["inputs"] = artifacts(inputs_);
  doc["outputs"] = artifacts(outputs_);
  doc["timestamps"] = {{"started_utc", iso8601(started_)},
                       {"finished_utc", iso8601(std::chrono::system_clock::now())},
                       {"wall_time_seconds", elapsed}};
  return doc;
}

std::string RunManifest::path_for(const std::string& output) {
  if (fs::is_directory(output)) return (fs::path(output) / "run_manifest.json").string();
  return output + ".manifest.json";
}

void RunManifest::write(const std::string& output) const {
  auto out = text::open_output(path_for(output));
  out << to_json().dump(2) << '\n';
}

}  // namespace dynmf
