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

#ifndef DYNMF_TEXT_HPP_
#define DYNMF_TEXT_HPP_

// Small text helpers shared by the CSV readers and writers.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dynmf::text {

// Splits on ',' without quote handling; labels must not contain commas.
std::vector<std::string_view> split_fields(std::string_view line);

std::optional<std::int64_t> parse_int(std::string_view s);
// Accepts finite decimal floats only.
std::optional<double> parse_finite(std::string_view s);

// Shortest representation that round-trips exactly.
std::string format_double(double value);

std::string trim(std::string_view s);

// Reads lines, stripping a trailing '\r'. Throws DataError if unreadable.
class LineReader {
 public:
  explicit LineReader(const std::string& path);
  bool next(std::string& line);
  std::size_t line_number() const { return line_number_; }

 private:
  std::ifstream in_;
  std::size_t line_number_ = 0;
};

// Opens a file for writing or throws std::runtime_error.
std::ofstream open_output(const std::string& path);

}  // namespace dynmf::text

#endif  // DYNMF_TEXT_HPP_
