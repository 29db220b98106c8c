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

#ifndef DYNMF_CUBE_IO_HPP_
#define DYNMF_CUBE_IO_HPP_

#include <string>

#include "dynmf/usage_cube.hpp"

namespace dynmf {

// Persists a cube as a directory holding `manifest.json` (dimensions, labels,
// timestamps, normalization constants, format version "1") and `values.bin`,
// a flat array of little-endian IEEE-754 doubles in t-major, node-row,
// metric-column order. A `mask.bin` of one byte per cell (same order, 1 =
// observed) is written only for cubes with unobserved cells.
void save_cube(const UsageCube& cube, const std::string& dir);

// Throws DataError on a missing, malformed or inconsistent directory.
UsageCube load_cube(const std::string& dir);

}  // namespace dynmf

#endif  // DYNMF_CUBE_IO_HPP_
