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

#ifndef DYNMF_MODEL_IO_HPP_
#define DYNMF_MODEL_IO_HPP_

#include <string>

#include "dynmf/factor_model.hpp"

namespace dynmf {

// Writes `manifest.json` (N, M, T, K, labels, timestamps, format version "1"),
// `U_bar.csv`, `V.csv` and `U_hat/t<index>.csv`. Each CSV holds one row per
// node (or metric) and K comma-separated values, no header. Values use the
// shortest representation that parses back to the identical double.
void save_model(const LatentModel& model, const std::string& dir);

LatentModel load_model(const std::string& dir);

// Plain numeric matrix CSV helpers used by the model files.
void write_matrix_csv(const Eigen::Ref<const Matrix>& matrix, const std::string& path);
Matrix read_matrix_csv(const std::string& path, Index rows, Index cols);

}  // namespace dynmf

#endif  // DYNMF_MODEL_IO_HPP_
