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

#ifndef DYNMF_CLI_HPP_
#define DYNMF_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace dynmf {

// Runs the `dynmf` command line. `args` excludes the program name.
// Returns 0 on success, 2 on a usage error (help text on `err`) and 1 on a
// runtime error (one `dynmf: error: <kind>: <message>` line on `err`).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dynmf

#endif  // DYNMF_CLI_HPP_
