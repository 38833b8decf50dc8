// Copyright 2026 The mtdskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MTDSKIT_CLI_HPP
#define MTDSKIT_CLI_HPP

#include <string>
#include <vector>

namespace mtdskit {

/// Entry point behind the mtds binary; also callable in process. Returns 0
/// on success, 1 on usage/configuration/data errors, 2 on numerical failure.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace mtdskit

#endif  // MTDSKIT_CLI_HPP
