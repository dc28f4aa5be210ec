// Copyright 2026 The e3p Authors
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

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace e3p::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsage = 2 };

/// Runs `e3p <subcommand> ...`; args exclude the program name. Everything
/// after a literal `--` is the workload command for `measure`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Maps E3P_LOG (trace, debug, info, warn, error, off) onto the logger.
void configure_logging_from_env();

}  // namespace e3p::cli
