// Copyright 2026 The DPFL Bench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPFL_CLI_H_
#define DPFL_CLI_H_

#include <ostream>

#include "absl/status/status.h"

namespace dpfl {

// 1 for validation and configuration problems, 2 for runtime failures.
int ExitCodeFor(const absl::Status& status);

// Entry point of the dpfl_bench tool. Subcommands: run, table, calibrate,
// partition-stats, verify-dp. Returns the process exit code.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace dpfl

#endif  // DPFL_CLI_H_
