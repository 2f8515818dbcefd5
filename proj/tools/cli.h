// Copyright 2026 The CID Authors
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

#ifndef CID_TOOLS_CLI_H_
#define CID_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace cid::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitBackend = 2,
  kExitPartial = 3,
};

// Runs the `cid` command line. `args` excludes the program name. Normal
// output goes to `out` (unless --out redirects it), diagnostics to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cid::cli

#endif  // CID_TOOLS_CLI_H_
