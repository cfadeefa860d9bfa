// Copyright 2026 The brs Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     https://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Command-line front end: synthesize, certify, simulate, monte-carlo,
// export-levelset and export-spec.

#include <string>

namespace brs::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kSpecInvalid = 2,
  kSolverFailure = 3,
  kCertificationFailure = 4,
};

/// Runs one command. Output artifacts go to --out (default "."), each
/// written to a temporary file and renamed into place.
int run(int argc, const char* const* argv);

/// Writes `text` to `path` through a temporary file in the same directory.
void write_atomic(const std::string& path, const std::string& text);

}  // namespace brs::cli
