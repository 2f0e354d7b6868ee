// Copyright 2026 The hwloop Authors
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

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hwloop::sim {

struct SourceFile {
  std::string path;
  std::string text;
};

struct CompileOutcome {
  bool ok = false;
  std::string diagnostics;  // compiler-style stderr text
};

/// Parses and elaborates `sources`. `tops` may be empty to pick every
/// uninstantiated module.
CompileOutcome compile(const std::vector<SourceFile>& sources,
                       const std::vector<std::string>& tops);

/// Compiles and runs. Simulation output goes to `out`, compile diagnostics
/// to `err`. Returns 0 on a normal finish, 1 on a compile or runtime error.
int simulate(const std::vector<SourceFile>& sources, const std::vector<std::string>& tops,
             std::ostream& out, std::ostream& err);

// The compiled artifact is a self-describing text file that the runner
// re-elaborates. First line is "#! hwlsim".
std::string write_artifact(const std::vector<SourceFile>& sources,
                           const std::vector<std::string>& tops);
bool read_artifact(const std::string& text, std::vector<SourceFile>& sources,
                   std::vector<std::string>& tops);

}  // namespace hwloop::sim
