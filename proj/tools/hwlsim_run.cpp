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

// Command-line compatible stand-in for `vvp`. Plusargs are ignored.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "hwloop/sim/simulator.hpp"

int main(int argc, char** argv) {
  std::string artifact;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "-V" || a == "--version") {
      std::cout << "hwlsim-run (hwloop bundled Verilog-2001 simulator)\n";
      return 0;
    }
    if (a == "-n" || a == "-N" || a == "-v" || a[0] == '+') continue;
    if (a[0] == '-') continue;
    if (artifact.empty()) artifact = a;
  }
  if (artifact.empty()) {
    std::cerr << "Usage: hwlsim-run <compiled-file> [+plusargs]\n";
    return 2;
  }
  std::ifstream in(artifact, std::ios::binary);
  if (!in) {
    std::cerr << artifact << ": Unable to open input file.\n";
    return 1;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<hwloop::sim::SourceFile> sources;
  std::vector<std::string> tops;
  if (!hwloop::sim::read_artifact(ss.str(), sources, tops)) {
    std::cerr << artifact << ": Not a compiled design.\n";
    return 1;
  }
  std::cout.setf(std::ios::unitbuf);
  return hwloop::sim::simulate(sources, tops, std::cout, std::cerr);
}
