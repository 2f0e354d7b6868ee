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

// Command-line compatible stand-in for `iverilog`.
//   hwlsim-compile [-g2001] [-Wall] [-o out] [-s top] [-D name[=v]] files...

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hwloop/sim/simulator.hpp"

int main(int argc, char** argv) {
  std::string output = "a.out";
  std::vector<std::string> tops;
  std::vector<std::string> files;
  std::string defines;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    auto value = [&](const std::string& flag) -> std::string {
      if (a.size() > flag.size()) return a.substr(flag.size());
      if (i + 1 < argc) return argv[++i];
      std::cerr << "hwlsim-compile: missing value for " << flag << "\n";
      std::exit(2);
    };
    if (a == "-V" || a == "--version") {
      std::cout << "hwlsim-compile (hwloop bundled Verilog-2001 simulator)\n";
      return 0;
    }
    if (a.rfind("-o", 0) == 0) output = value("-o");
    else if (a.rfind("-s", 0) == 0) tops.push_back(value("-s"));
    else if (a.rfind("-D", 0) == 0) {
      std::string d = value("-D");
      auto eq = d.find('=');
      defines += "`define " + (eq == std::string::npos ? d + " 1" : d.substr(0, eq) + " " + d.substr(eq + 1)) + "\n";
    } else if (a.rfind("-g", 0) == 0 || a.rfind("-W", 0) == 0) {
      // Language generation and warning classes are accepted and ignored.
    } else if (!a.empty() && a[0] == '-') {
      std::cerr << "hwlsim-compile: unsupported option " << a << "\n";
      return 2;
    } else {
      files.push_back(a);
    }
  }
  if (files.empty()) {
    std::cerr << "hwlsim-compile: no source files.\n";
    return 2;
  }
  std::vector<hwloop::sim::SourceFile> sources;
  if (!defines.empty()) sources.push_back({"<command-line>", defines});
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) {
      std::cerr << f << ": No such file or directory\n";
      return 1;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    sources.push_back({f, ss.str()});
  }
  auto result = hwloop::sim::compile(sources, tops);
  std::cerr << result.diagnostics;
  if (!result.ok) return 1;
  std::ofstream out(output, std::ios::binary);
  if (!out) {
    std::cerr << "hwlsim-compile: unable to open " << output << " for writing\n";
    return 1;
  }
  out << hwloop::sim::write_artifact(sources, tops);
  return 0;
}
