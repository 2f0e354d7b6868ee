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

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hwloop/bench_spec.hpp"
#include "hwloop/tool_bridge.hpp"

namespace hwloop {

struct PinMap {
  std::array<int, 3> select_bits{5, 6, 7};  // select value bit i reads io_in[select_bits[i]]
  int clock_bit = 0;
  std::array<int, 4> shared_inputs{1, 2, 3, 4};
  // Optional overrides: benchmark id -> "port" or "port[i]" -> input pin.
  std::map<std::string, std::map<std::string, int>> assignments;

  void validate() const;  // throws PinmapError
};

PinMap default_pinmap();
/// YAML: select: [5,6,7], clock: 0, shared: [1,2,3,4], assign: {id: {port: pin}}
PinMap parse_pinmap(const std::string& document);
PinMap load_pinmap(const std::filesystem::path& path);

struct PortRoute {
  std::string port;
  int width = 1;
  std::vector<int> pins;  // one per bit, LSB first; io_in index or io_out index
  bool inverted = false;  // active-low reset driven from an active-high pin
};

struct BenchmarkRoute {
  int select = 0;
  std::string id;
  std::string module;
  std::vector<PortRoute> inputs;
  std::vector<PortRoute> outputs;
  std::optional<int> reset_pin;
};

/// Pin assignment for each benchmark in order; benchmark i answers select i.
/// Throws CapacityError (>8) or PinmapError naming the port.
std::vector<BenchmarkRoute> route_benchmarks(const std::vector<BenchmarkSpec>& benchmarks, const PinMap& pinmap,
                                             const std::map<std::string, std::string>& module_names = {});

struct WrapperOptions {
  std::string top_name = "tt_um_hwloop_wrapper";
  std::map<std::string, std::string> module_names;  // benchmark id -> module to instantiate
};

struct WrapperArtifacts {
  std::string top;
  std::string prefix;  // generated-identifier prefix after collision avoidance
  std::string verilog;
  std::string pinout;
  std::vector<BenchmarkRoute> routes;
};

WrapperArtifacts generate_wrapper(const std::vector<BenchmarkSpec>& benchmarks, const PinMap& pinmap,
                                  const WrapperOptions& options = {});

/// Swaps the output-mux branches of two select values (mutation testing).
std::string swap_select_branches(const std::string& wrapper, const std::string& prefix, int a, int b);

struct SelectCheck {
  int select = 0;
  std::string benchmark;  // empty when unassigned
  bool passed = false;
  std::string status;     // "match", "unassigned, quiescent", "mismatch"
  int cycle = -1;
  std::string expected;
  std::string observed;
};

struct ValidationReport {
  bool passed = false;
  std::vector<SelectCheck> selects;
  std::string raw_output;
  std::string summary() const;
};

struct ValidationOptions {
  int cycles = 200;
  unsigned seed = 1;
  std::filesystem::path work_base = std::filesystem::temp_directory_path();
};

/// Bare-versus-wrapped differential simulation per select value.
ValidationReport validate_wrapper(const std::string& wrapper_source, const WrapperArtifacts& artifacts,
                                  const std::vector<BenchmarkSpec>& benchmarks, ToolBridge& bridge,
                                  const ValidationOptions& options = {});

}  // namespace hwloop
