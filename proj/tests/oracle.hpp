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

// Reference-model testbenches shared by the corpus tests and the acceptance
// run. Expected values are computed in C++, never taken from golden assets.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hwloop/bench_spec.hpp"
#include "hwloop/tool_bridge.hpp"
#include "support.hpp"

namespace hwloop::testing {

using Values = std::map<std::string, unsigned>;

struct Cycle {
  Values in;
  Values expect;
};

inline std::string range(int w) { return w > 1 ? "[" + std::to_string(w - 1) + ":0] " : ""; }

inline std::string lit(int w, unsigned v) { return std::to_string(w) + "'d" + std::to_string(v); }

// Straight-line testbench: inputs change on the falling edge, outputs are
// compared just after the rising edge (or after a delay when there is no clock).
inline std::string oracle_tb(const BenchmarkSpec& spec, const std::vector<Cycle>& cycles) {
  const PortSpec* clock = spec.interface.clock();
  std::map<std::string, int> width;
  std::string tb = "`timescale 1ns/1ps\nmodule oracle_tb;\n";
  std::vector<std::string> conns;
  for (const auto& p : spec.interface.ports) {
    width[p.name] = p.width;
    bool in = p.direction == Direction::Input;
    tb += std::string(in ? "reg " : "wire ") + range(p.width) + p.name + (in ? " = 0" : "") + ";\n";
    conns.push_back("." + p.name + "(" + p.name + ")");
  }
  tb += spec.id + " dut (";
  for (std::size_t i = 0; i < conns.size(); ++i) tb += (i ? ", " : "") + conns[i];
  tb += ");\n";
  if (clock) tb += "always #5 " + clock->name + " = ~" + clock->name + ";\n";
  tb += "initial begin\n";
  if (clock) tb += "  @(negedge clk); @(negedge clk); reset_n = 1;\n";
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    for (const auto& [n, v] : cycles[i].in) tb += "  " + n + " = " + lit(width[n], v) + ";\n";
    tb += clock ? "  @(posedge clk); #1;\n" : "  #5;\n";
    for (const auto& [n, v] : cycles[i].expect)
      tb += "  if (" + n + " !== " + lit(width[n], v) + ") $display(\"Error: cycle " + std::to_string(i) + " " + n +
            " expected " + std::to_string(v) + " got %0d\", " + n + ");\n";
    if (clock) tb += "  @(negedge clk);\n";
  }
  tb += "  $display(\"All test cases passed!\");\n  $finish;\nend\nendmodule\n";
  return tb;
}

inline ToolVerdict run_oracle(const BenchmarkSpec& spec, const std::string& tb) {
  ToolBridge bridge;
  TempDir dir;
  return bridge.build_and_run({{"design.v", spec.golden_design_source}, {"oracle_tb.v", tb}}, dir.path);
}

inline std::vector<Cycle> bin2bcd_table() {
  std::vector<Cycle> cycles;
  for (unsigned i = 0; i < 32; ++i) cycles.push_back({{{"bin", i}}, {{"bcd", ((i / 10) << 4) | (i % 10)}}});
  return cycles;
}

// Seed 8'b01011010, shift left, feedback from bits 7, 5, 4 and 3.
inline unsigned lfsr_next(unsigned s) {
  unsigned fb = ((s >> 7) ^ (s >> 5) ^ (s >> 4) ^ (s >> 3)) & 1u;
  return ((s << 1) | fb) & 0xFFu;
}

inline std::vector<Cycle> lfsr_walk(int steps, std::set<unsigned>* seen = nullptr) {
  std::vector<Cycle> cycles;
  unsigned s = 0x5A;
  for (int i = 0; i < steps; ++i) {
    s = lfsr_next(s);
    if (seen) seen->insert(s);
    cycles.push_back({{}, {{"data", s}}});
  }
  return cycles;
}

inline const std::vector<unsigned>& seq_gen_values() {
  static const std::vector<unsigned> v = {0xAF, 0xBC, 0xE2, 0x78, 0xFF, 0xE3, 0x0B, 0x8D};
  return v;
}

}  // namespace hwloop::testing
