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

#include "doctest.h"

#include <random>
#include <regex>
#include <set>

#include "hwloop/errors.hpp"
#include "hwloop/wrapper_gen.hpp"
#include "support.hpp"

using namespace hwloop;
using hwloop::testing::TempDir;

namespace {

std::vector<BenchmarkSpec> first(std::size_t n) {
  const auto& all = builtin_suite();
  return {all.begin(), all.begin() + static_cast<long>(n)};
}

// Port-compatible stub with every output tied low.
std::string stub(const BenchmarkSpec& b, const std::string& name) {
  std::string ports, body;
  for (const auto& p : b.interface.ports) {
    if (!ports.empty()) ports += ", ";
    std::string range = p.width > 1 ? "[" + std::to_string(p.width - 1) + ":0] " : "";
    ports += std::string(p.direction == Direction::Output ? "output " : "input ") + range + p.name;
    if (p.direction == Direction::Output) body += "  assign " + p.name + " = 0;\n";
  }
  return "module " + name + "(" + ports + ");\n" + body + "endmodule\n";
}

std::set<std::string> declared_names(const std::string& verilog) {
  std::set<std::string> out;
  std::regex decl(R"((?:wire|reg)\s*(?:\[[^\]]*\]\s*)?([A-Za-z_]\w*))");
  for (auto it = std::sregex_iterator(verilog.begin(), verilog.end(), decl); it != std::sregex_iterator(); ++it)
    out.insert((*it)[1]);
  std::regex inst(R"((?:^|\n)\s*[A-Za-z_]\w*\s+([A-Za-z_]\w*)\s*\()");
  for (auto it = std::sregex_iterator(verilog.begin(), verilog.end(), inst); it != std::sregex_iterator(); ++it)
    out.insert((*it)[1]);
  return out;
}

}  // namespace

TEST_CASE("pinmap validation") {
  CHECK_NOTHROW(default_pinmap().validate());
  PinMap dup;
  dup.shared_inputs = {1, 2, 3, 5};
  CHECK_THROWS_AS(dup.validate(), PinmapError);
  PinMap out_of_range;
  out_of_range.clock_bit = 8;
  CHECK_THROWS_AS(out_of_range.validate(), PinmapError);
  CHECK_THROWS_AS(parse_pinmap("select: [5, 6]\n"), PinmapError);
  CHECK_THROWS_AS(parse_pinmap("assign: {abro: {a: 6}}\n"), PinmapError);
  PinMap p = parse_pinmap("select: [7, 6, 5]\nclock: 4\nshared: [0, 1, 2, 3]\n");
  CHECK(p.select_bits == std::array<int, 3>{7, 6, 5});
  CHECK(p.clock_bit == 4);
}

TEST_CASE("nine benchmarks exceed the select space") {
  auto nine = builtin_suite();
  nine.push_back(nine.front());
  nine.back().id = "extra";
  CHECK_THROWS_AS(route_benchmarks(nine, default_pinmap()), CapacityError);
}

TEST_CASE("routing") {
  auto routes = route_benchmarks(builtin_suite(), default_pinmap());
  REQUIRE(routes.size() == 8);
  for (const auto& r : routes) {
    CAPTURE(r.id);
    std::set<int> in_pins;
    int out_bits = 0;
    for (const auto& p : r.inputs)
      for (int pin : p.pins) CHECK(in_pins.insert(pin).second);
    for (const auto& p : r.outputs) out_bits += static_cast<int>(p.pins.size());
    CHECK(out_bits <= 8);
    for (int sel : {5, 6, 7}) CHECK_FALSE(in_pins.count(sel));
  }
  const auto& sr = routes[0];
  CHECK(sr.inputs[0].pins == std::vector<int>{0});
  REQUIRE(sr.reset_pin);
  for (const auto& p : sr.inputs)
    if (p.port == "reset_n") CHECK(p.inverted);
}

TEST_CASE("an output overflow names the port") {
  BenchmarkSpec wide = builtin_benchmark("lfsr");
  wide.id = "wide";
  wide.interface.ports.push_back({"extra", Direction::Output, 4});
  try {
    route_benchmarks({wide}, default_pinmap());
    FAIL("expected PinmapError");
  } catch (const PinmapError& e) {
    CHECK(std::string(e.what()).find("wide.extra") != std::string::npos);
  }
}

TEST_CASE("single benchmark wrapper drives the output directly") {
  WrapperArtifacts a = generate_wrapper(first(1), default_pinmap());
  CHECK(a.top == "tt_um_hwloop_wrapper");
  CHECK(a.verilog.find("assign io_out = hwl_out_0;") != std::string::npos);
  CHECK(a.verilog.find("case") == std::string::npos);
  CHECK(a.pinout.find("shift_register") != std::string::npos);
}

TEST_CASE("generated identifiers never collide with benchmark modules") {
  std::mt19937 rng(11);
  std::vector<std::string> pool = {"hwl_sel", "hwl_mux", "hwl_out_0", "hwl_u1", "hwl1_sel", "hwl_o0_data_out",
                                   "tt_um_hwloop_wrapper", "tt_um_hwloop_wrapper_top", "io_in", "core"};
  const auto& suite = builtin_suite();
  ToolBridge bridge;
  for (int round = 0; round < 40; ++round) {
    CAPTURE(round);
    std::size_t n = 1 + rng() % 8;
    std::vector<BenchmarkSpec> pick(suite.begin(), suite.begin() + static_cast<long>(n));
    WrapperOptions opt;
    std::set<std::string> names;
    for (const auto& b : pick) {
      std::string name = rng() % 2 ? pool[rng() % pool.size()] + std::to_string(rng() % 2 ? 0 : 1) : pool[rng() % pool.size()];
      if (name == "io_in" || !names.insert(name).second) name = b.id;
      names.insert(name);
      opt.module_names[b.id] = name;
    }
    WrapperArtifacts a = generate_wrapper(pick, default_pinmap(), opt);
    CHECK_FALSE(names.count(a.top));
    for (const auto& d : declared_names(a.verilog)) {
      CAPTURE(d);
      CHECK_FALSE(names.count(d));
    }
    if (round % 10 == 0) {
      // The compiler agrees: wrapper plus stubs elaborate cleanly.
      std::vector<SourceText> src = {{"wrapper.v", a.verilog}};
      for (const auto& b : pick) src.push_back({b.id + ".v", stub(b, opt.module_names[b.id])});
      TempDir dir;
      CompileResult c = bridge.compile(src, a.top, dir.path);
      CHECK_MESSAGE(c.ok(), c.raw_output);
    }
  }
}

TEST_CASE("full suite wrapper matches every bare benchmark") {
  ToolBridge bridge;
  TempDir work;
  ValidationOptions vo;
  vo.work_base = work.path;
  WrapperArtifacts a = generate_wrapper(builtin_suite(), default_pinmap());
  ValidationReport r = validate_wrapper(a.verilog, a, builtin_suite(), bridge, vo);
  CHECK_MESSAGE(r.passed, r.summary());
  REQUIRE(r.selects.size() == 8);
  for (const auto& s : r.selects) CHECK(s.status == "match");
}

TEST_CASE("swapped mux branches are caught at both selects") {
  ToolBridge bridge;
  TempDir work;
  ValidationOptions vo;
  vo.work_base = work.path;
  WrapperArtifacts a = generate_wrapper(builtin_suite(), default_pinmap());
  std::string bad = swap_select_branches(a.verilog, a.prefix, 1, 3);
  REQUIRE(bad != a.verilog);
  ValidationReport r = validate_wrapper(bad, a, builtin_suite(), bridge, vo);
  CHECK_FALSE(r.passed);
  for (const auto& s : r.selects) {
    CAPTURE(s.select);
    if (s.select == 1 || s.select == 3) {
      CHECK(s.status == "mismatch");
      CHECK(s.cycle >= 0);
      CHECK(s.expected != s.observed);
    } else {
      CHECK(s.status == "match");
    }
  }
}

TEST_CASE("unused selects stay quiet") {
  ToolBridge bridge;
  TempDir work;
  ValidationOptions vo;
  vo.work_base = work.path;
  auto five = first(5);
  WrapperArtifacts a = generate_wrapper(five, default_pinmap());
  ValidationReport r = validate_wrapper(a.verilog, a, five, bridge, vo);
  CHECK_MESSAGE(r.passed, r.summary());
  REQUIRE(r.selects.size() == 8);
  for (int i = 5; i < 8; ++i) {
    CHECK(r.selects[static_cast<std::size_t>(i)].benchmark.empty());
    CHECK(r.selects[static_cast<std::size_t>(i)].status == "unassigned, quiescent");
  }
}
