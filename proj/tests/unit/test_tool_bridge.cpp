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

#include <cstdlib>
#include <random>

#include "hwloop/errors.hpp"
#include "hwloop/tool_bridge.hpp"
#include "support.hpp"

using namespace hwloop;
using hwloop::testing::fixture_text;
using hwloop::testing::TempDir;

namespace {

const char* kMixedSimOutput =
    "Error: Test case 1 failed. Expected: 10000000, Received: 01111111\n"
    "Error: Test case 2 failed. Expected: 10101010, Received: 01010101\n"
    "Error: Test case 3 failed. Expected: 10101010, Received: 01010101\n"
    "All test cases passed!\n";

SimResult sim_from(const std::string& raw, const ToolBridge& b) {
  SimResult r;
  r.raw_output = raw;
  for (const auto& l : text::split_lines(raw)) {
    if (b.is_error_line(l)) r.error_lines.push_back(l);
    if (ToolBridge::is_pass_banner(l)) r.saw_pass_banner = true;
  }
  return r;
}

}  // namespace

TEST_CASE("mixed banner and error output classifies as a failure") {
  ToolBridge b;
  SimResult r = sim_from(kMixedSimOutput, b);
  CHECK(r.error_lines.size() == 3);
  CHECK(r.saw_pass_banner);
  ToolVerdict v = b.classify(r);
  CHECK_FALSE(v.passed);
  CHECK(v.feedback_text == std::string(kMixedSimOutput).substr(0, std::string(kMixedSimOutput).size() - 1));
  CHECK(v.fingerprint.phase == ToolPhase::Simulate);
  CHECK(v.fingerprint.keys ==
        std::vector<std::string>{"tb-case-mismatch:case-1", "tb-case-mismatch:case-2", "tb-case-mismatch:case-3"});
}

TEST_CASE("clean output with a pass banner passes") {
  ToolBridge b;
  CHECK(b.classify(sim_from("All test cases passed!\n", b)).passed);
  SimResult crashed = sim_from("All test cases passed!\n", b);
  crashed.exit_status = 3;
  CHECK_FALSE(b.classify(crashed).passed);
  SimResult slow = sim_from("", b);
  slow.timed_out = true;
  ToolVerdict v = b.classify(slow);
  CHECK_FALSE(v.passed);
  CHECK(v.fingerprint.keys == std::vector<std::string>{"sim-timeout"});
  CHECK(v.note.find("$finish") != std::string::npos);
}

TEST_CASE("error line recognition") {
  ToolBridge b;
  CHECK(b.is_error_line("Error: Test case 1 failed."));
  CHECK(b.is_error_line("ERROR: mismatch"));
  CHECK(b.is_error_line("check FAILED at 30"));
  CHECK(b.is_error_line("design.v:4: syntax error"));
  CHECK(b.is_error_line("tb.v:12: error: Unknown module type: foo"));
  CHECK_FALSE(b.is_error_line("All test cases passed!"));
  CHECK_FALSE(b.is_error_line("no errors here"));
  ToolchainConfig cfg;
  cfg.extra_error_patterns = {"^mismatch"};
  ToolBridge custom(cfg);
  CHECK(custom.is_error_line("Mismatch at cycle 3"));
}

TEST_CASE("diagnostic parsing") {
  auto d = parse_diagnostics(
      "bad.v:2: syntax error\n"
      "bad.v:2: error: malformed statement\n"
      "tb.v:9: warning: implicit definition of wire 'x'.\n"
      "I give up.\n");
  REQUIRE(d.size() == 4);
  CHECK(d[0].severity == "error");
  CHECK(d[0].file == "bad.v");
  CHECK(d[0].line == 2);
  CHECK(d[0].message == "syntax error");
  CHECK(d[1].message == "malformed statement");
  CHECK(d[2].severity == "warning");
  CHECK(d[3].severity == "error");
  CHECK(d[3].file.empty());
}

TEST_CASE("fingerprints ignore line numbers, spacing and received values") {
  std::mt19937 rng(2024);
  const std::vector<std::string> compile_msgs = {
      "design.v:{L}: syntax error",
      "design.v:{L}: error: Unknown module type: shift_regster",
      "tb.v:{L}: error: Unable to bind wire/reg/memory `data_out[{N}]' in `tb'",
      "design.v:{L}: error: data_out is not a valid l-value in shift_register.",
  };
  const std::vector<std::string> sim_lines = {
      "Error: Test case {N} failed. Expected: 10000000, Received: {V}",
      "ERROR: at time {N} expected 8'h{V} got 8'h{V}",
  };
  auto fill = [&](std::string s) {
    auto rep = [&](const std::string& tag, const std::string& val) {
      for (std::size_t p; (p = s.find(tag)) != std::string::npos;) s.replace(p, tag.size(), val);
    };
    rep("{L}", std::to_string(1 + rng() % 400));
    rep("{N}", std::to_string(rng() % 8));
    std::string v;
    for (int i = 0; i < 8; ++i) v += "01"[rng() % 2];
    rep("{V}", v);
    return s;
  };
  auto respace = [&](std::string s) {
    std::string out;
    for (char c : s) {
      out += c;
      if (c == ' ' && rng() % 3 == 0) out += "  ";
    }
    return rng() % 2 ? "  " + out + "\t" : out;
  };
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const std::string& tmpl = compile_msgs[i % compile_msgs.size()];
    std::string a = fill(tmpl), b = respace(fill(tmpl));
    auto fa = fingerprint_compile(parse_diagnostics(a));
    auto fb = fingerprint_compile(parse_diagnostics(text::trim(b)));
    CHECK(fa == fb);
    ++checked;
  }
  for (int i = 0; i < 100; ++i) {
    // Case number stays fixed; values and spacing vary.
    std::string a = "Error: Test case 2 failed. Expected: 10101010, Received: 01010101";
    std::string v;
    for (int k = 0; k < 8; ++k) v += "01"[rng() % 2];
    std::string b = respace("Error: Test case 2 failed. Expected: 10101010, Received: " + v);
    CHECK(fingerprint_sim({a}, false, false) == fingerprint_sim({b}, false, false));
    std::string c = fill(sim_lines[1]), d = fill(sim_lines[1]);
    CHECK(fingerprint_sim({c}, false, false) == fingerprint_sim({d}, false, false));
  }
  CHECK(checked == 100);
}

TEST_CASE("identical text in different phases never collides") {
  const std::string line = "design.v:3: error: something broke";
  auto c = fingerprint_compile(parse_diagnostics(line));
  auto s = fingerprint_sim({line}, false, false);
  CHECK_FALSE(c == s);
  CHECK(c.str() != s.str());
}

TEST_CASE("different test cases have different fingerprints") {
  auto a = fingerprint_sim({"Error: Test case 1 failed. Expected: 1, Received: 0"}, false, false);
  auto b = fingerprint_sim({"Error: Test case 2 failed. Expected: 1, Received: 0"}, false, false);
  CHECK_FALSE(a == b);
}

TEST_CASE("toolchain discovery") {
  ToolchainConfig only_one;
  only_one.compiler = "/bin/true";
  CHECK_THROWS_AS(discover_toolchain(only_one), EnvironmentError);
  ToolchainConfig missing;
  missing.compiler = "/nonexistent/iverilog";
  missing.runtime = "/nonexistent/vvp";
  CHECK_THROWS_AS(discover_toolchain(missing), EnvironmentError);
  ToolchainConfig cfg;
  Toolchain t = discover_toolchain(cfg);
  CHECK_FALSE(t.origin.empty());
  CHECK(std::filesystem::exists(t.compiler));
}

TEST_CASE("workdir cleanup is idempotent") {
  std::filesystem::path p;
  {
    Workdir w;
    p = w.path();
    CHECK(std::filesystem::is_directory(p));
    w.cleanup();
    CHECK_FALSE(std::filesystem::exists(p));
    w.cleanup();
  }
  TempDir base;
  {
    Workdir keep(base.path, true);
    p = keep.path();
  }
  CHECK(std::filesystem::exists(p));
}

TEST_CASE("compile and simulate the shift register design") {
  ToolBridge b;
  TempDir dir;
  std::string design = fixture_text("verilog/sr_design.v");
  ToolVerdict bad = b.build_and_run({{"design.v", design}, {"tb.v", fixture_text("verilog/sr_tb_bad.v")}}, dir.path);
  CHECK_FALSE(bad.passed);
  CHECK(bad.phase == ToolPhase::Simulate);
  CHECK(bad.feedback_text == std::string(kMixedSimOutput).substr(0, std::string(kMixedSimOutput).size() - 1));
  ToolVerdict good =
      b.build_and_run({{"design.v", design}, {"tb.v", fixture_text("verilog/sr_tb_fixed.v")}}, dir.path);
  CHECK(good.passed);
  CHECK(b.invocations() == 4);
}

TEST_CASE("compile errors are fed back verbatim") {
  ToolBridge b;
  TempDir dir;
  CompileResult c = b.compile({{"bad.v", "module m;\n  wire x\nendmodule\n"}}, std::nullopt, dir.path);
  CHECK_FALSE(c.ok());
  ToolVerdict v = b.classify(c);
  CHECK_FALSE(v.passed);
  CHECK(v.phase == ToolPhase::Compile);
  CHECK(v.feedback_text.find("bad.v:") != std::string::npos);
  CHECK(v.fingerprint.phase == ToolPhase::Compile);
}

TEST_CASE("runaway simulation is stopped") {
  ToolchainConfig cfg;
  cfg.sim_timeout = std::chrono::milliseconds(1500);
  ToolBridge b(cfg);
  TempDir dir;
  std::string tb = "module t; reg clk = 0; always #5 clk = ~clk; endmodule\n";
  CompileResult c = b.compile({{"t.v", tb}}, std::nullopt, dir.path);
  REQUIRE(c.ok());
  SimResult s = b.simulate(c, dir.path);
  CHECK(s.timed_out);
  CHECK_FALSE(b.classify(s).passed);
}

TEST_CASE("feedback is bounded") {
  ToolchainConfig cfg;
  cfg.feedback_line_limit = 2;
  ToolBridge b(cfg);
  ToolVerdict v = b.classify(sim_from(kMixedSimOutput, b));
  CHECK(v.truncated);
  CHECK(text::split_lines(v.feedback_text).size() == 2);
}
