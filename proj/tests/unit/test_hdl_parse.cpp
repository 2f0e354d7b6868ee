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

#include <algorithm>
#include <random>
#include <set>

#include "hwloop/errors.hpp"
#include "hwloop/hdl_parse.hpp"
#include "support.hpp"

using namespace hwloop;
using hwloop::testing::fixture_text;

namespace {

std::string fence(const std::string& code) { return "```verilog\n" + code + "```\n"; }

std::set<std::string> module_names(const std::string& src) {
  std::set<std::string> out;
  for (const auto& s : module_spans(src)) out.insert(s.name);
  return out;
}

}  // namespace

TEST_CASE("extract: shift register reply is one block") {
  std::string design = fixture_text("verilog/sr_design.v");
  auto blocks = extract_code_blocks("Here it is:\n\n" + fence(design) + "\nThis shifts left.", 3);
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].text.find("module shift_register") != std::string::npos);
  CHECK(blocks[0].fenced);
  CHECK(blocks[0].origin_message_index == 3);
  CHECK(blocks[0].declared_language_tag == "verilog");
}

TEST_CASE("extract: empty and two-fence messages") {
  CHECK(extract_code_blocks("").empty());
  auto blocks = extract_code_blocks(fence("module a; endmodule\n") + "and\n" + fence("module a_tb; endmodule\n"));
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].text.find("module a;") != std::string::npos);
  CHECK(blocks[1].text.find("module a_tb;") != std::string::npos);
}

TEST_CASE("extract: unfenced module text") {
  auto blocks = extract_code_blocks("Sure.\nmodule m(input a, output b);\nassign b = a;\nendmodule\nDone.");
  REQUIRE(blocks.size() == 1);
  CHECK_FALSE(blocks[0].fenced);
  CHECK(blocks[0].text.find("endmodule") != std::string::npos);
  CHECK(blocks[0].text.find("Done.") == std::string::npos);
}

TEST_CASE("truncation detection") {
  std::string golden = fixture_text("verilog/sr_design.v");
  CHECK_FALSE(detect_truncation(fence(golden)));
  CHECK_FALSE(detect_truncation(""));
  std::size_t cut = golden.size() * 6 / 10;
  CHECK(detect_truncation(fence(golden.substr(0, cut))));
  CHECK(detect_truncation("```verilog\n" + golden.substr(0, cut)));
  CHECK(detect_truncation(fence("module m;\ninitial begin\n  $display(\"x\");\n")));
  CHECK(detect_truncation(fixture_text("verilog/sr_huggingchat_truncated.txt")));
}

TEST_CASE("assembly: identity and overlap removal") {
  std::string golden = fixture_text("verilog/sr_design.v");
  CHECK(assemble_design({CodeBlock{golden}}) == golden);

  auto lines = text::split_lines(golden);
  std::size_t cut = lines.size() * 6 / 10;
  std::vector<std::string> a(lines.begin(), lines.begin() + cut);
  std::vector<std::string> b(lines.begin() + (cut - 3), lines.end());
  std::string first = text::join(a, "\n") + "\n";
  std::string second = text::join(b, "\n") + "\n";
  CHECK(assemble_design({CodeBlock{first}, CodeBlock{second}}) == golden);
  std::vector<std::string> c(lines.begin() + cut, lines.end());
  CHECK(assemble_design({CodeBlock{first}, CodeBlock{text::join(c, "\n") + "\n"}}) == golden);

  CHECK_THROWS_AS(assemble_design({CodeBlock{first}}), AssemblyError);
}

TEST_CASE("assembly: later complete definition wins") {
  std::string v1 = "module m(input a, output b);\nassign b = a;\nendmodule\n";
  std::string v2 = "module m(input a, output b);\nassign b = ~a;\nendmodule\n";
  std::string out = assemble_design({CodeBlock{v1}, CodeBlock{v2}});
  CHECK(out.find("~a") != std::string::npos);
  CHECK(module_spans(out).size() == 1);
}

TEST_CASE("assembly over a single message keeps the fenced module set") {
  for (const auto& rel : {"verilog/sr_design.v", "verilog/sr_tb_bad.v", "verilog/sr_bard.v"}) {
    std::string code = fixture_text(rel);
    std::string message = "Text.\n" + fence(code) + "More text.\n";
    auto blocks = extract_code_blocks(message);
    CHECK(module_names(assemble_design(blocks)) == module_names(code));
  }
}

TEST_CASE("interface: shift register reply") {
  auto mods = parse_module_interface(fixture_text("verilog/sr_design.v"));
  REQUIRE(mods.size() == 1);
  CHECK(mods[0].module_name == "shift_register");
  std::vector<PortDesc> expected = {{"clk", Direction::Input, 1, false},
                                    {"reset_n", Direction::Input, 1, false},
                                    {"data_in", Direction::Input, 1, false},
                                    {"shift_enable", Direction::Input, 1, false},
                                    {"data_out", Direction::Output, 8, true}};
  CHECK(mods[0].ports == expected);
}

TEST_CASE("interface: bard design data is 8 bits wide") {
  auto mods = parse_module_interface(fixture_text("verilog/sr_bard.v"));
  REQUIRE(mods.size() == 1);
  const PortDesc* d = mods[0].find("data");
  REQUIRE(d);
  CHECK(d->direction == Direction::Input);
  CHECK(d->width == 8);
}

TEST_CASE("interface: empty module, non-ANSI, parameters") {
  auto m = parse_module_interface("module m; endmodule");
  REQUIRE(m.size() == 1);
  CHECK(m[0].ports.empty());

  auto n = parse_module_interface(
      "module n(a, b, c);\n  parameter W = 4;\n  input [W-1:0] a;\n  input b;\n  output reg [0:2] c;\nendmodule\n");
  REQUIRE(n.size() == 1);
  REQUIRE(n[0].ports.size() == 3);
  CHECK(n[0].ports[0].width == 4);
  CHECK(n[0].ports[2].width == 3);
  CHECK(n[0].ports[2].direction == Direction::Output);

  auto p = parse_module_interface("module p #(parameter N = 8)(input [$clog2(N)-1:0] sel, output [N-1:0] y);\nendmodule");
  REQUIRE(p.size() == 1);
  CHECK(p[0].ports[0].width == 3);
  CHECK(p[0].ports[1].width == 8);

  CHECK_THROWS_AS(parse_module_interface("assign x = 1;"), NotFoundError);
  CHECK_THROWS_AS(parse_module_interface("module (input a"), ParseError);
}

TEST_CASE("interface: truncated header survives the garbage body") {
  auto mods = parse_module_interface(fixture_text("verilog/sr_huggingchat_truncated.txt"));
  REQUIRE_FALSE(mods.empty());
  CHECK(mods[0].module_name == "ShiftRegister");
  std::vector<PortDesc> expected = {{"clk", Direction::Input, 1, false},
                                    {"rst_n", Direction::Input, 1, false},
                                    {"data_in", Direction::Input, 1, false},
                                    {"shft_en", Direction::Input, 1, false},
                                    {"q", Direction::Output, 8, true}};
  CHECK(mods[0].ports == expected);
  auto rep = check_interface(mods[0], builtin_benchmark("shift_register").interface);
  CHECK_FALSE(rep.conforms);
}

TEST_CASE("check: shift register conforms, gpt35 design conforms through aliases") {
  const auto& spec = builtin_benchmark("shift_register").interface;
  auto a = parse_module_interface(fixture_text("verilog/sr_design.v"));
  CHECK(check_interface(a[0], spec).conforms);
  auto b = parse_module_interface(fixture_text("verilog/sr_gpt35.v"));
  auto rep = check_interface(b[0], spec);
  CHECK(rep.conforms);
  CHECK(rep.binding.at("data_out") == "q");
  CHECK(rep.binding.at("data_in") == "data");
}

TEST_CASE("check: bard design has exactly one width mismatch") {
  const auto& spec = builtin_benchmark("shift_register").interface;
  auto mods = parse_module_interface(fixture_text("verilog/sr_bard.v"));
  auto rep = check_interface(mods[0], spec);
  CHECK_FALSE(rep.conforms);
  REQUIRE(rep.width_mismatches.size() == 1);
  CHECK(rep.width_mismatches[0] == WidthMismatch{"data", 1, 8});
  CHECK(rep.summary().find("data") != std::string::npos);
}

TEST_CASE("check: extra ports only fail when strict") {
  const auto& spec = builtin_benchmark("shift_register").interface;
  InterfaceDesc d = parse_module_interface(fixture_text("verilog/sr_design.v"))[0];
  d.ports.push_back({"debug", Direction::Output, 1, false});
  auto lax = check_interface(d, spec);
  CHECK(lax.conforms);
  CHECK(lax.extra == std::vector<std::string>{"debug"});
  CHECK_FALSE(check_interface(d, spec, CheckOptions{true}).conforms);
}

TEST_CASE("property: spec rendered as a header conforms to itself") {
  for (const auto& b : builtin_suite()) {
    InterfaceDesc d;
    d.module_name = b.id;
    for (const auto& p : b.interface.ports) d.ports.push_back({p.name, p.direction, p.width, false});
    CAPTURE(b.id);
    CHECK(check_interface(d, b.interface).conforms);
    auto golden = parse_module_interface(b.golden_design_source);
    const InterfaceDesc* sel = select_module(golden, b.id, b.interface);
    REQUIRE(sel);
    CHECK(check_interface(*sel, b.interface).conforms);
  }
}

TEST_CASE("property: parse after emit is the identity on port triples") {
  std::mt19937 rng(7);
  const std::vector<std::string> names = {"a", "b_in", "clk", "data", "q", "sel", "x1", "y_out", "en", "rst"};
  for (int iter = 0; iter < 300; ++iter) {
    InterfaceDesc d;
    d.module_name = "m" + std::to_string(iter);
    std::vector<std::string> pool = names;
    std::shuffle(pool.begin(), pool.end(), rng);
    int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i)
      d.ports.push_back({pool[i], rng() % 2 ? Direction::Input : Direction::Output, static_cast<int>(1 + rng() % 16),
                         false});
    auto back = parse_module_interface(emit_module_header(d));
    REQUIRE(back.size() == 1);
    CHECK(back[0].module_name == d.module_name);
    REQUIRE(back[0].ports.size() == d.ports.size());
    for (std::size_t i = 0; i < d.ports.size(); ++i) {
      CHECK(back[0].ports[i].name == d.ports[i].name);
      CHECK(back[0].ports[i].direction == d.ports[i].direction);
      CHECK(back[0].ports[i].width == d.ports[i].width);
    }
  }
}

TEST_CASE("property: check_interface ignores port order") {
  std::mt19937 rng(11);
  for (const auto& rel : {"verilog/sr_design.v", "verilog/sr_gpt35.v", "verilog/sr_bard.v"}) {
    InterfaceDesc d = parse_module_interface(fixture_text(rel))[0];
    const auto& spec = builtin_benchmark("shift_register").interface;
    auto base = check_interface(d, spec);
    for (int i = 0; i < 50; ++i) {
      std::shuffle(d.ports.begin(), d.ports.end(), rng);
      auto r = check_interface(d, spec);
      CHECK(r.conforms == base.conforms);
      CHECK(r.width_mismatches == base.width_mismatches);
      CHECK(r.binding == base.binding);
      CHECK(r.missing.size() == base.missing.size());
    }
  }
}

TEST_CASE("select_module prefers the benchmark name") {
  auto mods = parse_module_interface(
      "module helper(input a, output b); endmodule\nmodule shift_register(input clk, input reset_n, input data_in, "
      "input shift_enable, output [7:0] data_out); endmodule\n");
  const auto& spec = builtin_benchmark("shift_register");
  const InterfaceDesc* s = select_module(mods, spec.id, spec.interface);
  REQUIRE(s);
  CHECK(s->module_name == "shift_register");
}

TEST_CASE("lint flags SystemVerilog constructs") {
  auto w = lint_verilog2001("module m(input logic a);\nalways_ff @(posedge a) begin end\nendmodule\n");
  REQUIRE(w.size() >= 2);
  CHECK(w[0].token == "logic");
  CHECK(w[0].line == 1);
  CHECK(w[1].token == "always_ff");
  CHECK(lint_verilog2001(fixture_text("verilog/sr_design.v")).empty());
  CHECK(lint_verilog2001("// logic in a comment\nmodule m; endmodule\n").empty());
}
