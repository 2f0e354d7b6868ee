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

#include <regex>
#include <set>

#include "hwloop/bench_spec.hpp"
#include "hwloop/errors.hpp"
#include "support.hpp"

using namespace hwloop;

namespace {

AssetResolver no_assets() {
  return [](const std::string&) -> std::optional<std::string> { return "module m; endmodule\n"; };
}

std::string one_benchmark(const std::string& ports, bool tapeout = true) {
  return "benchmarks:\n  - id: t\n    title: T\n    tapeout: " + std::string(tapeout ? "true" : "false") +
         "\n    ports:\n" + ports + "    golden_design: t.v\n    golden_testbench: t_tb.v\n";
}

int count_word(const std::string& hay, const std::string& word) {
  std::regex re("(^|[^A-Za-z0-9_])" + word + "($|[^A-Za-z0-9_])");
  int n = 0;
  for (auto it = std::sregex_iterator(hay.begin(), hay.end(), re); it != std::sregex_iterator(); ++it) ++n;
  return n;
}

}  // namespace

TEST_CASE("built-in suite lists the eight benchmarks in order") {
  const auto& suite = builtin_suite();
  std::vector<std::string> ids;
  for (const auto& b : suite) ids.push_back(b.id);
  CHECK(ids == std::vector<std::string>{"shift_register", "seq_gen", "seq_det", "abro", "bin2bcd", "lfsr",
                                        "traffic_light", "dice_roller"});
  for (const auto& b : suite) {
    CHECK_FALSE(b.golden_design_source.empty());
    CHECK_FALSE(b.golden_testbench_source.empty());
    CHECK(b.interface.tapeout_constrained);
    CHECK(b.interface.input_bits() <= 5);
    CHECK(b.interface.output_bits() <= 8);
  }
}

TEST_CASE("empty suite document is an empty list") {
  CHECK(load_suite("", no_assets()).empty());
  CHECK(load_suite("benchmarks: []\n", no_assets()).empty());
}

TEST_CASE("six input bits on a tapeout benchmark is a constraint error") {
  std::string doc = one_benchmark(
      "      - {name: clk, direction: input, width: 1, role: clock}\n"
      "      - {name: d, direction: input, width: 5}\n"
      "      - {name: q, direction: output, width: 1}\n");
  CHECK_THROWS_AS(load_suite(doc, no_assets()), ConstraintError);
  std::string untaped = one_benchmark(
      "      - {name: clk, direction: input, width: 1, role: clock}\n"
      "      - {name: d, direction: input, width: 5}\n"
      "      - {name: q, direction: output, width: 1}\n",
      false);
  CHECK(load_suite(untaped, no_assets()).size() == 1);
}

TEST_CASE("malformed suite reports line and field") {
  std::string doc = one_benchmark(
      "      - {name: clk, direction: sideways, width: 1}\n");
  try {
    load_suite(doc, no_assets());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field == "direction");
    CHECK(e.line == 6);
  }
  CHECK_THROWS_AS(load_suite("benchmarks: [\n", no_assets()), ConfigError);
  CHECK_THROWS_AS(load_suite(one_benchmark("      - {name: a, direction: input, width: 0}\n"), no_assets()),
                  ConfigError);
  CHECK_THROWS_AS(load_suite(one_benchmark("      - {name: a, direction: input, width: 1}\n"
                                           "      - {name: A, direction: input, width: 1}\n"),
                             no_assets()),
                  ConfigError);
  CHECK_THROWS_AS(load_suite(one_benchmark("      - {name: a, direction: input, width: 1, role: clock}\n"
                                           "      - {name: b, direction: input, width: 1, role: clock}\n"),
                             no_assets()),
                  ConfigError);
}

TEST_CASE("more than eight tapeout benchmarks in one wrapper group") {
  std::string doc = "benchmarks:\n";
  for (int i = 0; i < 9; ++i)
    doc += "  - id: b" + std::to_string(i) +
           "\n    tapeout: true\n    ports:\n      - {name: q, direction: output, width: 1}\n"
           "    golden_design: x.v\n    golden_testbench: y.v\n";
  CHECK_THROWS_AS(load_suite(doc, no_assets()), ConstraintError);
}

TEST_CASE("missing golden asset is a config error") {
  AssetResolver none = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
  CHECK_THROWS_AS(load_suite(one_benchmark("      - {name: q, direction: output, width: 1}\n"), none),
                  ConfigError);
}

TEST_CASE("shift register design prompt has the fixed skeleton") {
  std::string p = render_design_prompt(builtin_benchmark("shift_register"));
  const std::string expected =
      "I am trying to create a Verilog model for a shift register. It must meet the following specifications:\n"
      "- Inputs:\n\t- Clock\n\t- Active-low reset\n\t- Data (1 bit)\n\t- Shift enable\n"
      "- Outputs:\n\t- Data (8 bits)\n"
      "How would I write a design that meets these specifications?";
  CHECK(p == expected);
  CHECK(render_design_prompt(builtin_benchmark("shift_register")) == p);
}

TEST_CASE("abro prompt carries its one-hot constraint") {
  std::string p = render_design_prompt(builtin_benchmark("abro"));
  CHECK(p.find("The state machine must use one-hot state encoding: idle 4'b0001, seen a 4'b0010, seen b 4'b0100, "
               "done 4'b1000.") != std::string::npos);
  CHECK(p.find('{') == std::string::npos);
}

TEST_CASE("fixed prompts") {
  CHECK(render_fixed_prompt(PromptKind::Continue) == "Please continue");
  std::string tb = render_fixed_prompt(PromptKind::Testbench);
  CHECK(tb.find("self-checking") != std::string::npos);
  CHECK(tb.find("iverilog") != std::string::npos);
  CHECK(render_fixed_prompt(PromptKind::Fix).find("Please provide fixed code.") != std::string::npos);
  for (auto k : {PromptKind::Testbench, PromptKind::Fix, PromptKind::Continue})
    CHECK(template_placeholders(prompt_template(k).body).empty());
  auto design_slots = template_placeholders(prompt_template(PromptKind::Design).body);
  CHECK(std::count(design_slots.begin(), design_slots.end(), "spec_bullets") == 1);
}

TEST_CASE("every port is named once in the bullet section") {
  for (const auto& spec : builtin_suite()) {
    CAPTURE(spec.id);
    auto lines = spec_bullet_lines(spec);
    std::string bullets;
    for (const auto& l : lines)
      if (l.rfind("\t- ", 0) == 0) bullets += l + "\n";
    for (const auto& p : spec.interface.ports) {
      CAPTURE(p.name);
      // Each port owns exactly one bullet, identified by its label.
      CHECK(std::count(lines.begin(), lines.end(), "\t- " + p.label) == 1);
      if (spec.id != "shift_register") CHECK(count_word(bullets, p.name) == 1);
    }
  }
}

TEST_CASE("port name normalization and aliases") {
  CHECK(normalize_port_name("Reset_N") == "resetn");
  CHECK(normalize_port_name("data_in") == normalize_port_name("DATAIN"));
  const auto& spec = builtin_benchmark("shift_register");
  auto al = spec.interface.aliases_of("data_out");
  CHECK(std::find(al.begin(), al.end(), "q") != al.end());
  auto clk = spec.interface.aliases_of("clk");
  CHECK(std::find(clk.begin(), clk.end(), "clock") != clk.end());
}

TEST_CASE("export round-trips through load_suite_file") {
  testing::TempDir dir;
  export_builtin_suite(dir.path);
  auto loaded = load_suite_file(dir.path / "suite.yaml");
  const auto& builtin = builtin_suite();
  REQUIRE(loaded.size() == builtin.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == builtin[i].id);
    CHECK(loaded[i].golden_design_source == builtin[i].golden_design_source);
    CHECK(render_design_prompt(loaded[i]) == render_design_prompt(builtin[i]));
  }
}
