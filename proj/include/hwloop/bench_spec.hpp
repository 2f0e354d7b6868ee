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

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hwloop {

enum class Direction { Input, Output, Inout };

enum class PortRole { Clock, ResetActiveLow, ResetActiveHigh, Data, Enable, Select, Plain };

std::string to_string(Direction d);
std::string to_string(PortRole r);

struct PortSpec {
  std::string name;
  Direction direction = Direction::Input;
  int width = 1;
  PortRole role = PortRole::Plain;
  std::string label;  // wording used in the design prompt bullet
};

struct InterfaceSpec {
  std::vector<PortSpec> ports;
  // Canonical port name -> accepted alternative names, primary alias first.
  std::map<std::string, std::vector<std::string>> name_aliases;
  bool tapeout_constrained = false;

  int input_bits() const;
  int output_bits() const;
  const PortSpec* find(std::string_view name) const;
  const PortSpec* clock() const;
  const PortSpec* reset() const;
  // Aliases for `name`: the suite's own list followed by the built-in table.
  std::vector<std::string> aliases_of(const std::string& name) const;
};

struct BenchmarkSpec {
  std::string id;
  std::string title;
  std::string subject;  // noun phrase completing "a Verilog model for ..."
  std::string group = "default";
  InterfaceSpec interface;
  std::vector<std::string> description_bullets;  // prompt lines between the first and last
  std::vector<std::string> extra_constraints;    // may reference {parameter} placeholders
  std::string golden_design;                     // asset names
  std::string golden_testbench;
  std::map<std::string, std::string> parameters;
  std::string golden_design_source;  // resolved asset text
  std::string golden_testbench_source;
};

enum class PromptKind { Design, Testbench, Fix, Continue };

struct PromptTemplate {
  PromptKind kind;
  std::string body;
};

// Case-fold and strip underscores.
std::string normalize_port_name(std::string_view name);
// Built-in alias pairs shared by every benchmark (clk/clock, rst_n/reset_n, ...).
const std::map<std::string, std::vector<std::string>>& builtin_aliases();

using AssetResolver = std::function<std::optional<std::string>(const std::string& name)>;

/// Parses a suite document. Assets are looked up through `resolver`.
/// Throws ConfigError (with line and field) or ConstraintError.
std::vector<BenchmarkSpec> load_suite(const std::string& document, const AssetResolver& resolver);
std::vector<BenchmarkSpec> load_suite_file(const std::filesystem::path& path);

/// The default 8-benchmark suite embedded in the binary.
const std::vector<BenchmarkSpec>& builtin_suite();
const BenchmarkSpec& builtin_benchmark(std::string_view id);
std::optional<std::string> embedded_asset(const std::string& name);
std::vector<std::string> embedded_asset_names();
// Writes the default suite document and its golden files into `dir`.
void export_builtin_suite(const std::filesystem::path& dir);

// Port bullet lines and constraint lines with parameters substituted.
std::vector<std::string> spec_bullet_lines(const BenchmarkSpec& spec);
std::string render_design_prompt(const BenchmarkSpec& spec);
std::string render_fixed_prompt(PromptKind kind);
const PromptTemplate& prompt_template(PromptKind kind);
// Placeholder names appearing as {name} in `body`.
std::vector<std::string> template_placeholders(std::string_view body);

}  // namespace hwloop
