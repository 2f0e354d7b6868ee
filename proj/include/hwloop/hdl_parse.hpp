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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hwloop/bench_spec.hpp"

namespace hwloop {

struct CodeBlock {
  std::string text;
  int origin_message_index = 0;
  bool fenced = false;
  std::optional<std::string> declared_language_tag;
};

/// Fenced blocks in order. Without fences, a module...endmodule span (or a
/// module running to end of message) becomes one unfenced block.
std::vector<CodeBlock> extract_code_blocks(std::string_view message, int origin_message_index = 0);

/// True when a fence is left open or the Verilog ends with unbalanced
/// module/endmodule, begin/end, case/endcase, fork/join, function or task.
bool detect_truncation(std::string_view message);

/// Joins continuation parts, dropping repeated overlap lines and earlier
/// duplicate module definitions. Throws AssemblyError if the result does not
/// balance.
std::string assemble_design(const std::vector<CodeBlock>& parts);

struct PortDesc {
  std::string name;
  Direction direction = Direction::Input;
  int width = 1;
  bool is_reg = false;
  bool operator==(const PortDesc&) const = default;
};

struct InterfaceDesc {
  std::string module_name;
  std::vector<PortDesc> ports;
  std::size_t offset = 0;  // byte offset of the `module` keyword
  const PortDesc* find(std::string_view name) const;
};

/// Header-level interface extraction, ANSI and non-ANSI. Text after a header
/// that fails to parse never affects that header's ports.
/// Throws ParseError (byte offset) or NotFoundError.
std::vector<InterfaceDesc> parse_module_interface(std::string_view source);

/// ANSI header text for `desc`, ending in ");\nendmodule\n".
std::string emit_module_header(const InterfaceDesc& desc);

struct WidthMismatch {
  std::string port;
  int expected = 0;
  int found = 0;
  bool operator==(const WidthMismatch&) const = default;
};

struct ConformanceReport {
  bool conforms = false;
  std::vector<PortSpec> missing;
  std::vector<std::string> extra;
  std::vector<WidthMismatch> width_mismatches;
  std::vector<std::string> direction_mismatches;
  std::map<std::string, std::string> binding;  // spec port -> found port
  std::string module_name;

  std::string summary() const;
};

struct CheckOptions {
  bool strict_extra = false;  // extra found ports fail conformance
};

ConformanceReport check_interface(const InterfaceDesc& found, const InterfaceSpec& spec,
                                  const CheckOptions& options = {});

/// Picks the module a design reply is meant to provide: one named like the
/// benchmark, else the first that conforms, else the first.
const InterfaceDesc* select_module(const std::vector<InterfaceDesc>& modules,
                                   const std::string& benchmark_id, const InterfaceSpec& spec);

struct LintWarning {
  int line = 0;
  std::string token;
  std::string message;
};

/// SystemVerilog-only constructs that Verilog-2001 tools reject.
std::vector<LintWarning> lint_verilog2001(std::string_view source);

/// Top-level module spans in `source`: name -> [begin, end) byte range,
/// in source order. Unterminated modules run to the end of the text.
struct ModuleSpan {
  std::string name;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool complete = false;
};
std::vector<ModuleSpan> module_spans(std::string_view source);

}  // namespace hwloop
