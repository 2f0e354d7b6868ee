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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace hwloop::sim {

struct SourceLoc {
  std::shared_ptr<const std::string> file;
  uint32_t line = 0;

  std::string file_name() const { return file ? *file : std::string("<unknown>"); }
};

enum class Severity { Warning, Error, SyntaxError, Note };

struct Diagnostic {
  Severity severity = Severity::Error;
  SourceLoc loc;
  std::string message;

  // Renders the way Icarus Verilog does: "file:line: error: message".
  std::string render() const;
};

class DiagnosticSink {
 public:
  void error(const SourceLoc& loc, std::string message);
  void syntax_error(const SourceLoc& loc, std::string detail);
  void warning(const SourceLoc& loc, std::string message);
  // Continuation line printed as "file:line: message".
  void note(const SourceLoc& loc, std::string message);

  size_t error_count() const { return errors_; }
  const std::vector<Diagnostic>& all() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
  size_t errors_ = 0;
};

}  // namespace hwloop::sim
