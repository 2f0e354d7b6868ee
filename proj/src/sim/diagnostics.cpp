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

#include "hwloop/sim/diagnostics.hpp"

namespace hwloop::sim {

std::string Diagnostic::render() const {
  if (!loc.file) {
    if (severity == Severity::Warning) return "warning: " + message;
    if (severity == Severity::Error) return "error: " + message;
    return message;
  }
  std::string prefix = loc.file_name() + ":" + std::to_string(loc.line) + ": ";
  switch (severity) {
    case Severity::SyntaxError: return prefix + "syntax error";
    case Severity::Warning: return prefix + "warning: " + message;
    case Severity::Error: return prefix + "error: " + message;
    case Severity::Note: return prefix + message;
  }
  return prefix + message;
}

void DiagnosticSink::error(const SourceLoc& loc, std::string message) {
  diags_.push_back(Diagnostic{Severity::Error, loc, std::move(message)});
  ++errors_;
}

void DiagnosticSink::syntax_error(const SourceLoc& loc, std::string detail) {
  diags_.push_back(Diagnostic{Severity::SyntaxError, loc, ""});
  if (!detail.empty()) diags_.push_back(Diagnostic{Severity::Error, loc, std::move(detail)});
  ++errors_;
}

void DiagnosticSink::warning(const SourceLoc& loc, std::string message) {
  diags_.push_back(Diagnostic{Severity::Warning, loc, std::move(message)});
}

void DiagnosticSink::note(const SourceLoc& loc, std::string message) {
  diags_.push_back(Diagnostic{Severity::Note, loc, std::move(message)});
}

}  // namespace hwloop::sim
