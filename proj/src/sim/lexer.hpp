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
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hwloop/sim/diagnostics.hpp"

namespace hwloop::sim {

enum class Tok {
  End,
  Identifier,
  SystemName,  // $display
  Number,
  RealNumber,
  String,
  Timescale,   // `timescale payload in text: "<unit_exp> <prec_exp>"
  Punct,       // operators and punctuation, text holds the spelling
  Keyword,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceLoc loc;
};

struct MacroDef {
  std::vector<std::string> params;
  bool function_like = false;
  std::string body;
};

/// Tokenizes Verilog source, applying the compiler directives the
/// simulator understands (`define, `ifdef family, `timescale).
class Lexer {
 public:
  Lexer(std::string_view file, std::string_view text, DiagnosticSink& diags,
        std::map<std::string, MacroDef>* macros);

  std::vector<Token> tokenize();

 private:
  struct Source {
    std::string text;
    size_t pos = 0;
    uint32_t line = 1;
    bool is_macro = false;
    std::string macro_name;
  };

  bool at_end() const;
  char peek(size_t ahead = 0) const;
  char get();
  SourceLoc loc() const;
  void skip_space_and_comments();
  void directive(std::vector<Token>& out);
  std::string read_line_rest();
  std::string read_identifier();
  void number(std::vector<Token>& out);
  void string_literal(std::vector<Token>& out);
  void punct(std::vector<Token>& out);
  bool active() const;
  void skip_inactive();

  std::string file_;
  DiagnosticSink& diags_;
  std::map<std::string, MacroDef>* macros_;
  std::map<std::string, MacroDef> local_macros_;
  std::vector<Source> stack_;
  // `ifdef nesting: each entry is (this branch active, some branch taken).
  std::vector<std::pair<bool, bool>> cond_;
};

bool is_keyword(std::string_view word);

}  // namespace hwloop::sim
