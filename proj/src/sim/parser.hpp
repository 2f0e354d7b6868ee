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

#include <string>
#include <vector>

#include "ast.hpp"
#include "lexer.hpp"

namespace hwloop::sim {

struct TimescaleState {
  bool seen = false;
  int unit_exp = 0;
  int prec_exp = 0;
};

// Converts a number token ("12", "8'hff", "'b10x", "4'sd3") to a value.
struct NumberValue {
  BitVector value;
  bool sized = false;
  bool is_signed = false;
};
NumberValue parse_number(const std::string& text);

/// Recursive-descent parser for the Verilog-2001 subset the simulator runs.
/// Syntax errors are reported to the sink; parsing resumes at the next
/// module.
class Parser {
 public:
  Parser(std::vector<Token> tokens, DiagnosticSink& diags, TimescaleState& ts);

  void parse(ast::Design& design);

 private:
  struct SyntaxError {
    SourceLoc loc;
    std::string detail;
  };

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(size_t n = 1) const;
  bool is(std::string_view text) const;
  bool is_kw(std::string_view kw) const;
  bool accept(std::string_view text);
  void expect(std::string_view text);
  std::string expect_identifier();
  [[noreturn]] void fail(std::string detail) const;

  std::unique_ptr<ast::Module> module();
  void parameter_port_list(ast::Module& m);
  void port_list(ast::Module& m);
  void module_item(std::vector<ast::ModuleItem>& items, bool in_generate);
  void port_declaration(std::vector<ast::ModuleItem>& items);
  void net_declaration(std::vector<ast::ModuleItem>& items);
  std::vector<ast::VarDecl> variable_list(ast::NetKind kind, bool is_signed,
                                          std::optional<ast::Range> range,
                                          ast::PortDir dir);
  std::vector<ast::ParamDecl> parameter_declaration(bool local);
  void continuous_assign(std::vector<ast::ModuleItem>& items);
  void instantiation(std::vector<ast::ModuleItem>& items);
  void gate_instantiation(std::vector<ast::ModuleItem>& items);
  std::unique_ptr<ast::Subroutine> subroutine(bool is_task);
  void generate_item(std::vector<ast::ModuleItem>& items);
  std::vector<ast::ModuleItem> generate_body();
  ast::ModuleItem generate_for();
  ast::ModuleItem generate_if();
  ast::ModuleItem generate_case();
  void skip_specify();

  std::optional<ast::Range> optional_range();
  std::vector<ast::Connection> connection_list();

  ast::StmtPtr statement();
  ast::StmtPtr statement_or_null();
  ast::StmtPtr block(bool fork);
  ast::StmtPtr if_statement();
  ast::StmtPtr case_statement();
  ast::StmtPtr for_statement();
  ast::StmtPtr assignment_statement(bool require_semicolon);
  ast::EventControl event_control();
  ast::ExprPtr delay_value();
  void local_declarations(std::vector<ast::VarDecl>& decls,
                          std::vector<ast::ParamDecl>& params);
  bool at_local_declaration() const;

  ast::ExprPtr lvalue();
  ast::ExprPtr expression();
  ast::ExprPtr ternary();
  ast::ExprPtr binary(int min_prec);
  ast::ExprPtr unary();
  ast::ExprPtr primary();
  ast::ExprPtr selects(ast::ExprPtr base);
  ast::ExprPtr hierarchical_identifier();
  std::vector<ast::ExprPtr> call_arguments();

  std::vector<Token> toks_;
  size_t pos_ = 0;
  DiagnosticSink& diags_;
  TimescaleState& ts_;
};

}  // namespace hwloop::sim
