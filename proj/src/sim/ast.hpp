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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hwloop/sim/bit_vector.hpp"
#include "hwloop/sim/diagnostics.hpp"

namespace hwloop::sim::ast {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

enum class ExprKind {
  Number,
  Real,
  String,
  Ident,
  Select,        // args: base, index
  Range,         // args: base, msb, lsb
  IndexedRange,  // args: base, start, width; op is "+:" or "-:"
  Unary,
  Binary,
  Ternary,
  Concat,
  Replicate,     // args[0] is the count
  Call,
  SysCall,
};

struct Expr {
  ExprKind kind = ExprKind::Number;
  SourceLoc loc;
  std::string op;
  std::vector<std::string> path;  // identifier components / call name
  BitVector value;
  bool sized = true;
  bool is_signed = false;
  double real = 0;
  std::string text;
  std::vector<ExprPtr> args;

  std::string name() const;  // dotted path
};

struct Range {
  ExprPtr msb;
  ExprPtr lsb;
};

enum class Edge { Any, Pos, Neg };

struct EventItem {
  Edge edge = Edge::Any;
  ExprPtr expr;
};

struct EventControl {
  bool star = false;
  std::vector<EventItem> items;
};

enum class NetKind {
  None, Wire, Tri, Wand, Wor, Tri0, Tri1, Supply0, Supply1,
  Reg, Integer, Time, Real, Genvar, Event,
};

enum class PortDir { None, Input, Output, Inout };

struct VarDecl {
  std::string name;
  SourceLoc loc;
  PortDir dir = PortDir::None;
  NetKind kind = NetKind::None;
  bool is_signed = false;
  std::optional<Range> range;
  std::optional<Range> array;
  ExprPtr init;
};

struct ParamDecl {
  std::string name;
  SourceLoc loc;
  bool local = false;
  bool is_signed = false;
  bool integer_type = false;
  std::optional<Range> range;
  ExprPtr value;
};

enum class StmtKind {
  Null, Block, Fork, Assign, If, Case, For, While, Repeat, Forever,
  Delay, Event, Wait, TaskCall, SysTask, Disable, Trigger,
};

struct CaseItem {
  std::vector<ExprPtr> labels;  // empty for default
  StmtPtr body;
};

struct Stmt {
  StmtKind kind = StmtKind::Null;
  SourceLoc loc;
  std::string name;
  std::vector<VarDecl> decls;
  std::vector<ParamDecl> params;
  std::vector<StmtPtr> body;
  ExprPtr lhs;
  ExprPtr rhs;
  bool nonblocking = false;
  ExprPtr cond;
  ExprPtr delay;
  std::optional<EventControl> event;
  StmtPtr init;
  StmtPtr step;
  std::string case_kind;  // case, casez, casex
  std::vector<CaseItem> items;
  std::vector<ExprPtr> args;
};

struct Connection {
  std::string port;  // empty when positional
  ExprPtr expr;      // null for an explicitly empty connection
  SourceLoc loc;
};

struct Instance {
  std::string name;
  SourceLoc loc;
  std::vector<Connection> connections;
};

struct ContAssign {
  ExprPtr lhs;
  ExprPtr rhs;
  SourceLoc loc;
};

struct Subroutine {
  std::string name;
  SourceLoc loc;
  bool is_task = false;
  bool is_signed = false;
  bool integer_return = false;
  std::optional<Range> range;
  std::vector<VarDecl> decls;  // arguments (with dir) and locals, in order
  std::vector<ParamDecl> params;
  StmtPtr body;
};

enum class ItemKind {
  Decl, Param, Assign, Always, Initial, Instantiation, Subroutine,
  GenFor, GenIf, GenBlock, GenCase,
};

struct ModuleItem {
  ItemKind kind = ItemKind::Decl;
  SourceLoc loc;
  std::vector<VarDecl> decls;
  std::vector<ParamDecl> params;
  std::vector<ContAssign> assigns;
  ExprPtr delay;  // continuous assignment delay
  StmtPtr stmt;
  std::string module_name;  // instantiation target or gate keyword
  std::vector<Connection> param_overrides;
  std::vector<Instance> instances;
  std::unique_ptr<Subroutine> subroutine;
  // generate constructs
  std::string genvar;
  ExprPtr gen_init;
  ExprPtr gen_cond;
  ExprPtr gen_step;
  std::string block_name;
  std::vector<ModuleItem> gen_items;
  std::vector<ModuleItem> gen_else;
  std::vector<std::pair<std::vector<ExprPtr>, std::vector<ModuleItem>>> gen_cases;
};

struct Module {
  std::string name;
  SourceLoc loc;
  std::vector<std::string> port_order;
  std::vector<ParamDecl> header_params;
  std::vector<ModuleItem> items;
  int unit_exp = 0;
  int prec_exp = 0;
  bool has_timescale = false;
};

struct Design {
  std::vector<std::unique_ptr<Module>> modules;
};

}  // namespace hwloop::sim::ast
