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
#include <unordered_map>
#include <vector>

#include "ast.hpp"
#include "hwloop/sim/bit_vector.hpp"

namespace hwloop::sim {

struct Driver;
struct Scope;
struct Subprogram;
struct Code;

struct Signal {
  std::string path;
  uint32_t width = 1;
  int32_t msb = 0;
  int32_t lsb = 0;
  bool is_signed = false;
  ast::NetKind kind = ast::NetKind::Wire;
  bool is_net = true;
  BitVector value;
  // Memories keep one vector per word; value is unused for them.
  bool is_array = false;
  int32_t arr_first = 0;
  int32_t arr_last = 0;
  std::vector<BitVector> words;
  uint64_t writes = 0;  // memory write counter, watched by @*

  // Continuous drivers onto this net: (driver, index into its targets).
  std::vector<std::pair<Driver*, size_t>> drivers;
  std::vector<Driver*> fanout;    // drivers whose inputs read this signal
  struct WaitRef {
    struct Thread* thread;
    uint64_t gen;
  };
  std::vector<WaitRef> waiters;

  int64_t word_offset(int64_t index) const {
    int64_t off = arr_first <= arr_last ? index - arr_first : arr_first - index;
    if (off < 0 || off >= static_cast<int64_t>(words.size())) return -1;
    return off;
  }
  // Bit position of declared index i (may fall outside [0, width)).
  int64_t bit_pos(int64_t i) const { return msb >= lsb ? i - lsb : lsb - i; }
};

enum class EOp {
  Const, Sig, Word, BitSel, PartSel, IdxUp, IdxDown,
  // unary
  Plus, Neg, BitNot, LogNot, RAnd, RNand, ROr, RNor, RXor, RXnor,
  // binary
  Add, Sub, Mul, Div, Mod, Pow, And, Or, Xor, Xnor, Shl, Shr, AShl, AShr,
  Lt, Le, Gt, Ge, Eq, Ne, CaseEq, CaseNe, LogAnd, LogOr,
  Ternary, Concat, Repl, Call, SysFunc,
};

struct CExpr {
  EOp op = EOp::Const;
  uint32_t width = 1;
  bool is_signed = false;
  bool is_real = false;  // real literal (only meaningful in delays)
  double real = 0;
  BitVector value;
  Signal* sig = nullptr;
  // Declared range of the select base, used to map indices to positions.
  int32_t base_msb = 0;
  int32_t base_lsb = 0;
  int64_t const_pos = 0;  // constant part-select low position
  uint32_t repl = 0;
  Subprogram* fn = nullptr;
  std::string name;  // system function name
  Scope* scope = nullptr;
  std::vector<std::unique_ptr<CExpr>> a;
};
using CExprPtr = std::unique_ptr<CExpr>;

struct CLValue {
  enum class Sel { Whole, Bit, Part, IdxUp, IdxDown, Concat };
  Sel sel = Sel::Whole;
  Signal* sig = nullptr;
  CExprPtr word;   // memory word index
  CExprPtr index;  // bit index or indexed-part base
  int64_t const_pos = 0;
  uint32_t width = 1;
  std::vector<CLValue> parts;  // MSB first, for Concat
};

// A resolved write destination.
struct Target {
  Signal* sig = nullptr;
  int64_t word = -1;
  int64_t lo = 0;
  uint32_t width = 0;
  bool valid = true;
};

struct WaitItem {
  ast::Edge edge = ast::Edge::Any;
  CExprPtr expr;
};

struct CaseArm {
  std::vector<CExprPtr> labels;
  size_t target = 0;
};

enum class Op {
  Assign, EvalTemp, StoreTemp, JumpIfFalse, Jump, Delay, WaitEvent, WaitCond,
  Case, RepeatInit, RepeatTest, SysTask, TaskCall, Return, Fork, ForkEnd,
  Trigger, Disable, Halt,
};

struct Instr {
  Op op = Op::Halt;
  SourceLoc loc;
  bool nonblocking = false;
  CLValue lv;
  CExprPtr expr;
  CExprPtr delay;  // nonblocking intra-assignment delay
  size_t target = 0;
  std::vector<WaitItem> items;
  std::string case_kind;
  uint32_t case_width = 0;
  bool case_signed = false;
  std::vector<CaseArm> arms;
  bool has_default = false;
  std::string name;  // system task
  std::vector<CExprPtr> args;
  std::vector<CLValue> outs;  // task output bindings, in argument order
  Subprogram* sub = nullptr;
  std::vector<size_t> fork_starts;
  Signal* event = nullptr;
  Scope* disable_scope = nullptr;
  Scope* scope = nullptr;
};

struct Code {
  std::vector<Instr> instrs;
  Scope* scope = nullptr;
  std::string kind;  // initial, always, task, function
};

struct Subprogram {
  std::string name;
  bool is_task = false;
  Scope* scope = nullptr;
  std::vector<Signal*> args;
  std::vector<ast::PortDir> dirs;
  Signal* ret = nullptr;
  Code code;
  const ast::Subroutine* decl = nullptr;
};

struct Symbol {
  enum class Kind { Signal, Param, Subprogram };
  Kind kind = Kind::Signal;
  Signal* sig = nullptr;
  bool is_var = false;
  bool is_port = false;
  ast::PortDir dir = ast::PortDir::None;
  BitVector value;  // parameters
  bool is_signed = false;
  int32_t msb = 0;
  int32_t lsb = 0;
  Subprogram* sub = nullptr;
  SourceLoc loc;
};

struct Scope {
  std::string name;
  std::string path;
  Scope* parent = nullptr;
  bool is_module = false;
  const ast::Module* module = nullptr;
  int unit_exp = 0;
  int prec_exp = 0;
  std::unordered_map<std::string, Symbol> symbols;
  std::map<std::string, Scope*> children;
  int genblk_count = 0;
  // Named procedural blocks record their span for disable.
  const Code* block_code = nullptr;
  size_t block_begin = 0;
  size_t block_end = 0;
};

struct Driver {
  std::vector<Target> targets;  // static destinations, MSB first
  CExprPtr rhs;
  CExprPtr delay;
  Scope* scope = nullptr;
  uint32_t width = 0;
  std::vector<BitVector> contrib;  // per target, z until first evaluation
  bool pending = false;
  SourceLoc loc;
};

struct Model {
  std::vector<std::unique_ptr<Scope>> scopes;
  std::vector<std::unique_ptr<Signal>> signals;
  std::vector<std::unique_ptr<Driver>> drivers;
  std::vector<std::unique_ptr<Code>> processes;
  std::vector<std::unique_ptr<Subprogram>> subprograms;
  std::vector<Scope*> roots;
  int global_prec = 0;
  // Variables with declaration initializers, applied before time 0.
  std::vector<std::pair<Signal*, BitVector>> initial_values;
};

}  // namespace hwloop::sim
