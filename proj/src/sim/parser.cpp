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

#include "parser.hpp"

#include <cctype>
#include <unordered_map>

namespace hwloop::sim {

using namespace ast;

std::string Expr::name() const {
  std::string out;
  for (const auto& p : path) {
    if (!out.empty()) out += '.';
    out += p;
  }
  return out;
}

NumberValue parse_number(const std::string& text) {
  NumberValue nv;
  auto tick = text.find('\'');
  if (tick == std::string::npos) {
    // Unsized decimal: 32-bit signed, wider if the digits demand it.
    BitVector v(32, Bit::Zero);
    BitVector ten = BitVector::from_uint(32, 10);
    bool overflow = false;
    uint64_t small = 0;
    for (char c : text) {
      if (small > (~uint64_t{0} - 9) / 10) overflow = true;
      small = small * 10 + static_cast<uint64_t>(c - '0');
    }
    if (!overflow) {
      uint32_t w = 32;
      if (small > 0xffffffffull) w = 64;
      v = BitVector::from_uint(w, small);
    } else {
      v = BitVector(128, Bit::Zero);
      BitVector ten128 = BitVector::from_uint(128, 10);
      for (char c : text)
        v = add(mul(v, ten128), BitVector::from_uint(128, static_cast<uint64_t>(c - '0')));
    }
    nv.value = v;
    nv.sized = false;
    nv.is_signed = true;
    return nv;
  }
  std::string size_text = text.substr(0, tick);
  size_t p = tick + 1;
  if (p < text.size() && text[p] == 's') {
    nv.is_signed = true;
    ++p;
  }
  char base = text[p++];
  std::string digits = text.substr(p);
  nv.sized = !size_text.empty();
  uint32_t width = nv.sized ? static_cast<uint32_t>(std::stoul(size_text)) : 32;
  if (width == 0) width = 1;

  BitVector raw(1, Bit::Zero);
  if (base == 'd') {
    bool unknown = digits.find_first_of("xz?") != std::string::npos;
    if (unknown) {
      Bit fill = digits.find('x') != std::string::npos ? Bit::X : Bit::Z;
      nv.value = BitVector(width, fill);
      return nv;
    }
    uint32_t w = std::max<uint32_t>(width, 64);
    BitVector acc(w, Bit::Zero);
    BitVector ten = BitVector::from_uint(w, 10);
    for (char c : digits)
      acc = add(mul(acc, ten), BitVector::from_uint(w, static_cast<uint64_t>(c - '0')));
    raw = acc;
  } else {
    uint32_t bits_per = base == 'b' ? 1 : base == 'o' ? 3 : 4;
    std::string bits;
    for (char c : digits) {
      if (c == 'x' || c == 'z' || c == '?') {
        bits.append(bits_per, c == '?' ? 'z' : c);
        continue;
      }
      unsigned v = std::isdigit(static_cast<unsigned char>(c))
                       ? static_cast<unsigned>(c - '0')
                       : static_cast<unsigned>(c - 'a' + 10);
      for (uint32_t i = bits_per; i-- > 0;) bits.push_back(((v >> i) & 1) ? '1' : '0');
    }
    raw = BitVector::from_bits(bits);
  }
  if (!nv.sized && raw.width() > width) {
    // Unsized literals grow as needed but keep at least 32 bits.
    uint32_t needed = raw.width();
    while (needed > 32 && raw.get(needed - 1) == Bit::Zero) --needed;
    width = std::max<uint32_t>(32, needed);
  }
  Bit top = raw.get(raw.width() - 1);
  bool extend_unknown = (top == Bit::X || top == Bit::Z) && base != 'd';
  BitVector out = raw.resized(width, false);
  if (!extend_unknown && width > raw.width()) {
    for (uint32_t i = raw.width(); i < width; ++i) out.set(i, Bit::Zero);
  }
  nv.value = out;
  return nv;
}

Parser::Parser(std::vector<Token> tokens, DiagnosticSink& diags, TimescaleState& ts)
    : toks_(std::move(tokens)), diags_(diags), ts_(ts) {}

const Token& Parser::peek(size_t n) const {
  size_t p = std::min(pos_ + n, toks_.size() - 1);
  return toks_[p];
}

bool Parser::is(std::string_view text) const {
  const Token& t = cur();
  return (t.kind == Tok::Punct || t.kind == Tok::Keyword) && t.text == text;
}

bool Parser::is_kw(std::string_view kw) const {
  return cur().kind == Tok::Keyword && cur().text == kw;
}

bool Parser::accept(std::string_view text) {
  if (is(text)) {
    ++pos_;
    return true;
  }
  return false;
}

void Parser::expect(std::string_view text) {
  if (!accept(text)) fail("Expected '" + std::string(text) + "' but found '" + cur().text + "'");
}

std::string Parser::expect_identifier() {
  if (cur().kind != Tok::Identifier) {
    if (cur().kind == Tok::Keyword)
      fail("'" + cur().text + "' is a reserved keyword and cannot be used as an identifier");
    fail("Expected an identifier but found '" + cur().text + "'");
  }
  return toks_[pos_++].text;
}

void Parser::fail(std::string detail) const { throw SyntaxError{cur().loc, std::move(detail)}; }

void Parser::parse(Design& design) {
  while (cur().kind != Tok::End) {
    if (cur().kind == Tok::Timescale) {
      auto sp = cur().text.find(' ');
      ts_.seen = true;
      ts_.unit_exp = std::stoi(cur().text.substr(0, sp));
      ts_.prec_exp = std::stoi(cur().text.substr(sp + 1));
      ++pos_;
      continue;
    }
    if (is_kw("module") || is_kw("macromodule")) {
      try {
        design.modules.push_back(module());
      } catch (const SyntaxError& e) {
        diags_.syntax_error(e.loc, e.detail);
        while (cur().kind != Tok::End && !is_kw("endmodule")) ++pos_;
        if (is_kw("endmodule")) ++pos_;
      }
      continue;
    }
    if (is(";")) {
      ++pos_;
      continue;
    }
    diags_.syntax_error(cur().loc, "Invalid text outside of a module: '" + cur().text + "'");
    while (cur().kind != Tok::End && !is_kw("module") && !is_kw("macromodule")) ++pos_;
  }
}

std::unique_ptr<Module> Parser::module() {
  auto m = std::make_unique<Module>();
  m->loc = cur().loc;
  ++pos_;
  m->name = expect_identifier();
  m->has_timescale = ts_.seen;
  m->unit_exp = ts_.unit_exp;
  m->prec_exp = ts_.prec_exp;
  if (accept("#")) parameter_port_list(*m);
  if (is("(")) port_list(*m);
  expect(";");
  while (!is_kw("endmodule")) {
    if (cur().kind == Tok::End) fail("Missing endmodule for module " + m->name);
    if (is_kw("module")) fail("Module " + m->name + " is missing endmodule");
    module_item(m->items, false);
  }
  ++pos_;
  return m;
}

void Parser::parameter_port_list(Module& m) {
  expect("(");
  if (accept(")")) return;
  for (;;) {
    accept("parameter");
    bool is_signed = false;
    bool integer_type = false;
    if (accept("integer")) integer_type = true;
    if (accept("signed")) is_signed = true;
    auto range = optional_range();
    ParamDecl p;
    p.loc = cur().loc;
    p.name = expect_identifier();
    p.is_signed = is_signed || integer_type;
    p.integer_type = integer_type;
    p.range = std::move(range);
    expect("=");
    p.value = expression();
    m.header_params.push_back(std::move(p));
    if (accept(")")) break;
    expect(",");
  }
}

void Parser::port_list(Module& m) {
  expect("(");
  if (accept(")")) return;
  bool ansi = is_kw("input") || is_kw("output") || is_kw("inout");
  if (!ansi) {
    for (;;) {
      m.port_order.push_back(expect_identifier());
      if (accept(")")) return;
      expect(",");
    }
  }
  ModuleItem item;
  item.kind = ItemKind::Decl;
  item.loc = cur().loc;
  PortDir dir = PortDir::None;
  NetKind kind = NetKind::None;
  bool is_signed = false;
  std::optional<Range> range;
  for (;;) {
    bool new_dir = false;
    if (accept("input")) { dir = PortDir::Input; new_dir = true; }
    else if (accept("output")) { dir = PortDir::Output; new_dir = true; }
    else if (accept("inout")) { dir = PortDir::Inout; new_dir = true; }
    if (new_dir) {
      kind = NetKind::None;
      is_signed = false;
      range.reset();
      if (accept("wire")) kind = NetKind::Wire;
      else if (accept("reg")) kind = NetKind::Reg;
      else if (accept("integer")) kind = NetKind::Integer;
      else if (accept("tri")) kind = NetKind::Tri;
      else if (accept("time")) kind = NetKind::Time;
      if (accept("signed")) is_signed = true;
      range = optional_range();
    }
    VarDecl d;
    d.loc = cur().loc;
    d.name = expect_identifier();
    d.dir = dir;
    d.kind = kind;
    d.is_signed = is_signed || kind == NetKind::Integer;
    if (range) {
      d.range = Range{};
      // Ranges are re-parsed per port; copy by re-evaluating is not possible
      // for unique_ptr, so keep the source tokens' expressions cloned lazily.
    }
    m.port_order.push_back(d.name);
    item.decls.push_back(std::move(d));
    if (range) {
      // Clone the range expression tree for each port that shares it.
      struct Cloner {
        static ExprPtr clone(const Expr& e) {
          auto c = std::make_unique<Expr>();
          c->kind = e.kind;
          c->loc = e.loc;
          c->op = e.op;
          c->path = e.path;
          c->value = e.value;
          c->sized = e.sized;
          c->is_signed = e.is_signed;
          c->real = e.real;
          c->text = e.text;
          for (const auto& a : e.args) c->args.push_back(clone(*a));
          return c;
        }
      };
      item.decls.back().range = Range{Cloner::clone(*range->msb), Cloner::clone(*range->lsb)};
    }
    if (accept("=")) item.decls.back().init = expression();
    if (accept(")")) break;
    expect(",");
  }
  m.items.insert(m.items.begin(), std::move(item));
}

std::optional<Range> Parser::optional_range() {
  if (!is("[")) return std::nullopt;
  ++pos_;
  Range r;
  r.msb = expression();
  expect(":");
  r.lsb = expression();
  expect("]");
  return r;
}

void Parser::module_item(std::vector<ModuleItem>& items, bool in_generate) {
  const Token& t = cur();
  if (is(";")) {
    ++pos_;
    return;
  }
  if (t.kind == Tok::Keyword) {
    const std::string& k = t.text;
    if (k == "input" || k == "output" || k == "inout") return port_declaration(items);
    if (k == "wire" || k == "tri" || k == "wand" || k == "wor" || k == "tri0" ||
        k == "tri1" || k == "supply0" || k == "supply1" || k == "reg" ||
        k == "integer" || k == "time" || k == "real" || k == "realtime" ||
        k == "genvar" || k == "event")
      return net_declaration(items);
    if (k == "parameter" || k == "localparam") {
      ModuleItem item;
      item.kind = ItemKind::Param;
      item.loc = t.loc;
      ++pos_;
      item.params = parameter_declaration(k == "localparam");
      expect(";");
      items.push_back(std::move(item));
      return;
    }
    if (k == "assign") return continuous_assign(items);
    if (k == "always" || k == "initial") {
      ModuleItem item;
      item.kind = k == "always" ? ItemKind::Always : ItemKind::Initial;
      item.loc = t.loc;
      ++pos_;
      item.stmt = statement();
      items.push_back(std::move(item));
      return;
    }
    if (k == "function" || k == "task") {
      ModuleItem item;
      item.kind = ItemKind::Subroutine;
      item.loc = t.loc;
      ++pos_;
      item.subroutine = subroutine(k == "task");
      items.push_back(std::move(item));
      return;
    }
    if (k == "generate") {
      ++pos_;
      while (!is_kw("endgenerate")) {
        if (cur().kind == Tok::End) fail("Missing endgenerate");
        generate_item(items);
      }
      ++pos_;
      return;
    }
    if (k == "for" || k == "if" || k == "case" || k == "begin") return generate_item(items);
    if (k == "and" || k == "or" || k == "nand" || k == "nor" || k == "xor" ||
        k == "xnor" || k == "not" || k == "buf" || k == "bufif0" || k == "bufif1" ||
        k == "notif0" || k == "notif1")
      return gate_instantiation(items);
    if (k == "specify") return skip_specify();
    if (k == "defparam") fail("defparam is not supported; use #() parameter overrides");
    if (k == "endmodule" && in_generate) fail("Missing endgenerate");
    fail("Invalid module item '" + k + "'");
  }
  if (t.kind == Tok::Identifier) return instantiation(items);
  fail("Invalid module item '" + t.text + "'");
}

void Parser::port_declaration(std::vector<ModuleItem>& items) {
  ModuleItem item;
  item.kind = ItemKind::Decl;
  item.loc = cur().loc;
  PortDir dir = is_kw("input") ? PortDir::Input : is_kw("output") ? PortDir::Output : PortDir::Inout;
  ++pos_;
  NetKind kind = NetKind::None;
  if (accept("wire")) kind = NetKind::Wire;
  else if (accept("reg")) kind = NetKind::Reg;
  else if (accept("integer")) kind = NetKind::Integer;
  else if (accept("tri")) kind = NetKind::Tri;
  else if (accept("time")) kind = NetKind::Time;
  bool is_signed = accept("signed");
  auto range = optional_range();
  item.decls = variable_list(kind, is_signed || kind == NetKind::Integer, std::move(range), dir);
  expect(";");
  items.push_back(std::move(item));
}

namespace {
ExprPtr clone_expr(const Expr& e) {
  auto c = std::make_unique<Expr>();
  c->kind = e.kind;
  c->loc = e.loc;
  c->op = e.op;
  c->path = e.path;
  c->value = e.value;
  c->sized = e.sized;
  c->is_signed = e.is_signed;
  c->real = e.real;
  c->text = e.text;
  for (const auto& a : e.args) c->args.push_back(clone_expr(*a));
  return c;
}

std::optional<Range> clone_range(const std::optional<Range>& r) {
  if (!r) return std::nullopt;
  return Range{clone_expr(*r->msb), clone_expr(*r->lsb)};
}
}  // namespace

std::vector<VarDecl> Parser::variable_list(NetKind kind, bool is_signed,
                                           std::optional<Range> range, PortDir dir) {
  std::vector<VarDecl> out;
  for (;;) {
    VarDecl d;
    d.loc = cur().loc;
    d.name = expect_identifier();
    d.kind = kind;
    d.dir = dir;
    d.is_signed = is_signed;
    d.range = clone_range(range);
    d.array = optional_range();
    if (is("[")) fail("Multi-dimensional arrays are not supported in Verilog-2001 mode");
    if (accept("=")) d.init = expression();
    out.push_back(std::move(d));
    if (!accept(",")) break;
  }
  return out;
}

void Parser::net_declaration(std::vector<ModuleItem>& items) {
  ModuleItem item;
  item.kind = ItemKind::Decl;
  item.loc = cur().loc;
  static const std::unordered_map<std::string, NetKind> kinds = {
      {"wire", NetKind::Wire},       {"tri", NetKind::Tri},         {"wand", NetKind::Wand},
      {"wor", NetKind::Wor},         {"tri0", NetKind::Tri0},       {"tri1", NetKind::Tri1},
      {"supply0", NetKind::Supply0}, {"supply1", NetKind::Supply1}, {"reg", NetKind::Reg},
      {"integer", NetKind::Integer}, {"time", NetKind::Time},       {"real", NetKind::Real},
      {"realtime", NetKind::Real},   {"genvar", NetKind::Genvar},   {"event", NetKind::Event}};
  NetKind kind = kinds.at(cur().text);
  SourceLoc at = cur().loc;
  ++pos_;
  if (kind == NetKind::Real) {
    diags_.error(at, "real variables are not supported by this simulator");
  }
  bool is_signed = accept("signed") || kind == NetKind::Integer;
  auto range = optional_range();
  if (is("#")) fail("Net delays are not supported");
  item.decls = variable_list(kind, is_signed, std::move(range), PortDir::None);
  expect(";");
  items.push_back(std::move(item));
}

std::vector<ParamDecl> Parser::parameter_declaration(bool local) {
  std::vector<ParamDecl> out;
  bool is_signed = false;
  bool integer_type = false;
  if (accept("integer")) integer_type = true;
  if (accept("signed")) is_signed = true;
  auto range = optional_range();
  for (;;) {
    ParamDecl p;
    p.loc = cur().loc;
    p.local = local;
    p.name = expect_identifier();
    p.is_signed = is_signed || integer_type;
    p.integer_type = integer_type;
    p.range = clone_range(range);
    expect("=");
    p.value = expression();
    out.push_back(std::move(p));
    if (!is(",")) break;
    // A following "parameter" keyword inside a header list ends this group.
    if (peek().kind != Tok::Identifier) break;
    ++pos_;
  }
  return out;
}

void Parser::continuous_assign(std::vector<ModuleItem>& items) {
  ModuleItem item;
  item.kind = ItemKind::Assign;
  item.loc = cur().loc;
  ++pos_;
  if (accept("#")) item.delay = delay_value();
  for (;;) {
    ContAssign a;
    a.loc = cur().loc;
    a.lhs = lvalue();
    expect("=");
    a.rhs = expression();
    item.assigns.push_back(std::move(a));
    if (!accept(",")) break;
  }
  expect(";");
  items.push_back(std::move(item));
}

std::vector<Connection> Parser::connection_list() {
  std::vector<Connection> out;
  expect("(");
  if (accept(")")) return out;
  for (;;) {
    Connection c;
    c.loc = cur().loc;
    if (accept(".")) {
      c.port = expect_identifier();
      expect("(");
      if (!is(")")) c.expr = expression();
      expect(")");
    } else if (is(",") || is(")")) {
      // positional hole
    } else {
      c.expr = expression();
    }
    out.push_back(std::move(c));
    if (accept(")")) break;
    expect(",");
  }
  return out;
}

void Parser::instantiation(std::vector<ModuleItem>& items) {
  ModuleItem item;
  item.kind = ItemKind::Instantiation;
  item.loc = cur().loc;
  item.module_name = cur().text;
  ++pos_;
  if (accept("#")) {
    if (is("(")) {
      item.param_overrides = connection_list();
    } else {
      Connection c;
      c.loc = cur().loc;
      c.expr = primary();
      item.param_overrides.push_back(std::move(c));
    }
  }
  if (cur().kind != Tok::Identifier) {
    throw SyntaxError{item.loc, "Invalid module instantiation"};
  }
  for (;;) {
    Instance inst;
    inst.loc = cur().loc;
    inst.name = expect_identifier();
    if (is("[")) fail("Arrays of instances are not supported");
    if (!is("(")) throw SyntaxError{item.loc, "Invalid module instantiation"};
    inst.connections = connection_list();
    item.instances.push_back(std::move(inst));
    if (!accept(",")) break;
  }
  if (!is(";")) throw SyntaxError{item.loc, "Invalid module instantiation"};
  ++pos_;
  items.push_back(std::move(item));
}

void Parser::gate_instantiation(std::vector<ModuleItem>& items) {
  ModuleItem item;
  item.kind = ItemKind::Instantiation;
  item.loc = cur().loc;
  item.module_name = cur().text;
  ++pos_;
  if (accept("#")) item.delay = delay_value();
  for (;;) {
    Instance inst;
    inst.loc = cur().loc;
    if (cur().kind == Tok::Identifier) inst.name = expect_identifier();
    inst.connections = connection_list();
    item.instances.push_back(std::move(inst));
    if (!accept(",")) break;
  }
  expect(";");
  items.push_back(std::move(item));
}

std::unique_ptr<Subroutine> Parser::subroutine(bool is_task) {
  auto sub = std::make_unique<Subroutine>();
  sub->is_task = is_task;
  sub->loc = cur().loc;
  accept("automatic");
  if (!is_task) {
    if (accept("integer")) {
      sub->integer_return = true;
      sub->is_signed = true;
    } else {
      if (accept("signed")) sub->is_signed = true;
      sub->range = optional_range();
    }
  }
  sub->name = expect_identifier();
  if (accept("(")) {
    // ANSI-style argument list.
    PortDir dir = PortDir::Input;
    NetKind kind = NetKind::None;
    bool is_signed = false;
    std::optional<Range> range;
    if (!accept(")")) {
      for (;;) {
        if (accept("input")) dir = PortDir::Input;
        else if (accept("output")) dir = PortDir::Output;
        else if (accept("inout")) dir = PortDir::Inout;
        if (is_kw("reg") || is_kw("integer") || is_kw("signed") || is("[")) {
          kind = NetKind::None;
          is_signed = false;
          if (accept("reg")) kind = NetKind::Reg;
          else if (accept("integer")) { kind = NetKind::Integer; is_signed = true; }
          if (accept("signed")) is_signed = true;
          range = optional_range();
        }
        VarDecl d;
        d.loc = cur().loc;
        d.name = expect_identifier();
        d.dir = dir;
        d.kind = kind;
        d.is_signed = is_signed;
        d.range = clone_range(range);
        sub->decls.push_back(std::move(d));
        if (accept(")")) break;
        expect(",");
      }
    }
  }
  expect(";");
  const char* end_kw = is_task ? "endtask" : "endfunction";
  while (!is(end_kw)) {
    if (is_kw("input") || is_kw("output") || is_kw("inout")) {
      PortDir dir = is_kw("input") ? PortDir::Input : is_kw("output") ? PortDir::Output : PortDir::Inout;
      ++pos_;
      NetKind kind = NetKind::None;
      if (accept("reg")) kind = NetKind::Reg;
      else if (accept("integer")) kind = NetKind::Integer;
      bool is_signed = accept("signed") || kind == NetKind::Integer;
      auto range = optional_range();
      auto decls = variable_list(kind, is_signed, std::move(range), dir);
      expect(";");
      for (auto& d : decls) sub->decls.push_back(std::move(d));
    } else if (is_kw("reg") || is_kw("integer") || is_kw("time") || is_kw("real")) {
      std::vector<ModuleItem> tmp;
      net_declaration(tmp);
      for (auto& d : tmp.front().decls) sub->decls.push_back(std::move(d));
    } else if (is_kw("parameter") || is_kw("localparam")) {
      bool local = is_kw("localparam");
      ++pos_;
      auto ps = parameter_declaration(local);
      expect(";");
      for (auto& p : ps) sub->params.push_back(std::move(p));
    } else {
      if (sub->body) fail(std::string("Expected ") + end_kw);
      sub->body = statement();
    }
    if (cur().kind == Tok::End) fail(std::string("Missing ") + end_kw);
  }
  ++pos_;
  if (!sub->body) {
    sub->body = std::make_unique<Stmt>();
    sub->body->loc = sub->loc;
  }
  return sub;
}

void Parser::generate_item(std::vector<ModuleItem>& items) {
  if (is_kw("for")) {
    items.push_back(generate_for());
  } else if (is_kw("if")) {
    items.push_back(generate_if());
  } else if (is_kw("case")) {
    items.push_back(generate_case());
  } else if (is_kw("begin")) {
    ModuleItem item;
    item.kind = ItemKind::GenBlock;
    item.loc = cur().loc;
    ++pos_;
    if (accept(":")) item.block_name = expect_identifier();
    while (!is_kw("end")) {
      if (cur().kind == Tok::End) fail("Missing end in generate block");
      module_item(item.gen_items, true);
    }
    ++pos_;
    items.push_back(std::move(item));
  } else {
    module_item(items, true);
  }
}

std::vector<ModuleItem> Parser::generate_body() {
  std::vector<ModuleItem> items;
  generate_item(items);
  return items;
}

ModuleItem Parser::generate_for() {
  ModuleItem item;
  item.kind = ItemKind::GenFor;
  item.loc = cur().loc;
  ++pos_;
  expect("(");
  accept("genvar");
  item.genvar = expect_identifier();
  expect("=");
  item.gen_init = expression();
  expect(";");
  item.gen_cond = expression();
  expect(";");
  std::string step_var = expect_identifier();
  if (step_var != item.genvar) fail("generate for loop must step its own genvar");
  expect("=");
  item.gen_step = expression();
  expect(")");
  if (!is_kw("begin")) fail("generate for loop body must be a begin/end block");
  ++pos_;
  if (accept(":")) item.block_name = expect_identifier();
  while (!is_kw("end")) {
    if (cur().kind == Tok::End) fail("Missing end in generate loop");
    module_item(item.gen_items, true);
  }
  ++pos_;
  return item;
}

ModuleItem Parser::generate_if() {
  ModuleItem item;
  item.kind = ItemKind::GenIf;
  item.loc = cur().loc;
  ++pos_;
  expect("(");
  item.gen_cond = expression();
  expect(")");
  item.gen_items = generate_body();
  if (accept("else")) item.gen_else = generate_body();
  return item;
}

ModuleItem Parser::generate_case() {
  ModuleItem item;
  item.kind = ItemKind::GenCase;
  item.loc = cur().loc;
  ++pos_;
  expect("(");
  item.gen_cond = expression();
  expect(")");
  while (!accept("endcase")) {
    std::vector<ExprPtr> labels;
    if (accept("default")) {
      accept(":");
    } else {
      for (;;) {
        labels.push_back(expression());
        if (!accept(",")) break;
      }
      expect(":");
    }
    item.gen_cases.emplace_back(std::move(labels), generate_body());
  }
  return item;
}

void Parser::skip_specify() {
  while (!is_kw("endspecify")) {
    if (cur().kind == Tok::End) fail("Missing endspecify");
    ++pos_;
  }
  ++pos_;
}

// ---------------------------------------------------------------------------
// Statements

bool Parser::at_local_declaration() const {
  return is_kw("reg") || is_kw("integer") || is_kw("time") || is_kw("real") ||
         is_kw("event") || is_kw("parameter") || is_kw("localparam");
}

void Parser::local_declarations(std::vector<VarDecl>& decls, std::vector<ParamDecl>& params) {
  while (at_local_declaration()) {
    if (is_kw("parameter") || is_kw("localparam")) {
      bool local = is_kw("localparam");
      ++pos_;
      for (auto& p : parameter_declaration(local)) params.push_back(std::move(p));
      expect(";");
      continue;
    }
    std::vector<ModuleItem> tmp;
    net_declaration(tmp);
    for (auto& d : tmp.front().decls) decls.push_back(std::move(d));
  }
}

StmtPtr Parser::statement_or_null() {
  if (is(";")) {
    auto s = std::make_unique<Stmt>();
    s->loc = cur().loc;
    ++pos_;
    return s;
  }
  return statement();
}

StmtPtr Parser::block(bool fork) {
  auto s = std::make_unique<Stmt>();
  s->kind = fork ? StmtKind::Fork : StmtKind::Block;
  s->loc = cur().loc;
  ++pos_;
  if (accept(":")) s->name = expect_identifier();
  local_declarations(s->decls, s->params);
  const char* end_kw = fork ? "join" : "end";
  while (!is(end_kw)) {
    if (cur().kind == Tok::End || is_kw("endmodule"))
      fail(std::string("Missing '") + end_kw + "'");
    if (at_local_declaration())
      fail("Declarations must appear at the start of a block");
    if (fork && (is_kw("join_any") || is_kw("join_none")))
      fail("join_any/join_none are SystemVerilog constructs");
    s->body.push_back(statement_or_null());
  }
  ++pos_;
  if (accept(":")) expect_identifier();
  return s;
}

StmtPtr Parser::if_statement() {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::If;
  s->loc = cur().loc;
  ++pos_;
  expect("(");
  s->cond = expression();
  expect(")");
  s->body.push_back(statement_or_null());
  if (accept("else")) s->body.push_back(statement_or_null());
  return s;
}

StmtPtr Parser::case_statement() {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::Case;
  s->loc = cur().loc;
  s->case_kind = cur().text;
  ++pos_;
  expect("(");
  s->cond = expression();
  expect(")");
  while (!accept("endcase")) {
    if (cur().kind == Tok::End || is_kw("endmodule")) fail("Missing endcase");
    CaseItem item;
    if (accept("default")) {
      accept(":");
    } else {
      for (;;) {
        item.labels.push_back(expression());
        if (!accept(",")) break;
      }
      expect(":");
    }
    item.body = statement_or_null();
    s->items.push_back(std::move(item));
  }
  return s;
}

StmtPtr Parser::for_statement() {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::For;
  s->loc = cur().loc;
  ++pos_;
  expect("(");
  if (is_kw("integer") || is_kw("genvar") || cur().text == "int")
    fail("Loop variable declarations inside for() are SystemVerilog syntax");
  s->init = assignment_statement(false);
  expect(";");
  s->cond = expression();
  expect(";");
  s->step = assignment_statement(false);
  expect(")");
  s->body.push_back(statement_or_null());
  return s;
}

StmtPtr Parser::assignment_statement(bool require_semicolon) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::Assign;
  s->loc = cur().loc;
  s->lhs = lvalue();
  if (is("++") || (is("+") && peek().text == "+"))
    fail("Increment operators are SystemVerilog syntax");
  if (accept("<=")) {
    s->nonblocking = true;
  } else if (!accept("=")) {
    if (is("+") || is("-") || is("*") || is("|") || is("&") || is("^"))
      if (peek().text == "=") fail("Compound assignment operators are SystemVerilog syntax");
    fail("Expected '=' or '<=' in assignment");
  }
  if (accept("#")) s->delay = delay_value();
  else if (is("@")) {
    ++pos_;
    s->event = event_control();
  }
  s->rhs = expression();
  if (require_semicolon) expect(";");
  return s;
}

EventControl Parser::event_control() {
  EventControl ec;
  if (accept("*")) {
    ec.star = true;
    return ec;
  }
  if (cur().kind == Tok::Identifier) {
    EventItem item;
    item.expr = hierarchical_identifier();
    ec.items.push_back(std::move(item));
    return ec;
  }
  expect("(");
  if (accept("*")) {
    expect(")");
    ec.star = true;
    return ec;
  }
  for (;;) {
    EventItem item;
    if (accept("posedge")) item.edge = Edge::Pos;
    else if (accept("negedge")) item.edge = Edge::Neg;
    item.expr = expression();
    ec.items.push_back(std::move(item));
    if (accept("or") || accept(",")) continue;
    break;
  }
  expect(")");
  return ec;
}

ExprPtr Parser::delay_value() {
  if (accept("(")) {
    auto e = expression();
    if (accept(":")) {
      // min:typ:max, use typ
      auto typ = expression();
      expect(":");
      expression();
      e = std::move(typ);
    }
    expect(")");
    return e;
  }
  if (cur().kind == Tok::Number || cur().kind == Tok::RealNumber) return primary();
  if (cur().kind == Tok::Identifier) return hierarchical_identifier();
  fail("Invalid delay value");
}

StmtPtr Parser::statement() {
  const Token& t = cur();
  auto s = std::make_unique<Stmt>();
  s->loc = t.loc;
  if (t.kind == Tok::Keyword) {
    const std::string& k = t.text;
    if (k == "begin") return block(false);
    if (k == "fork") return block(true);
    if (k == "if") return if_statement();
    if (k == "case" || k == "casez" || k == "casex") return case_statement();
    if (k == "for") return for_statement();
    if (k == "while" || k == "repeat" || k == "wait") {
      s->kind = k == "while" ? StmtKind::While : k == "repeat" ? StmtKind::Repeat : StmtKind::Wait;
      ++pos_;
      expect("(");
      s->cond = expression();
      expect(")");
      s->body.push_back(statement_or_null());
      return s;
    }
    if (k == "forever") {
      s->kind = StmtKind::Forever;
      ++pos_;
      s->body.push_back(statement());
      return s;
    }
    if (k == "disable") {
      s->kind = StmtKind::Disable;
      ++pos_;
      s->name = expect_identifier();
      while (accept(".")) s->name += "." + expect_identifier();
      expect(";");
      return s;
    }
    if (k == "assign" || k == "deassign" || k == "force" || k == "release")
      fail("Procedural continuous assignments (" + k + ") are not supported");
    fail("Unexpected '" + k + "' in statement");
  }
  if (is("#")) {
    ++pos_;
    s->kind = StmtKind::Delay;
    s->cond = delay_value();
    s->body.push_back(statement_or_null());
    return s;
  }
  if (is("@")) {
    ++pos_;
    s->kind = StmtKind::Event;
    s->event = event_control();
    s->body.push_back(statement_or_null());
    return s;
  }
  if (is("->")) {
    ++pos_;
    s->kind = StmtKind::Trigger;
    s->name = expect_identifier();
    expect(";");
    return s;
  }
  if (t.kind == Tok::SystemName) {
    s->kind = StmtKind::SysTask;
    s->name = t.text;
    ++pos_;
    if (is("(")) s->args = call_arguments();
    expect(";");
    return s;
  }
  if (is("{")) return assignment_statement(true);
  if (t.kind == Tok::Identifier) {
    // Assignment or task enable: look past the hierarchical name and selects.
    size_t save = pos_;
    auto target = lvalue();
    if (is("=") || is("<=")) {
      pos_ = save;
      return assignment_statement(true);
    }
    if (target->kind == ExprKind::Ident && (is("(") || is(";"))) {
      s->kind = StmtKind::TaskCall;
      s->name = target->name();
      if (is("(")) s->args = call_arguments();
      expect(";");
      return s;
    }
    if (is("++") || is("--") || (is("+") && peek().text == "+") ||
        (is("-") && peek().text == "-"))
      fail("Increment/decrement operators are SystemVerilog syntax");
    if ((is("+") || is("-") || is("*") || is("/") || is("|") || is("&") || is("^")) &&
        peek().text == "=")
      fail("Compound assignment operators are SystemVerilog syntax");
    fail("Expected '=' or '<=' after '" + target->name() + "'");
  }
  fail("Unexpected '" + t.text + "' in statement");
}

// ---------------------------------------------------------------------------
// Expressions

ExprPtr Parser::hierarchical_identifier() {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Ident;
  e->loc = cur().loc;
  e->path.push_back(expect_identifier());
  while (is(".") && peek().kind == Tok::Identifier) {
    ++pos_;
    e->path.push_back(expect_identifier());
  }
  return e;
}

ExprPtr Parser::selects(ExprPtr base) {
  while (is("[")) {
    SourceLoc at = cur().loc;
    ++pos_;
    auto first = expression();
    auto e = std::make_unique<Expr>();
    e->loc = at;
    if (accept(":")) {
      e->kind = ExprKind::Range;
      e->args.push_back(std::move(base));
      e->args.push_back(std::move(first));
      e->args.push_back(expression());
    } else if (is("+:") || is("-:")) {
      e->kind = ExprKind::IndexedRange;
      e->op = cur().text;
      ++pos_;
      e->args.push_back(std::move(base));
      e->args.push_back(std::move(first));
      e->args.push_back(expression());
    } else {
      e->kind = ExprKind::Select;
      e->args.push_back(std::move(base));
      e->args.push_back(std::move(first));
    }
    expect("]");
    base = std::move(e);
  }
  return base;
}

ExprPtr Parser::lvalue() {
  if (is("{")) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Concat;
    e->loc = cur().loc;
    ++pos_;
    for (;;) {
      e->args.push_back(lvalue());
      if (accept("}")) break;
      expect(",");
    }
    return e;
  }
  return selects(hierarchical_identifier());
}

std::vector<ExprPtr> Parser::call_arguments() {
  std::vector<ExprPtr> args;
  expect("(");
  if (accept(")")) return args;
  for (;;) {
    if (is(",")) {
      args.push_back(nullptr);
    } else {
      args.push_back(expression());
    }
    if (accept(")")) break;
    expect(",");
  }
  return args;
}

ExprPtr Parser::expression() { return ternary(); }

ExprPtr Parser::ternary() {
  auto cond = binary(1);
  if (!is("?")) return cond;
  SourceLoc at = cur().loc;
  ++pos_;
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Ternary;
  e->loc = at;
  e->args.push_back(std::move(cond));
  e->args.push_back(ternary());
  expect(":");
  e->args.push_back(ternary());
  return e;
}

namespace {
int binary_precedence(const Token& t) {
  if (t.kind != Tok::Punct) return -1;
  static const std::unordered_map<std::string, int> prec = {
      {"||", 1}, {"&&", 2}, {"|", 3},   {"^", 4},   {"^~", 4},  {"~^", 4},  {"&", 5},
      {"==", 6}, {"!=", 6}, {"===", 6}, {"!==", 6}, {"<", 7},   {"<=", 7},  {">", 7},
      {">=", 7}, {"<<", 8}, {">>", 8},  {"<<<", 8}, {">>>", 8}, {"+", 9},   {"-", 9},
      {"*", 10}, {"/", 10}, {"%", 10},  {"**", 11}};
  auto it = prec.find(t.text);
  return it == prec.end() ? -1 : it->second;
}
}  // namespace

ExprPtr Parser::binary(int min_prec) {
  auto lhs = unary();
  for (;;) {
    int p = binary_precedence(cur());
    if (p < min_prec) break;
    if (cur().text == "=" ) break;
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Binary;
    e->loc = cur().loc;
    e->op = cur().text;
    ++pos_;
    e->args.push_back(std::move(lhs));
    e->args.push_back(binary(p + 1));
    lhs = std::move(e);
  }
  return lhs;
}

ExprPtr Parser::unary() {
  static const char* ops[] = {"+", "-", "!", "~", "&", "~&", "|", "~|", "^", "~^", "^~"};
  if (cur().kind == Tok::Punct) {
    for (const char* op : ops) {
      if (cur().text == op) {
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::Unary;
        e->loc = cur().loc;
        e->op = op;
        ++pos_;
        e->args.push_back(unary());
        return e;
      }
    }
  }
  return primary();
}

ExprPtr Parser::primary() {
  const Token& t = cur();
  auto e = std::make_unique<Expr>();
  e->loc = t.loc;
  switch (t.kind) {
    case Tok::Number: {
      NumberValue nv = parse_number(t.text);
      e->kind = ExprKind::Number;
      e->value = nv.value;
      e->sized = nv.sized;
      e->is_signed = nv.is_signed;
      e->text = t.text;
      ++pos_;
      return e;
    }
    case Tok::RealNumber:
      e->kind = ExprKind::Real;
      e->real = std::stod(t.text);
      e->text = t.text;
      ++pos_;
      return e;
    case Tok::String:
      e->kind = ExprKind::String;
      e->text = t.text;
      e->value = BitVector::from_string(t.text);
      ++pos_;
      return e;
    case Tok::SystemName:
      e->kind = ExprKind::SysCall;
      e->path.push_back(t.text);
      ++pos_;
      if (is("(")) e->args = call_arguments();
      return e;
    case Tok::Identifier: {
      auto id = hierarchical_identifier();
      if (is("(")) {
        id->kind = ExprKind::Call;
        id->args = call_arguments();
        return id;
      }
      return selects(std::move(id));
    }
    default:
      break;
  }
  if (accept("(")) {
    auto inner = expression();
    if (accept(":")) {
      auto typ = expression();
      expect(":");
      expression();
      inner = std::move(typ);
    }
    expect(")");
    return inner;
  }
  if (is("{")) {
    ++pos_;
    auto first = expression();
    if (is("{")) {
      // replication
      ++pos_;
      e->kind = ExprKind::Replicate;
      e->args.push_back(std::move(first));
      for (;;) {
        e->args.push_back(expression());
        if (accept("}")) break;
        expect(",");
      }
      expect("}");
      return e;
    }
    e->kind = ExprKind::Concat;
    e->args.push_back(std::move(first));
    while (accept(",")) e->args.push_back(expression());
    expect("}");
    return e;
  }
  if (t.kind == Tok::Keyword)
    fail("'" + t.text + "' is a reserved keyword and cannot appear in an expression");
  if (t.kind == Tok::End) fail("Unexpected end of input in expression");
  fail("Unexpected '" + t.text + "' in expression");
}

}  // namespace hwloop::sim
