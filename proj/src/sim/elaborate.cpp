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

#include "elaborate.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace hwloop::sim {

using namespace ast;

namespace {

bool is_gate(const std::string& name) {
  static const std::unordered_set<std::string> gates = {
      "and", "or", "nand", "nor", "xor", "xnor", "not", "buf",
      "bufif0", "bufif1", "notif0", "notif1"};
  return gates.count(name) != 0;
}

bool is_var_kind(NetKind k) {
  return k == NetKind::Reg || k == NetKind::Integer || k == NetKind::Time ||
         k == NetKind::Real;
}

std::string kind_word(const Symbol& s) {
  if (!s.sig) return "parameter";
  if (s.is_var) return s.sig->kind == NetKind::Integer ? "integer" : "reg";
  return "wire";
}

CExprPtr make_const(const BitVector& v, bool is_signed) {
  auto c = std::make_unique<CExpr>();
  c->op = EOp::Const;
  c->value = v;
  c->width = v.width();
  c->is_signed = is_signed;
  c->base_msb = static_cast<int32_t>(v.width()) - 1;
  c->base_lsb = 0;
  return c;
}

CExprPtr make_sig(Signal* s) {
  auto c = std::make_unique<CExpr>();
  c->op = EOp::Sig;
  c->sig = s;
  c->width = s->width;
  c->is_signed = s->is_signed;
  c->base_msb = s->msb;
  c->base_lsb = s->lsb;
  return c;
}

}  // namespace

class Elaborator {
 public:
  Elaborator(const Design& design, Model& model, Machine& machine, DiagnosticSink& diags)
      : design_(design), m_(model), mach_(machine), diags_(diags) {
    for (const auto& mod : design.modules) {
      if (modules_.count(mod->name)) {
        diags_.error(mod->loc, "Module " + mod->name + " was already declared here: " +
                                   modules_[mod->name]->loc.file_name() + ":" +
                                   std::to_string(modules_[mod->name]->loc.line));
        continue;
      }
      modules_[mod->name] = mod.get();
    }
  }

  bool run(const std::vector<std::string>& tops);

 private:
  struct AliasCand {
    Signal* sig = nullptr;
    bool parent_var = false;
  };
  struct Deferred {
    Scope* scope;
    const ModuleItem* item;
  };
  struct ModuleCtx {
    std::vector<Deferred> items;
    std::unordered_map<std::string, AliasCand> aliases;
    std::set<std::string> aliased;
  };
  struct BindCtx {
    bool const_only = false;
    std::vector<Signal*>* reads = nullptr;
  };
  using Overrides = std::unordered_map<std::string, std::pair<BitVector, bool>>;

  Scope* new_scope(Scope* parent, const std::string& name, bool is_module, const Module* mod);
  void instantiate(const Module& mod, Scope* scope, const Overrides& overrides,
                   ModuleCtx& ctx, int depth);
  void process_items(const std::vector<ModuleItem>& items, Scope* scope, ModuleCtx& ctx,
                     const Overrides* overrides);
  void declare(const VarDecl& d, Scope* scope, ModuleCtx* ctx);
  void declare_param(const ParamDecl& p, Scope* scope, const Overrides* overrides);
  void declare_subprogram(const Subroutine& sub, Scope* scope);
  void elaborate_instances(const ModuleItem& item, Scope* scope, int depth);
  void generate(const ModuleItem& item, Scope* scope, ModuleCtx& ctx);
  void gen_scope_items(const std::vector<ModuleItem>& items, Scope* parent,
                       const std::string& fallback_name, ModuleCtx& ctx);

  Symbol* lookup(Scope* scope, const std::string& name);
  Symbol* lookup_path(Scope* scope, const std::vector<std::string>& path, Scope** found_in);
  Scope* find_block(Scope* scope, const std::string& name);

  CExprPtr bind(const Expr& e, Scope* scope, BindCtx& bc);
  CExprPtr bind_error(const Expr& e);
  CExprPtr bind_select_base(const Expr& e, Scope* scope, BindCtx& bc);
  bool bind_lvalue(const Expr& e, Scope* scope, CLValue& out, bool continuous,
                   std::vector<Signal*>* reads);
  bool const_value(const Expr& e, Scope* scope, BitVector& out, bool& is_signed);
  bool const_int(const Expr& e, Scope* scope, int64_t& out);
  bool range_of(const std::optional<Range>& r, Scope* scope, int32_t& msb, int32_t& lsb);

  void make_driver(const CLValue& lv, CExprPtr rhs, std::vector<Signal*> reads, Scope* scope,
                   const Expr* delay, const SourceLoc& loc);
  bool static_targets(const CLValue& lv, std::vector<Target>& out, const SourceLoc& loc);
  void continuous_assign(const ContAssign& a, const Expr* delay, Scope* scope);
  void gate(const ModuleItem& item, const Instance& inst, Scope* scope);

  // Procedural code generation.
  void compile_process(const ModuleItem& item, Scope* scope);
  void compile_subprogram(Subprogram* sub);
  void stmt(const Stmt& s, Code& code, Scope* scope);
  size_t emit(Code& code, Instr in) {
    code.instrs.push_back(std::move(in));
    return code.instrs.size() - 1;
  }
  void wait_items(const EventControl& ec, const Stmt* body, Instr& in, Scope* scope,
                  Code& code);
  std::vector<std::unique_ptr<std::vector<Signal*>>> star_collectors_;

  std::string loc_text(const SourceLoc& l) const {
    return l.file_name() + ":" + std::to_string(l.line);
  }

  const Design& design_;
  Model& m_;
  Machine& mach_;
  DiagnosticSink& diags_;
  std::unordered_map<std::string, const Module*> modules_;
  std::vector<std::function<void()>> phase2_;
  std::map<std::string, int> missing_;
  std::vector<const Module*> used_modules_;
};

Scope* Elaborator::new_scope(Scope* parent, const std::string& name, bool is_module,
                             const Module* mod) {
  auto s = std::make_unique<Scope>();
  s->name = name;
  s->parent = parent;
  s->path = parent ? parent->path + "." + name : name;
  s->is_module = is_module;
  s->module = mod ? mod : (parent ? parent->module : nullptr);
  if (is_module && mod) {
    s->unit_exp = mod->has_timescale ? mod->unit_exp : 0;
    s->prec_exp = mod->has_timescale ? mod->prec_exp : 0;
  } else if (parent) {
    s->unit_exp = parent->unit_exp;
    s->prec_exp = parent->prec_exp;
  }
  Scope* raw = s.get();
  if (parent) parent->children[name] = raw;
  m_.scopes.push_back(std::move(s));
  return raw;
}

Symbol* Elaborator::lookup(Scope* scope, const std::string& name) {
  for (Scope* s = scope; s; s = s->parent) {
    auto it = s->symbols.find(name);
    if (it != s->symbols.end()) return &it->second;
    if (s->is_module) break;
  }
  return nullptr;
}

Symbol* Elaborator::lookup_path(Scope* scope, const std::vector<std::string>& path,
                                Scope** found_in) {
  if (path.size() == 1) {
    for (Scope* s = scope; s; s = s->parent) {
      auto it = s->symbols.find(path[0]);
      if (it != s->symbols.end()) {
        if (found_in) *found_in = s;
        return &it->second;
      }
      if (s->is_module) break;
    }
    return nullptr;
  }
  Scope* start = nullptr;
  for (Scope* s = scope; s && !start; s = s->parent) {
    auto it = s->children.find(path[0]);
    if (it != s->children.end()) start = it->second;
    else if (s->name == path[0] && s->is_module) start = s;
  }
  if (!start) {
    for (Scope* r : m_.roots)
      if (r->name == path[0]) start = r;
  }
  if (!start) return nullptr;
  for (size_t i = 1; i + 1 < path.size(); ++i) {
    auto it = start->children.find(path[i]);
    if (it == start->children.end()) return nullptr;
    start = it->second;
  }
  auto it = start->symbols.find(path.back());
  if (it == start->symbols.end()) return nullptr;
  if (found_in) *found_in = start;
  return &it->second;
}

Scope* Elaborator::find_block(Scope* scope, const std::string& name) {
  for (Scope* s = scope; s; s = s->parent) {
    if (s->name == name && !s->is_module) return s;
    auto it = s->children.find(name);
    if (it != s->children.end()) return it->second;
    if (s->is_module) break;
  }
  return nullptr;
}

bool Elaborator::run(const std::vector<std::string>& tops) {
  std::vector<const Module*> roots;
  if (!tops.empty()) {
    for (const auto& t : tops) {
      auto it = modules_.find(t);
      if (it == modules_.end()) {
        diags_.error(SourceLoc{}, "Unable to find the root module \"" + t + "\" in the Verilog source.");
        continue;
      }
      roots.push_back(it->second);
    }
  } else {
    std::unordered_set<std::string> instantiated;
    std::function<void(const std::vector<ModuleItem>&)> scan = [&](const std::vector<ModuleItem>& items) {
      for (const auto& it : items) {
        if (it.kind == ItemKind::Instantiation) instantiated.insert(it.module_name);
        scan(it.gen_items);
        scan(it.gen_else);
        for (const auto& c : it.gen_cases) scan(c.second);
      }
    };
    for (const auto& mod : design_.modules) scan(mod->items);
    for (const auto& mod : design_.modules)
      if (!instantiated.count(mod->name) && modules_[mod->name] == mod.get())
        roots.push_back(mod.get());
  }
  if (diags_.error_count() > 0) return false;

  std::vector<std::pair<const Module*, Scope*>> made;
  for (const Module* r : roots) {
    Scope* s = new_scope(nullptr, r->name, true, r);
    m_.roots.push_back(s);
    made.emplace_back(r, s);
  }
  for (auto& [mod, scope] : made) {
    ModuleCtx ctx;
    instantiate(*mod, scope, {}, ctx, 0);
  }
  for (size_t i = 0; i < phase2_.size(); ++i) phase2_[i]();

  // Simulation precision is the finest precision of any instantiated module.
  bool any_ts = false, any_plain = false;
  int prec = 0;
  std::vector<const Module*> plain;
  for (const Module* mod : used_modules_) {
    if (mod->has_timescale) {
      any_ts = true;
      prec = std::min(prec, mod->prec_exp);
    } else {
      any_plain = true;
      plain.push_back(mod);
    }
  }
  m_.global_prec = prec;
  if (any_ts && any_plain) {
    std::string msg =
        "Some design elements have no explicit time unit and/or\n"
        "       : time precision. This may cause confusing timing results.\n"
        "       : Affected design elements are:";
    for (const Module* mod : plain)
      msg += "\n       :   -- module " + mod->name + " declared here: " + loc_text(mod->loc);
    diags_.warning(SourceLoc{}, msg);
  }
  return diags_.error_count() == 0;
}

void Elaborator::instantiate(const Module& mod, Scope* scope, const Overrides& overrides,
                             ModuleCtx& ctx, int depth) {
  if (std::find(used_modules_.begin(), used_modules_.end(), &mod) == used_modules_.end())
    used_modules_.push_back(&mod);
  for (const auto& p : mod.header_params) declare_param(p, scope, &overrides);
  for (const auto& [name, _] : overrides) {
    bool known = std::any_of(mod.header_params.begin(), mod.header_params.end(),
                             [&](const ParamDecl& p) { return p.name == name; });
    for (const auto& it : mod.items)
      if (it.kind == ItemKind::Param)
        for (const auto& p : it.params)
          if (p.name == name && !p.local) known = true;
    if (!known)
      diags_.warning(mod.loc, "parameter " + name + " not found in " + scope->path + ".");
  }
  process_items(mod.items, scope, ctx, &overrides);
  for (const auto& name : mod.port_order) {
    auto it = scope->symbols.find(name);
    if (it == scope->symbols.end() || !it->second.is_port)
      diags_.error(mod.loc, "Port " + name + " (" + name + ") of module " + mod.name +
                                " is not declared within module.");
  }
  for (const auto& d : ctx.items)
    if (d.item->kind == ItemKind::Instantiation) elaborate_instances(*d.item, d.scope, depth);
  for (const auto& d : ctx.items) {
    const ModuleItem* item = d.item;
    Scope* s = d.scope;
    switch (item->kind) {
      case ItemKind::Assign:
        phase2_.push_back([this, item, s] {
          for (const auto& a : item->assigns) continuous_assign(a, item->delay.get(), s);
        });
        break;
      case ItemKind::Always:
      case ItemKind::Initial:
        phase2_.push_back([this, item, s] { compile_process(*item, s); });
        break;
      default:
        break;
    }
  }
}

void Elaborator::process_items(const std::vector<ModuleItem>& items, Scope* scope,
                               ModuleCtx& ctx, const Overrides* overrides) {
  for (const auto& item : items) {
    switch (item.kind) {
      case ItemKind::Param:
        for (const auto& p : item.params) declare_param(p, scope, p.local ? nullptr : overrides);
        break;
      case ItemKind::Decl:
        for (const auto& d : item.decls) declare(d, scope, &ctx);
        break;
      case ItemKind::Subroutine:
        declare_subprogram(*item.subroutine, scope);
        break;
      case ItemKind::GenFor:
      case ItemKind::GenIf:
      case ItemKind::GenCase:
      case ItemKind::GenBlock:
        generate(item, scope, ctx);
        break;
      default:
        ctx.items.push_back({scope, &item});
        break;
    }
  }
}

bool Elaborator::range_of(const std::optional<Range>& r, Scope* scope, int32_t& msb,
                          int32_t& lsb) {
  if (!r) {
    msb = lsb = 0;
    return true;
  }
  int64_t a = 0, b = 0;
  if (!const_int(*r->msb, scope, a) || !const_int(*r->lsb, scope, b)) return false;
  msb = static_cast<int32_t>(a);
  lsb = static_cast<int32_t>(b);
  return true;
}

void Elaborator::declare(const VarDecl& d, Scope* scope, ModuleCtx* ctx) {
  if (d.kind == NetKind::Genvar) return;
  int32_t msb = 0, lsb = 0;
  bool is_signed = d.is_signed;
  if (d.kind == NetKind::Integer) {
    msb = 31;
    is_signed = true;
  } else if (d.kind == NetKind::Time) {
    msb = 63;
  } else if (d.kind == NetKind::Real) {
    msb = 63;
    is_signed = true;
  } else if (!range_of(d.range, scope, msb, lsb)) {
    return;
  }
  uint32_t width = static_cast<uint32_t>(std::abs(static_cast<int64_t>(msb) - lsb) + 1);
  bool var = is_var_kind(d.kind);

  auto existing = scope->symbols.find(d.name);
  if (existing != scope->symbols.end()) {
    Symbol& sym = existing->second;
    bool merge = sym.kind == Symbol::Kind::Signal &&
                 ((sym.is_port && d.dir == PortDir::None) || (!sym.is_port && d.dir != PortDir::None));
    if (!merge) {
      diags_.error(d.loc, "'" + d.name + "' has already been declared in this scope.");
      return;
    }
    bool aliased = ctx && ctx->aliased.count(d.name);
    if (d.dir != PortDir::None) {
      sym.is_port = true;
      sym.dir = d.dir;
    }
    if (var) sym.is_var = true;
    Signal* s = sym.sig;
    if (!aliased && (d.range || d.kind == NetKind::Integer) && s->width != width) {
      s->width = width;
      s->msb = msb;
      s->lsb = lsb;
      s->value = BitVector(width, s->is_net && !var ? Bit::Z : Bit::X);
    }
    if (d.is_signed) s->is_signed = true;
    if (var) {
      s->kind = d.kind;
      if (s->drivers.empty()) {
        s->is_net = false;
        if (!aliased) s->value = BitVector(s->width, Bit::X);
        else if (s->value.all_z()) s->value = BitVector(s->width, Bit::X);
      }
    }
    return;
  }

  Symbol sym;
  sym.kind = Symbol::Kind::Signal;
  sym.is_var = var;
  sym.is_port = d.dir != PortDir::None;
  sym.dir = d.dir;
  sym.loc = d.loc;

  if (ctx && sym.is_port && !d.array) {
    auto it = ctx->aliases.find(d.name);
    if (it != ctx->aliases.end()) {
      Signal* p = it->second.sig;
      bool ok = p->width == width && p->msb == msb && p->lsb == lsb && !p->is_array &&
                p->is_signed == is_signed;
      if (d.dir == PortDir::Output && it->second.parent_var) ok = false;
      if (d.dir == PortDir::Inout && it->second.parent_var) ok = false;
      if (ok) {
        sym.sig = p;
        if (var && p->drivers.empty()) {
          p->is_net = false;
          if (p->value.all_z()) p->value = BitVector(width, Bit::X);
        }
        ctx->aliased.insert(d.name);
        scope->symbols[d.name] = std::move(sym);
        return;
      }
    }
  }

  auto s = std::make_unique<Signal>();
  s->path = scope->path + "." + d.name;
  s->width = width;
  s->msb = msb;
  s->lsb = lsb;
  s->is_signed = is_signed;
  s->kind = d.kind == NetKind::None ? NetKind::Wire : d.kind;
  s->is_net = !var && d.kind != NetKind::Event;
  if (d.kind == NetKind::Event) {
    s->width = 32;
    s->msb = 31;
    s->value = BitVector(32, Bit::Zero);
  } else if (d.kind == NetKind::Supply0 || d.kind == NetKind::Supply1) {
    s->value = BitVector(width, d.kind == NetKind::Supply1 ? Bit::One : Bit::Zero);
  } else {
    s->value = BitVector(width, s->is_net ? Bit::Z : Bit::X);
  }
  if (d.array) {
    int32_t a = 0, b = 0;
    if (!range_of(d.array, scope, a, b)) return;
    s->is_array = true;
    s->arr_first = a;
    s->arr_last = b;
    int64_t n = std::abs(static_cast<int64_t>(a) - b) + 1;
    if (n > (1 << 24)) {
      diags_.error(d.loc, "Array " + d.name + " is too large.");
      return;
    }
    s->words.assign(static_cast<size_t>(n), BitVector(width, Bit::X));
  }
  sym.sig = s.get();
  Signal* raw = s.get();
  m_.signals.push_back(std::move(s));
  scope->symbols[d.name] = std::move(sym);

  if (d.init) {
    const Expr* init = d.init.get();
    SourceLoc loc = d.loc;
    std::string name = d.name;
    if (raw->is_net) {
      phase2_.push_back([this, raw, init, scope, loc] {
        CLValue lv;
        lv.sel = CLValue::Sel::Whole;
        lv.sig = raw;
        lv.width = raw->width;
        std::vector<Signal*> reads;
        BindCtx bc;
        bc.reads = &reads;
        auto rhs = bind(*init, scope, bc);
        make_driver(lv, std::move(rhs), std::move(reads), scope, nullptr, loc);
      });
    } else {
      phase2_.push_back([this, raw, init, scope] {
        BitVector v;
        bool sgn = false;
        if (!const_value(*init, scope, v, sgn)) return;
        m_.initial_values.emplace_back(raw, v.resized(raw->width, sgn));
      });
    }
  }
}

void Elaborator::declare_param(const ParamDecl& p, Scope* scope, const Overrides* overrides) {
  BitVector value;
  bool is_signed = false;
  bool overridden = false;
  if (overrides) {
    auto it = overrides->find(p.name);
    if (it != overrides->end()) {
      value = it->second.first;
      is_signed = it->second.second;
      overridden = true;
    }
  }
  if (!overridden && !const_value(*p.value, scope, value, is_signed)) {
    value = BitVector(32, Bit::X);
  }
  int32_t msb = static_cast<int32_t>(value.width()) - 1, lsb = 0;
  if (p.integer_type) {
    value = value.resized(32, is_signed);
    is_signed = true;
    msb = 31;
  } else if (p.range) {
    if (range_of(p.range, scope, msb, lsb)) {
      uint32_t w = static_cast<uint32_t>(std::abs(static_cast<int64_t>(msb) - lsb) + 1);
      value = value.resized(w, is_signed);
    }
    is_signed = p.is_signed;
  } else if (p.is_signed) {
    is_signed = true;
  }
  Symbol sym;
  sym.kind = Symbol::Kind::Param;
  sym.value = value;
  sym.is_signed = is_signed;
  sym.msb = msb;
  sym.lsb = lsb;
  sym.loc = p.loc;
  if (scope->symbols.count(p.name)) {
    diags_.error(p.loc, "'" + p.name + "' has already been declared in this scope.");
    return;
  }
  scope->symbols[p.name] = std::move(sym);
}

void Elaborator::declare_subprogram(const Subroutine& sub, Scope* scope) {
  if (scope->symbols.count(sub.name)) {
    diags_.error(sub.loc, "'" + sub.name + "' has already been declared in this scope.");
    return;
  }
  auto prog = std::make_unique<Subprogram>();
  prog->name = sub.name;
  prog->is_task = sub.is_task;
  prog->decl = &sub;
  Scope* fs = new_scope(scope, sub.name, false, nullptr);
  prog->scope = fs;
  for (const auto& p : sub.params) declare_param(p, fs, nullptr);
  if (!sub.is_task) {
    VarDecl ret;
    ret.name = sub.name;
    ret.loc = sub.loc;
    ret.kind = sub.integer_return ? NetKind::Integer : NetKind::Reg;
    ret.is_signed = sub.is_signed;
    if (sub.range) {
      int32_t msb = 0, lsb = 0;
      range_of(sub.range, fs, msb, lsb);
      declare(ret, fs, nullptr);
      Signal* s = fs->symbols[sub.name].sig;
      if (s) {
        s->msb = msb;
        s->lsb = lsb;
        s->width = static_cast<uint32_t>(std::abs(static_cast<int64_t>(msb) - lsb) + 1);
        s->value = BitVector(s->width, Bit::X);
      }
    } else {
      declare(ret, fs, nullptr);
    }
    prog->ret = fs->symbols[sub.name].sig;
  }
  for (const auto& d : sub.decls) {
    VarDecl copy;
    copy.name = d.name;
    copy.loc = d.loc;
    copy.dir = PortDir::None;
    copy.kind = d.kind == NetKind::None ? NetKind::Reg : d.kind;
    copy.is_signed = d.is_signed;
    // The range is applied below so the declaration can stay range-free.
    int32_t msb = 0, lsb = 0;
    if (d.range && !range_of(d.range, fs, msb, lsb)) continue;
    declare(copy, fs, nullptr);
    auto it = fs->symbols.find(d.name);
    if (it == fs->symbols.end() || !it->second.sig) continue;
    Signal* s = it->second.sig;
    if (d.range) {
      s->msb = msb;
      s->lsb = lsb;
      s->width = static_cast<uint32_t>(std::abs(static_cast<int64_t>(msb) - lsb) + 1);
      s->value = BitVector(s->width, Bit::X);
    }
    if (d.array) {
      int32_t a = 0, b = 0;
      if (range_of(d.array, fs, a, b)) {
        s->is_array = true;
        s->arr_first = a;
        s->arr_last = b;
        s->words.assign(static_cast<size_t>(std::abs(static_cast<int64_t>(a) - b) + 1),
                        BitVector(s->width, Bit::X));
      }
    }
    if (d.dir != PortDir::None) {
      prog->args.push_back(s);
      prog->dirs.push_back(d.dir);
    }
  }
  Symbol sym;
  sym.kind = Symbol::Kind::Subprogram;
  sym.loc = sub.loc;
  Subprogram* raw = prog.get();
  sym.sub = raw;
  scope->symbols[sub.name] = std::move(sym);
  m_.subprograms.push_back(std::move(prog));
  phase2_.push_back([this, raw] { compile_subprogram(raw); });
}

void Elaborator::generate(const ModuleItem& item, Scope* scope, ModuleCtx& ctx) {
  Scope* mod_scope = scope;
  while (!mod_scope->is_module) mod_scope = mod_scope->parent;
  auto next_name = [&]() { return "genblk" + std::to_string(++mod_scope->genblk_count); };
  switch (item.kind) {
    case ItemKind::GenBlock:
      gen_scope_items(item.gen_items, scope, item.block_name.empty() ? next_name() : item.block_name, ctx);
      return;
    case ItemKind::GenIf: {
      std::string fallback = next_name();
      BitVector v;
      bool sgn = false;
      if (!const_value(*item.gen_cond, scope, v, sgn)) return;
      const auto& chosen = truth(v) == Bit::One ? item.gen_items : item.gen_else;
      if (chosen.size() == 1 && chosen[0].kind == ItemKind::GenBlock) {
        gen_scope_items(chosen[0].gen_items, scope,
                        chosen[0].block_name.empty() ? fallback : chosen[0].block_name, ctx);
      } else if (chosen.size() == 1 && (chosen[0].kind == ItemKind::GenIf ||
                                        chosen[0].kind == ItemKind::GenCase)) {
        generate(chosen[0], scope, ctx);
      } else {
        gen_scope_items(chosen, scope, fallback, ctx);
      }
      return;
    }
    case ItemKind::GenCase: {
      std::string fallback = next_name();
      BitVector v;
      bool sgn = false;
      if (!const_value(*item.gen_cond, scope, v, sgn)) return;
      const std::vector<ModuleItem>* chosen = nullptr;
      const std::vector<ModuleItem>* fallback_items = nullptr;
      for (const auto& [labels, body] : item.gen_cases) {
        if (labels.empty()) {
          fallback_items = &body;
          continue;
        }
        for (const auto& l : labels) {
          BitVector lv;
          bool ls = false;
          if (!const_value(*l, scope, lv, ls)) continue;
          uint32_t w = std::max(lv.width(), v.width());
          if (case_eq(lv.resized(w, ls && sgn), v.resized(w, ls && sgn))) chosen = &body;
          if (chosen) break;
        }
        if (chosen) break;
      }
      if (!chosen) chosen = fallback_items;
      if (!chosen) return;
      if (chosen->size() == 1 && (*chosen)[0].kind == ItemKind::GenBlock)
        gen_scope_items((*chosen)[0].gen_items, scope,
                        (*chosen)[0].block_name.empty() ? fallback : (*chosen)[0].block_name, ctx);
      else
        gen_scope_items(*chosen, scope, fallback, ctx);
      return;
    }
    case ItemKind::GenFor: {
      std::string base = item.block_name.empty() ? next_name() : item.block_name;
      BitVector v;
      bool sgn = false;
      if (!const_value(*item.gen_init, scope, v, sgn)) return;
      int64_t i = v.resized(32, sgn).to_int64();
      for (int guard = 0; guard < 65536; ++guard) {
        Scope* iter = new_scope(scope, base + "[" + std::to_string(i) + "]", false, nullptr);
        Symbol gv;
        gv.kind = Symbol::Kind::Param;
        gv.value = BitVector::from_int(32, i);
        gv.is_signed = true;
        gv.msb = 31;
        gv.lsb = 0;
        gv.loc = item.loc;
        iter->symbols[item.genvar] = gv;
        BitVector c;
        bool cs = false;
        if (!const_value(*item.gen_cond, iter, c, cs)) return;
        if (truth(c) != Bit::One) {
          scope->children.erase(iter->name);
          return;
        }
        process_items(item.gen_items, iter, ctx, nullptr);
        BitVector n;
        bool ns = false;
        if (!const_value(*item.gen_step, iter, n, ns)) return;
        i = n.resized(32, ns).to_int64();
      }
      diags_.error(item.loc, "generate loop does not terminate.");
      return;
    }
    default:
      return;
  }
}

void Elaborator::gen_scope_items(const std::vector<ModuleItem>& items, Scope* parent,
                                 const std::string& name, ModuleCtx& ctx) {
  if (items.empty()) return;
  Scope* s = new_scope(parent, name, false, nullptr);
  process_items(items, s, ctx, nullptr);
}

void Elaborator::elaborate_instances(const ModuleItem& item, Scope* scope, int depth) {
  if (is_gate(item.module_name)) {
    for (const auto& inst : item.instances) {
      const Instance* ip = &inst;
      const ModuleItem* it = &item;
      phase2_.push_back([this, it, ip, scope] { gate(*it, *ip, scope); });
    }
    return;
  }
  auto mit = modules_.find(item.module_name);
  if (mit == modules_.end()) {
    diags_.error(item.loc, "Unknown module type: " + item.module_name);
    ++missing_[item.module_name];
    return;
  }
  const Module& mod = *mit->second;
  if (depth > 64) {
    diags_.error(item.loc, "Module " + mod.name + " instantiates itself recursively.");
    return;
  }

  Overrides overrides;
  if (!item.param_overrides.empty()) {
    std::vector<std::string> order;
    for (const auto& p : mod.header_params) order.push_back(p.name);
    for (const auto& it : mod.items)
      if (it.kind == ItemKind::Param)
        for (const auto& p : it.params)
          if (!p.local) order.push_back(p.name);
    for (size_t i = 0; i < item.param_overrides.size(); ++i) {
      const auto& c = item.param_overrides[i];
      if (!c.expr) continue;
      std::string name = c.port;
      if (name.empty()) {
        if (i >= order.size()) {
          diags_.error(c.loc, "Too many parameter overrides for module " + mod.name + ".");
          continue;
        }
        name = order[i];
      }
      BitVector v;
      bool sgn = false;
      if (const_value(*c.expr, scope, v, sgn)) overrides[name] = {v, sgn};
    }
  }

  for (const auto& inst : item.instances) {
    if (scope->children.count(inst.name) || scope->symbols.count(inst.name)) {
      diags_.error(inst.loc, "Instance/Scope name " + inst.name + " already used in this context.");
      continue;
    }
    // Map connections to port names.
    std::vector<std::pair<std::string, const Connection*>> conns;
    bool named = !inst.connections.empty() && !inst.connections[0].port.empty();
    if (named) {
      for (const auto& c : inst.connections) {
        if (std::find(mod.port_order.begin(), mod.port_order.end(), c.port) == mod.port_order.end()) {
          diags_.error(c.loc, "port ``" + c.port + "'' is not a port of " + inst.name + ".");
          continue;
        }
        conns.emplace_back(c.port, &c);
      }
    } else {
      bool single_empty = inst.connections.size() == 1 && !inst.connections[0].expr &&
                          mod.port_order.empty();
      if (!single_empty && inst.connections.size() > mod.port_order.size()) {
        diags_.error(inst.loc, "Wrong number of ports. Expecting " +
                                   std::to_string(mod.port_order.size()) + ", got " +
                                   std::to_string(inst.connections.size()) + ".");
        continue;
      }
      for (size_t i = 0; i < inst.connections.size() && i < mod.port_order.size(); ++i)
        conns.emplace_back(mod.port_order[i], &inst.connections[i]);
    }

    ModuleCtx child_ctx;
    for (auto& [port, c] : conns) {
      if (!c->expr) continue;
      if (c->expr->kind != ExprKind::Ident || c->expr->path.size() != 1) continue;
      Symbol* sym = lookup(scope, c->expr->path[0]);
      if (!sym) {
        // Implicit net.
        auto s = std::make_unique<Signal>();
        s->path = scope->path + "." + c->expr->path[0];
        s->value = BitVector(1, Bit::Z);
        Symbol ns;
        ns.kind = Symbol::Kind::Signal;
        ns.sig = s.get();
        ns.loc = c->loc;
        scope->symbols[c->expr->path[0]] = ns;
        m_.signals.push_back(std::move(s));
        sym = &scope->symbols[c->expr->path[0]];
      }
      if (sym->kind != Symbol::Kind::Signal || sym->sig->is_array) continue;
      child_ctx.aliases[port] = AliasCand{sym->sig, sym->is_var};
    }

    Scope* child = new_scope(scope, inst.name, true, &mod);
    instantiate(mod, child, overrides, child_ctx, depth + 1);

    for (size_t pi = 0; pi < conns.size(); ++pi) {
      const std::string port = conns[pi].first;
      const Connection* c = conns[pi].second;
      if (!c->expr || child_ctx.aliased.count(port)) continue;
      size_t port_index = static_cast<size_t>(
          std::find(mod.port_order.begin(), mod.port_order.end(), port) - mod.port_order.begin());
      const Module* modp = &mod;
      phase2_.push_back([this, port, c, child, scope, modp, port_index] {
        auto it = child->symbols.find(port);
        if (it == child->symbols.end() || !it->second.is_port || !it->second.sig) return;
        Symbol& ps = it->second;
        Signal* ps_sig = ps.sig;
        std::string port_desc = "Port " + std::to_string(port_index + 1) + " (" + port + ") of " + modp->name;
        if (ps.dir == PortDir::Input) {
          std::vector<Signal*> reads;
          BindCtx bc;
          bc.reads = &reads;
          auto rhs = bind(*c->expr, scope, bc);
          if (rhs->width != ps_sig->width && !(c->expr->kind == ExprKind::Number && !c->expr->sized)) {
            bool prune = rhs->width > ps_sig->width;
            uint32_t diff = prune ? rhs->width - ps_sig->width : ps_sig->width - rhs->width;
            diags_.warning(c->loc, port_desc + " expects " + std::to_string(ps_sig->width) +
                                       " bits, got " + std::to_string(rhs->width) + ".\n" +
                                       loc_text(c->loc) + ":        : " +
                                       (prune ? "Pruning " + std::to_string(diff) + " high bits of the expression."
                                              : "Padding " + std::to_string(diff) + " high bits of the port."));
          }
          CLValue lv;
          lv.sig = ps_sig;
          lv.width = ps_sig->width;
          make_driver(lv, std::move(rhs), std::move(reads), scope, nullptr, c->loc);
          return;
        }
        CLValue lv;
        // Output and unaliased inout ports drive the parent expression.
        if (!bind_lvalue(*c->expr, scope, lv, true, nullptr)) {
          diags_.error(c->loc, "Output port expression must support continuous assignment.");
          diags_.note(c->loc, "     : " + port_desc + " is connected to " + c->expr->name());
          return;
        }
        if (lv.width != ps_sig->width) {
          bool prune = ps_sig->width > lv.width;
          uint32_t diff = prune ? ps_sig->width - lv.width : lv.width - ps_sig->width;
          diags_.warning(c->loc, port_desc + " expects " + std::to_string(ps_sig->width) +
                                     " bits, got " + std::to_string(lv.width) + ".\n" +
                                     loc_text(c->loc) + ":        : " +
                                     (prune ? "Pruning " + std::to_string(diff) + " high bits of the port."
                                            : "Padding " + std::to_string(diff) + " high bits of the expression."));
        }
        std::vector<Signal*> reads{ps_sig};
        make_driver(lv, make_sig(ps_sig), std::move(reads), scope, nullptr, c->loc);
      });
    }
  }
}

// ---------------------------------------------------------------------------
// Expression binding

CExprPtr Elaborator::bind_error(const Expr& e) {
  (void)e;
  return make_const(BitVector(1, Bit::X), false);
}

bool Elaborator::const_value(const Expr& e, Scope* scope, BitVector& out, bool& is_signed) {
  BindCtx bc;
  bc.const_only = true;
  size_t before = diags_.error_count();
  auto c = bind(e, scope, bc);
  if (diags_.error_count() != before) return false;
  out = mach_.eval_self(*c);
  is_signed = c->is_signed;
  return true;
}

bool Elaborator::const_int(const Expr& e, Scope* scope, int64_t& out) {
  BitVector v;
  bool sgn = false;
  if (!const_value(e, scope, v, sgn)) return false;
  if (!v.is_known()) {
    diags_.error(e.loc, "Constant expression evaluates to an unknown value.");
    return false;
  }
  out = v.width() >= 64 ? v.to_int64() : (sgn ? v.resized(64, true).to_int64()
                                              : static_cast<int64_t>(v.to_uint64()));
  return true;
}

namespace {
EOp binary_op(const std::string& op) {
  static const std::unordered_map<std::string, EOp> ops = {
      {"+", EOp::Add},    {"-", EOp::Sub},      {"*", EOp::Mul},     {"/", EOp::Div},
      {"%", EOp::Mod},    {"**", EOp::Pow},     {"&", EOp::And},     {"|", EOp::Or},
      {"^", EOp::Xor},    {"^~", EOp::Xnor},    {"~^", EOp::Xnor},   {"<<", EOp::Shl},
      {">>", EOp::Shr},   {"<<<", EOp::AShl},   {">>>", EOp::AShr},  {"<", EOp::Lt},
      {"<=", EOp::Le},    {">", EOp::Gt},       {">=", EOp::Ge},     {"==", EOp::Eq},
      {"!=", EOp::Ne},    {"===", EOp::CaseEq}, {"!==", EOp::CaseNe}, {"&&", EOp::LogAnd},
      {"||", EOp::LogOr}};
  return ops.at(op);
}

EOp unary_op(const std::string& op) {
  static const std::unordered_map<std::string, EOp> ops = {
      {"+", EOp::Plus}, {"-", EOp::Neg},   {"~", EOp::BitNot}, {"!", EOp::LogNot},
      {"&", EOp::RAnd}, {"~&", EOp::RNand}, {"|", EOp::ROr},   {"~|", EOp::RNor},
      {"^", EOp::RXor}, {"~^", EOp::RXnor}, {"^~", EOp::RXnor}};
  return ops.at(op);
}

const std::unordered_set<std::string>& known_system_functions() {
  static const std::unordered_set<std::string> names = {
      "$time", "$stime", "$realtime", "$random", "$urandom", "$urandom_range", "$signed",
      "$unsigned", "$clog2", "$fopen", "$feof", "$test$plusargs", "$value$plusargs",
      "$bits", "$rtoi", "$itor", "$ceil", "$floor"};
  return names;
}
}  // namespace

CExprPtr Elaborator::bind_select_base(const Expr& e, Scope* scope, BindCtx& bc) {
  return bind(e, scope, bc);
}

CExprPtr Elaborator::bind(const Expr& e, Scope* scope, BindCtx& bc) {
  auto c = std::make_unique<CExpr>();
  c->scope = scope;
  switch (e.kind) {
    case ExprKind::Number: {
      auto k = make_const(e.value, e.is_signed);
      k->scope = scope;
      return k;
    }
    case ExprKind::Real: {
      double r = e.real;
      auto k = make_const(BitVector::from_int(32, static_cast<int64_t>(r < 0 ? r - 0.5 : r + 0.5)), true);
      k->is_real = true;
      k->real = r;
      return k;
    }
    case ExprKind::String: {
      BitVector v = e.text.empty() ? BitVector(8, Bit::Zero) : e.value;
      return make_const(v, false);
    }
    case ExprKind::Ident: {
      Symbol* sym = lookup_path(scope, e.path, nullptr);
      if (!sym) {
        if (bc.const_only)
          diags_.error(e.loc, "Unable to bind parameter `" + e.name() + "' in `" + scope->path + "'");
        else
          diags_.error(e.loc, "Unable to bind wire/reg/memory `" + e.name() + "' in `" + scope->path + "'");
        return bind_error(e);
      }
      if (sym->kind == Symbol::Kind::Param) {
        auto k = make_const(sym->value, sym->is_signed);
        k->base_msb = sym->msb;
        k->base_lsb = sym->lsb;
        return k;
      }
      if (sym->kind == Symbol::Kind::Subprogram) {
        diags_.error(e.loc, "Unable to bind wire/reg/memory `" + e.name() + "' in `" + scope->path + "'");
        return bind_error(e);
      }
      if (bc.const_only) {
        diags_.error(e.loc, "Unable to bind parameter `" + e.name() + "' in `" + scope->path + "'");
        return bind_error(e);
      }
      if (sym->sig->is_array) {
        diags_.error(e.loc, "Array " + e.name() + " needs an array index here.");
        return bind_error(e);
      }
      if (bc.reads) bc.reads->push_back(sym->sig);
      return make_sig(sym->sig);
    }
    case ExprKind::Select: {
      const Expr& base = *e.args[0];
      if (base.kind == ExprKind::Ident) {
        Symbol* sym = lookup_path(scope, base.path, nullptr);
        if (sym && sym->kind == Symbol::Kind::Signal && sym->sig->is_array) {
          if (bc.const_only) {
            diags_.error(e.loc, "Unable to bind parameter `" + base.name() + "' in `" + scope->path + "'");
            return bind_error(e);
          }
          if (bc.reads) bc.reads->push_back(sym->sig);
          c->op = EOp::Word;
          c->sig = sym->sig;
          c->width = sym->sig->width;
          c->is_signed = sym->sig->is_signed;
          c->base_msb = sym->sig->msb;
          c->base_lsb = sym->sig->lsb;
          c->a.push_back(bind(*e.args[1], scope, bc));
          return c;
        }
      }
      auto b = bind(base, scope, bc);
      c->op = EOp::BitSel;
      c->width = 1;
      c->base_msb = b->base_msb;
      c->base_lsb = b->base_lsb;
      if (b->op != EOp::Sig && b->op != EOp::Word && b->op != EOp::Const) {
        c->base_msb = static_cast<int32_t>(b->width) - 1;
        c->base_lsb = 0;
      }
      c->a.push_back(std::move(b));
      c->a.push_back(bind(*e.args[1], scope, bc));
      return c;
    }
    case ExprKind::Range: {
      auto b = bind(*e.args[0], scope, bc);
      int64_t hi = 0, lo = 0;
      if (!const_int(*e.args[1], scope, hi) || !const_int(*e.args[2], scope, lo)) return bind_error(e);
      int32_t bm = b->base_msb, bl = b->base_lsb;
      if (b->op != EOp::Sig && b->op != EOp::Word && b->op != EOp::Const) {
        bm = static_cast<int32_t>(b->width) - 1;
        bl = 0;
      }
      auto pos = [&](int64_t i) { return bm >= bl ? i - bl : bl - i; };
      int64_t p1 = pos(hi), p2 = pos(lo);
      c->op = EOp::PartSel;
      c->const_pos = std::min(p1, p2);
      c->width = static_cast<uint32_t>(std::abs(p1 - p2) + 1);
      c->base_msb = static_cast<int32_t>(c->width) - 1;
      c->base_lsb = 0;
      c->a.push_back(std::move(b));
      return c;
    }
    case ExprKind::IndexedRange: {
      auto b = bind(*e.args[0], scope, bc);
      int64_t w = 0;
      if (!const_int(*e.args[2], scope, w) || w <= 0) {
        diags_.error(e.loc, "Indexed part select width must be a positive constant.");
        return bind_error(e);
      }
      c->op = e.op == "+:" ? EOp::IdxUp : EOp::IdxDown;
      c->width = static_cast<uint32_t>(w);
      c->base_msb = b->base_msb;
      c->base_lsb = b->base_lsb;
      if (b->op != EOp::Sig && b->op != EOp::Word && b->op != EOp::Const) {
        c->base_msb = static_cast<int32_t>(b->width) - 1;
        c->base_lsb = 0;
      }
      c->a.push_back(std::move(b));
      c->a.push_back(bind(*e.args[1], scope, bc));
      return c;
    }
    case ExprKind::Unary: {
      c->op = unary_op(e.op);
      auto a = bind(*e.args[0], scope, bc);
      switch (c->op) {
        case EOp::Plus:
        case EOp::Neg:
        case EOp::BitNot:
          c->width = a->width;
          c->is_signed = a->is_signed;
          break;
        default:
          c->width = 1;
          c->is_signed = false;
          break;
      }
      c->a.push_back(std::move(a));
      return c;
    }
    case ExprKind::Binary: {
      c->op = binary_op(e.op);
      auto l = bind(*e.args[0], scope, bc);
      auto r = bind(*e.args[1], scope, bc);
      switch (c->op) {
        case EOp::Add: case EOp::Sub: case EOp::Mul: case EOp::Div: case EOp::Mod:
        case EOp::And: case EOp::Or: case EOp::Xor: case EOp::Xnor:
          c->width = std::max(l->width, r->width);
          c->is_signed = l->is_signed && r->is_signed;
          break;
        case EOp::Pow: case EOp::Shl: case EOp::Shr: case EOp::AShl: case EOp::AShr:
          c->width = l->width;
          c->is_signed = l->is_signed;
          break;
        default:
          c->width = 1;
          c->is_signed = false;
          break;
      }
      c->a.push_back(std::move(l));
      c->a.push_back(std::move(r));
      return c;
    }
    case ExprKind::Ternary: {
      c->op = EOp::Ternary;
      auto k = bind(*e.args[0], scope, bc);
      auto t = bind(*e.args[1], scope, bc);
      auto f = bind(*e.args[2], scope, bc);
      c->width = std::max(t->width, f->width);
      c->is_signed = t->is_signed && f->is_signed;
      c->a.push_back(std::move(k));
      c->a.push_back(std::move(t));
      c->a.push_back(std::move(f));
      return c;
    }
    case ExprKind::Concat: {
      c->op = EOp::Concat;
      uint32_t w = 0;
      for (const auto& part : e.args) {
        if (part->kind == ExprKind::Number && !part->sized) {
          diags_.error(part->loc, "Concatenation operand \"" + part->text + "\" has indefinite width.");
        }
        auto p = bind(*part, scope, bc);
        w += p->width;
        c->a.push_back(std::move(p));
      }
      c->width = std::max<uint32_t>(w, 1);
      c->base_msb = static_cast<int32_t>(c->width) - 1;
      return c;
    }
    case ExprKind::Replicate: {
      int64_t n = 0;
      if (!const_int(*e.args[0], scope, n) || n < 0) {
        diags_.error(e.loc, "Replication count must be a non-negative constant.");
        return bind_error(e);
      }
      c->op = EOp::Repl;
      c->repl = static_cast<uint32_t>(n);
      uint32_t w = 0;
      for (size_t i = 1; i < e.args.size(); ++i) {
        auto p = bind(*e.args[i], scope, bc);
        w += p->width;
        c->a.push_back(std::move(p));
      }
      c->width = std::max<uint32_t>(w * c->repl, 1);
      if (c->repl == 0) return make_const(BitVector(1, Bit::Zero), false);
      c->base_msb = static_cast<int32_t>(c->width) - 1;
      return c;
    }
    case ExprKind::Call: {
      Symbol* sym = lookup_path(scope, e.path, nullptr);
      if (!sym || sym->kind != Symbol::Kind::Subprogram || sym->sub->is_task) {
        diags_.error(e.loc, "No function named `" + e.name() + "' found in this context (" + scope->path + ").");
        return bind_error(e);
      }
      if (bc.const_only) {
        diags_.error(e.loc, "Constant function calls are not supported (" + e.name() + ").");
        return bind_error(e);
      }
      Subprogram* fn = sym->sub;
      if (e.args.size() != fn->args.size()) {
        diags_.error(e.loc, "Function " + scope->path + "." + e.name() + " expects " +
                                std::to_string(fn->args.size()) + " arguments, you passed " +
                                std::to_string(e.args.size()) + ".");
        return bind_error(e);
      }
      c->op = EOp::Call;
      c->fn = fn;
      c->width = fn->ret->width;
      c->is_signed = fn->ret->is_signed;
      c->base_msb = fn->ret->msb;
      c->base_lsb = fn->ret->lsb;
      for (const auto& a : e.args) {
        if (!a) {
          c->a.push_back(make_const(BitVector(1, Bit::X), false));
          continue;
        }
        c->a.push_back(bind(*a, scope, bc));
      }
      return c;
    }
    case ExprKind::SysCall: {
      const std::string& name = e.path[0];
      if (!known_system_functions().count(name)) {
        diags_.error(e.loc, "System function " + name + " is not defined by any module.");
        return bind_error(e);
      }
      c->op = EOp::SysFunc;
      c->name = name;
      for (const auto& a : e.args) {
        if (!a) {
          c->a.push_back(make_const(BitVector(1, Bit::X), false));
          continue;
        }
        if (name == "$fopen" && a->kind == ExprKind::String) {
          c->a.push_back(make_const(a->value, false));
          continue;
        }
        c->a.push_back(bind(*a, scope, bc));
      }
      if (name == "$time" || name == "$realtime") {
        c->width = 64;
      } else if (name == "$stime" || name == "$urandom" || name == "$urandom_range" ||
                 name == "$fopen") {
        c->width = 32;
      } else if (name == "$random" || name == "$clog2" || name == "$feof" ||
                 name == "$test$plusargs" || name == "$value$plusargs" || name == "$bits" ||
                 name == "$rtoi") {
        c->width = 32;
        c->is_signed = true;
      } else if (name == "$signed" || name == "$unsigned") {
        if (c->a.size() != 1) {
          diags_.error(e.loc, name + " takes exactly one argument.");
          return bind_error(e);
        }
        c->width = c->a[0]->width;
        c->is_signed = name == "$signed";
      } else {
        c->width = 32;
        c->is_signed = true;
      }
      if (name == "$bits" && !c->a.empty()) {
        return make_const(BitVector::from_int(32, c->a[0]->width), true);
      }
      c->base_msb = static_cast<int32_t>(c->width) - 1;
      return c;
    }
  }
  return bind_error(e);
}

bool Elaborator::bind_lvalue(const Expr& e, Scope* scope, CLValue& out, bool continuous,
                             std::vector<Signal*>* reads) {
  BindCtx bc;
  bc.reads = reads;
  if (e.kind == ExprKind::Concat) {
    out.sel = CLValue::Sel::Concat;
    out.width = 0;
    for (const auto& p : e.args) {
      CLValue part;
      if (!bind_lvalue(*p, scope, part, continuous, reads)) return false;
      out.width += part.width;
      out.parts.push_back(std::move(part));
    }
    return true;
  }
  const Expr* base = &e;
  while (base->kind == ExprKind::Select || base->kind == ExprKind::Range ||
         base->kind == ExprKind::IndexedRange)
    base = base->args[0].get();
  if (base->kind != ExprKind::Ident) {
    diags_.error(e.loc, "Invalid l-value expression.");
    return false;
  }
  Symbol* sym = lookup_path(scope, base->path, nullptr);
  if (!sym && continuous && e.kind == ExprKind::Ident && e.path.size() == 1) {
    // Implicit net on the left of a continuous assignment.
    auto s = std::make_unique<Signal>();
    s->path = scope->path + "." + e.path[0];
    s->value = BitVector(1, Bit::Z);
    Symbol ns;
    ns.kind = Symbol::Kind::Signal;
    ns.sig = s.get();
    ns.loc = e.loc;
    scope->symbols[e.path[0]] = ns;
    m_.signals.push_back(std::move(s));
    sym = &scope->symbols[e.path[0]];
  }
  if (!sym) {
    diags_.error(e.loc, "Unable to bind wire/reg/memory `" + base->name() + "' in `" + scope->path + "'");
    return false;
  }
  if (sym->kind != Symbol::Kind::Signal) {
    diags_.error(e.loc, base->name() + " is not a valid l-value in " + scope->path + ".");
    return false;
  }
  if (continuous && sym->is_var) {
    if (reads == nullptr && !continuous) return false;
    diags_.error(e.loc, kind_word(*sym) + " " + base->name() +
                            "; cannot be driven by primitives or continuous assignment.");
    return false;
  }
  if (!continuous && !sym->is_var) {
    diags_.error(e.loc, base->name() + " is not a valid l-value in " + scope->path + ".");
    diags_.note(sym->loc, "     : " + base->name() + " is declared here as " + kind_word(*sym) + ".");
    return false;
  }
  Signal* sig = sym->sig;
  out.sig = sig;
  const Expr* sel = &e;
  if (sig->is_array) {
    // The innermost select picks the word.
    std::vector<const Expr*> chain;
    for (const Expr* p = &e; p != base; p = p->args[0].get()) chain.push_back(p);
    if (chain.empty() || chain.back()->kind != ExprKind::Select) {
      diags_.error(e.loc, "Array " + base->name() + " needs an array index here.");
      return false;
    }
    out.word = bind(*chain.back()->args[1], scope, bc);
    chain.pop_back();
    if (chain.empty()) {
      out.sel = CLValue::Sel::Whole;
      out.width = sig->width;
      return true;
    }
    sel = chain.back();
    if (chain.size() > 1) {
      diags_.error(e.loc, "Nested selects on a memory word are not supported.");
      return false;
    }
  } else if (sel != base && sel->args[0].get() != base) {
    diags_.error(e.loc, "Nested selects are not supported in an l-value.");
    return false;
  }
  if (sel == base) {
    out.sel = CLValue::Sel::Whole;
    out.width = sig->width;
    return true;
  }
  switch (sel->kind) {
    case ExprKind::Select:
      out.sel = CLValue::Sel::Bit;
      out.index = bind(*sel->args[1], scope, bc);
      out.width = 1;
      return true;
    case ExprKind::Range: {
      int64_t hi = 0, lo = 0;
      if (!const_int(*sel->args[1], scope, hi) || !const_int(*sel->args[2], scope, lo)) return false;
      int64_t p1 = sig->bit_pos(hi), p2 = sig->bit_pos(lo);
      out.sel = CLValue::Sel::Part;
      out.const_pos = std::min(p1, p2);
      out.width = static_cast<uint32_t>(std::abs(p1 - p2) + 1);
      return true;
    }
    case ExprKind::IndexedRange: {
      int64_t w = 0;
      if (!const_int(*sel->args[2], scope, w) || w <= 0) return false;
      out.sel = sel->op == "+:" ? CLValue::Sel::IdxUp : CLValue::Sel::IdxDown;
      out.index = bind(*sel->args[1], scope, bc);
      out.width = static_cast<uint32_t>(w);
      return true;
    }
    default:
      diags_.error(e.loc, "Invalid l-value expression.");
      return false;
  }
}

bool Elaborator::static_targets(const CLValue& lv, std::vector<Target>& out, const SourceLoc& loc) {
  if (lv.sel == CLValue::Sel::Concat) {
    for (const auto& p : lv.parts)
      if (!static_targets(p, out, loc)) return false;
    return true;
  }
  Target t;
  t.sig = lv.sig;
  t.width = lv.width;
  if (lv.word) {
    diags_.error(loc, "Continuous assignment to a memory word is not supported.");
    return false;
  }
  auto const_index = [&](const CExpr& e, int64_t& v) {
    BitVector b = mach_.eval_self(e);
    if (!b.is_known() || e.op != EOp::Const) {
      diags_.error(loc, "Continuous assignment l-value index must be constant.");
      return false;
    }
    v = e.is_signed ? b.resized(64, true).to_int64() : static_cast<int64_t>(b.to_uint64());
    return true;
  };
  switch (lv.sel) {
    case CLValue::Sel::Whole:
      t.lo = 0;
      break;
    case CLValue::Sel::Part:
      t.lo = lv.const_pos;
      break;
    case CLValue::Sel::Bit: {
      int64_t i = 0;
      if (!const_index(*lv.index, i)) return false;
      t.lo = lv.sig->bit_pos(i);
      break;
    }
    case CLValue::Sel::IdxUp:
    case CLValue::Sel::IdxDown: {
      int64_t i = 0;
      if (!const_index(*lv.index, i)) return false;
      int64_t other = lv.sel == CLValue::Sel::IdxUp ? i + lv.width - 1 : i - lv.width + 1;
      t.lo = std::min(lv.sig->bit_pos(i), lv.sig->bit_pos(other));
      break;
    }
    default:
      break;
  }
  out.push_back(t);
  return true;
}

void Elaborator::make_driver(const CLValue& lv, CExprPtr rhs, std::vector<Signal*> reads,
                             Scope* scope, const Expr* delay, const SourceLoc& loc) {
  auto d = std::make_unique<Driver>();
  if (!static_targets(lv, d->targets, loc)) return;
  d->rhs = std::move(rhs);
  d->scope = scope;
  d->width = lv.width;
  d->loc = loc;
  if (delay) {
    BindCtx bc;
    d->delay = bind(*delay, scope, bc);
  }
  for (size_t i = 0; i < d->targets.size(); ++i) {
    d->contrib.push_back(BitVector(d->targets[i].width, Bit::Z));
    d->targets[i].sig->drivers.emplace_back(d.get(), i);
  }
  std::sort(reads.begin(), reads.end());
  reads.erase(std::unique(reads.begin(), reads.end()), reads.end());
  for (Signal* s : reads) s->fanout.push_back(d.get());
  m_.drivers.push_back(std::move(d));
}

void Elaborator::continuous_assign(const ContAssign& a, const Expr* delay, Scope* scope) {
  CLValue lv;
  if (!bind_lvalue(*a.lhs, scope, lv, true, nullptr)) return;
  std::vector<Signal*> reads;
  BindCtx bc;
  bc.reads = &reads;
  auto rhs = bind(*a.rhs, scope, bc);
  make_driver(lv, std::move(rhs), std::move(reads), scope, delay, a.loc);
}

void Elaborator::gate(const ModuleItem& item, const Instance& inst, Scope* scope) {
  const std::string& g = item.module_name;
  if (g.find("if") != std::string::npos) {
    diags_.error(inst.loc, "Gate type " + g + " is not supported.");
    return;
  }
  if (inst.connections.size() < 2) {
    diags_.error(inst.loc, "Gate " + g + " needs at least two terminals.");
    return;
  }
  bool single_input = g == "not" || g == "buf";
  std::vector<const Expr*> outputs, inputs;
  for (size_t i = 0; i < inst.connections.size(); ++i) {
    const Expr* e = inst.connections[i].expr.get();
    if (!e) continue;
    bool is_out = single_input ? i + 1 < inst.connections.size() : i == 0;
    (is_out ? outputs : inputs).push_back(e);
  }
  std::vector<Signal*> reads;
  BindCtx bc;
  bc.reads = &reads;
  CExprPtr acc;
  for (const Expr* in : inputs) {
    auto b = bind(*in, scope, bc);
    if (!acc) {
      acc = std::move(b);
      continue;
    }
    auto n = std::make_unique<CExpr>();
    n->op = (g == "and" || g == "nand") ? EOp::And : (g == "or" || g == "nor") ? EOp::Or : EOp::Xor;
    n->width = std::max(acc->width, b->width);
    n->a.push_back(std::move(acc));
    n->a.push_back(std::move(b));
    acc = std::move(n);
  }
  if (!acc) return;
  if (g == "nand" || g == "nor" || g == "xnor" || g == "not") {
    auto n = std::make_unique<CExpr>();
    n->op = EOp::BitNot;
    n->width = acc->width;
    n->a.push_back(std::move(acc));
    acc = std::move(n);
  }
  for (size_t i = 0; i < outputs.size(); ++i) {
    CLValue lv;
    if (!bind_lvalue(*outputs[i], scope, lv, true, nullptr)) continue;
    CExprPtr rhs;
    if (i + 1 == outputs.size()) {
      rhs = std::move(acc);
    } else {
      // Each extra output of buf/not gets its own copy of the input network.
      BindCtx bc2;
      auto again = bind(*inputs[0], scope, bc2);
      if (g == "not") {
        auto n = std::make_unique<CExpr>();
        n->op = EOp::BitNot;
        n->width = again->width;
        n->a.push_back(std::move(again));
        again = std::move(n);
      }
      rhs = std::move(again);
    }
    make_driver(lv, std::move(rhs), reads, scope, item.delay.get(), inst.loc);
  }
}

// ---------------------------------------------------------------------------
// Procedural code

void Elaborator::compile_process(const ModuleItem& item, Scope* scope) {
  auto code = std::make_unique<Code>();
  code->scope = scope;
  code->kind = item.kind == ItemKind::Always ? "always" : "initial";
  stmt(*item.stmt, *code, scope);
  Instr end;
  end.loc = item.loc;
  end.scope = scope;
  if (item.kind == ItemKind::Always) {
    end.op = Op::Jump;
    end.target = 0;
  } else {
    end.op = Op::Halt;
  }
  emit(*code, std::move(end));
  m_.processes.push_back(std::move(code));
}

void Elaborator::compile_subprogram(Subprogram* sub) {
  sub->code.scope = sub->scope;
  sub->code.kind = sub->is_task ? "task" : "function";
  if (sub->decl->body) stmt(*sub->decl->body, sub->code, sub->scope);
  Instr ret;
  ret.op = Op::Return;
  ret.loc = sub->decl->loc;
  ret.scope = sub->scope;
  emit(sub->code, std::move(ret));
}

void Elaborator::wait_items(const EventControl& ec, const Stmt* body, Instr& in, Scope* scope,
                            Code& code) {
  (void)code;
  if (ec.star) {
    // Sensitivity is every signal the body reads; filled in by the caller.
    (void)body;
    return;
  }
  BindCtx bc;
  for (const auto& it : ec.items) {
    WaitItem w;
    w.edge = it.edge;
    w.expr = bind(*it.expr, scope, bc);
    in.items.push_back(std::move(w));
  }
}

void Elaborator::stmt(const Stmt& s, Code& code, Scope* scope) {
  auto mk = [&](Op op) {
    Instr in;
    in.op = op;
    in.loc = s.loc;
    in.scope = scope;
    return in;
  };
  auto reads_of = [&](std::vector<Signal*>& reads) -> std::vector<Signal*>* {
    return star_collectors_.empty() ? nullptr : &reads;
  };
  // Every bound rvalue also feeds any enclosing @* collectors.
  auto bind_rv = [&](const Expr& e) {
    std::vector<Signal*> reads;
    BindCtx bc;
    bc.reads = reads_of(reads);
    auto c = bind(e, scope, bc);
    for (auto& col : star_collectors_) col->insert(col->end(), reads.begin(), reads.end());
    return c;
  };
  auto bind_lv = [&](const Expr& e, CLValue& lv) {
    std::vector<Signal*> reads;
    bool ok = bind_lvalue(e, scope, lv, false, reads_of(reads));
    for (auto& col : star_collectors_) col->insert(col->end(), reads.begin(), reads.end());
    return ok;
  };

  switch (s.kind) {
    case StmtKind::Null:
      return;
    case StmtKind::Block: {
      Scope* inner = scope;
      if (!s.name.empty()) {
        inner = new_scope(scope, s.name, false, nullptr);
        for (const auto& p : s.params) declare_param(p, inner, nullptr);
        for (const auto& d : s.decls) declare(d, inner, nullptr);
        inner->block_code = &code;
        inner->block_begin = code.instrs.size();
      } else if (!s.decls.empty() || !s.params.empty()) {
        diags_.error(s.loc, "Variable declarations require a named block.");
      }
      for (const auto& b : s.body) stmt(*b, code, inner);
      if (inner != scope) inner->block_end = code.instrs.size();
      return;
    }
    case StmtKind::Fork: {
      Scope* inner = scope;
      if (!s.name.empty()) {
        inner = new_scope(scope, s.name, false, nullptr);
        for (const auto& p : s.params) declare_param(p, inner, nullptr);
        for (const auto& d : s.decls) declare(d, inner, nullptr);
        inner->block_code = &code;
        inner->block_begin = code.instrs.size();
      }
      size_t at = emit(code, mk(Op::Fork));
      std::vector<size_t> starts;
      for (const auto& b : s.body) {
        starts.push_back(code.instrs.size());
        stmt(*b, code, inner);
        emit(code, mk(Op::ForkEnd));
      }
      code.instrs[at].fork_starts = starts;
      code.instrs[at].target = code.instrs.size();
      if (inner != scope) inner->block_end = code.instrs.size();
      return;
    }
    case StmtKind::Assign: {
      Instr in = mk(Op::Assign);
      if (!bind_lv(*s.lhs, in.lv)) return;
      in.expr = bind_rv(*s.rhs);
      in.nonblocking = s.nonblocking;
      if (s.nonblocking) {
        if (s.event) {
          diags_.error(s.loc, "Intra-assignment event controls on nonblocking assignments are not supported.");
          return;
        }
        if (s.delay) in.delay = bind_rv(*s.delay);
        emit(code, std::move(in));
        return;
      }
      if (!s.delay && !s.event) {
        emit(code, std::move(in));
        return;
      }
      in.op = Op::EvalTemp;
      emit(code, std::move(in));
      if (s.delay) {
        Instr d = mk(Op::Delay);
        d.expr = bind_rv(*s.delay);
        emit(code, std::move(d));
      } else {
        Instr w = mk(Op::WaitEvent);
        wait_items(*s.event, nullptr, w, scope, code);
        emit(code, std::move(w));
      }
      emit(code, mk(Op::StoreTemp));
      return;
    }
    case StmtKind::If: {
      Instr in = mk(Op::JumpIfFalse);
      in.expr = bind_rv(*s.cond);
      size_t jf = emit(code, std::move(in));
      stmt(*s.body[0], code, scope);
      if (s.body.size() > 1) {
        size_t j = emit(code, mk(Op::Jump));
        code.instrs[jf].target = code.instrs.size();
        stmt(*s.body[1], code, scope);
        code.instrs[j].target = code.instrs.size();
      } else {
        code.instrs[jf].target = code.instrs.size();
      }
      return;
    }
    case StmtKind::Case: {
      Instr in = mk(Op::Case);
      in.case_kind = s.case_kind;
      in.expr = bind_rv(*s.cond);
      uint32_t w = in.expr->width;
      bool sgn = in.expr->is_signed;
      const Stmt* default_body = nullptr;
      std::vector<const Stmt*> bodies;
      for (const auto& item : s.items) {
        if (item.labels.empty()) {
          default_body = item.body.get();
          continue;
        }
        CaseArm arm;
        for (const auto& l : item.labels) {
          auto b = bind_rv(*l);
          w = std::max(w, b->width);
          sgn = sgn && b->is_signed;
          arm.labels.push_back(std::move(b));
        }
        in.arms.push_back(std::move(arm));
        bodies.push_back(item.body.get());
      }
      in.case_width = w;
      in.case_signed = sgn;
      in.has_default = default_body != nullptr;
      size_t at = emit(code, std::move(in));
      std::vector<size_t> jumps;
      for (size_t i = 0; i < bodies.size(); ++i) {
        code.instrs[at].arms[i].target = code.instrs.size();
        if (bodies[i]) stmt(*bodies[i], code, scope);
        jumps.push_back(emit(code, mk(Op::Jump)));
      }
      code.instrs[at].target = code.instrs.size();
      if (default_body) stmt(*default_body, code, scope);
      for (size_t j : jumps) code.instrs[j].target = code.instrs.size();
      return;
    }
    case StmtKind::For: {
      stmt(*s.init, code, scope);
      size_t top = code.instrs.size();
      Instr in = mk(Op::JumpIfFalse);
      in.expr = bind_rv(*s.cond);
      size_t jf = emit(code, std::move(in));
      stmt(*s.body[0], code, scope);
      stmt(*s.step, code, scope);
      Instr back = mk(Op::Jump);
      back.target = top;
      emit(code, std::move(back));
      code.instrs[jf].target = code.instrs.size();
      return;
    }
    case StmtKind::While: {
      size_t top = code.instrs.size();
      Instr in = mk(Op::JumpIfFalse);
      in.expr = bind_rv(*s.cond);
      size_t jf = emit(code, std::move(in));
      stmt(*s.body[0], code, scope);
      Instr back = mk(Op::Jump);
      back.target = top;
      emit(code, std::move(back));
      code.instrs[jf].target = code.instrs.size();
      return;
    }
    case StmtKind::Repeat: {
      Instr init = mk(Op::RepeatInit);
      init.expr = bind_rv(*s.cond);
      emit(code, std::move(init));
      size_t top = emit(code, mk(Op::RepeatTest));
      stmt(*s.body[0], code, scope);
      Instr back = mk(Op::Jump);
      back.target = top;
      emit(code, std::move(back));
      code.instrs[top].target = code.instrs.size();
      return;
    }
    case StmtKind::Forever: {
      size_t top = code.instrs.size();
      stmt(*s.body[0], code, scope);
      Instr back = mk(Op::Jump);
      back.target = top;
      emit(code, std::move(back));
      return;
    }
    case StmtKind::Delay: {
      Instr d = mk(Op::Delay);
      d.expr = bind_rv(*s.cond);
      emit(code, std::move(d));
      stmt(*s.body[0], code, scope);
      return;
    }
    case StmtKind::Event: {
      Instr w = mk(Op::WaitEvent);
      if (s.event->star) {
        auto col = std::make_unique<std::vector<Signal*>>();
        star_collectors_.push_back(std::move(col));
        size_t at = emit(code, std::move(w));
        stmt(*s.body[0], code, scope);
        auto reads = std::move(*star_collectors_.back());
        star_collectors_.pop_back();
        std::sort(reads.begin(), reads.end());
        reads.erase(std::unique(reads.begin(), reads.end()), reads.end());
        for (Signal* sig : reads) {
          WaitItem it;
          it.edge = Edge::Any;
          // Memories notify on every word write; the Sig node on an array
          // evaluates to a write counter.
          it.expr = make_sig(sig);
          code.instrs[at].items.push_back(std::move(it));
        }
        for (auto& outer : star_collectors_) outer->insert(outer->end(), reads.begin(), reads.end());
        return;
      }
      wait_items(*s.event, s.body[0].get(), w, scope, code);
      emit(code, std::move(w));
      stmt(*s.body[0], code, scope);
      return;
    }
    case StmtKind::Wait: {
      Instr w = mk(Op::WaitCond);
      std::vector<Signal*> reads;
      BindCtx bc;
      bc.reads = &reads;
      w.expr = bind(*s.cond, scope, bc);
      std::sort(reads.begin(), reads.end());
      reads.erase(std::unique(reads.begin(), reads.end()), reads.end());
      for (Signal* sig : reads) {
        WaitItem it;
        it.expr = make_sig(sig);
        w.items.push_back(std::move(it));
      }
      for (auto& col : star_collectors_) col->insert(col->end(), reads.begin(), reads.end());
      emit(code, std::move(w));
      stmt(*s.body[0], code, scope);
      return;
    }
    case StmtKind::TaskCall: {
      std::vector<std::string> path;
      {
        std::string part;
        for (char ch : s.name) {
          if (ch == '.') {
            path.push_back(part);
            part.clear();
          } else {
            part.push_back(ch);
          }
        }
        path.push_back(part);
      }
      Symbol* sym = lookup_path(scope, path, nullptr);
      if (!sym || sym->kind != Symbol::Kind::Subprogram || !sym->sub->is_task) {
        diags_.error(s.loc, "Enable of unknown task ``" + s.name + "''.");
        return;
      }
      Subprogram* task = sym->sub;
      if (s.args.size() != task->args.size()) {
        diags_.error(s.loc, "Task " + s.name + " expects " + std::to_string(task->args.size()) +
                                " arguments, you passed " + std::to_string(s.args.size()) + ".");
        return;
      }
      Instr in = mk(Op::TaskCall);
      in.sub = task;
      for (size_t i = 0; i < s.args.size(); ++i) {
        PortDir dir = task->dirs[i];
        if (dir == PortDir::Input || dir == PortDir::Inout)
          in.args.push_back(s.args[i] ? bind_rv(*s.args[i]) : make_const(BitVector(1, Bit::X), false));
        else
          in.args.push_back(nullptr);
        CLValue out;
        if ((dir == PortDir::Output || dir == PortDir::Inout) && s.args[i]) {
          if (!bind_lv(*s.args[i], out)) return;
        }
        in.outs.push_back(std::move(out));
      }
      emit(code, std::move(in));
      return;
    }
    case StmtKind::SysTask: {
      static const std::unordered_set<std::string> known = {
          "$display", "$displayb", "$displayh", "$displayo", "$write", "$writeb", "$writeh",
          "$writeo", "$strobe", "$monitor", "$monitoron", "$monitoroff", "$finish", "$stop",
          "$dumpfile", "$dumpvars", "$dumpon", "$dumpoff", "$dumpall", "$dumpflush",
          "$timeformat", "$fdisplay", "$fwrite", "$fclose", "$fflush", "$readmemh",
          "$readmemb", "$random", "$printtimescale", "$fstrobe", "$fmonitor"};
      if (!known.count(s.name)) {
        diags_.error(s.loc, "System task " + s.name + " is not defined by any module.");
        return;
      }
      Instr in = mk(Op::SysTask);
      in.name = s.name;
      if (s.name == "$dumpvars" || s.name == "$printtimescale") {
        emit(code, std::move(in));
        return;
      }
      for (size_t i = 0; i < s.args.size(); ++i) {
        const auto& a = s.args[i];
        if (!a) {
          in.args.push_back(nullptr);
          continue;
        }
        bool mem_arg = (s.name == "$readmemh" || s.name == "$readmemb") && i == 1;
        if (mem_arg && a->kind == ExprKind::Ident) {
          Symbol* sym = lookup_path(scope, a->path, nullptr);
          if (!sym || !sym->sig || !sym->sig->is_array) {
            diags_.error(a->loc, s.name + " requires a memory as its second argument.");
            return;
          }
          auto m = make_sig(sym->sig);
          in.args.push_back(std::move(m));
          continue;
        }
        if (a->kind == ExprKind::String) {
          // A leading quote in name marks a literal; the text follows it.
          auto k = make_const(a->text.empty() ? BitVector(8, Bit::Zero) : a->value, false);
          k->name = "\"" + a->text;
          k->scope = scope;
          in.args.push_back(std::move(k));
          continue;
        }
        in.args.push_back(bind_rv(*a));
      }
      emit(code, std::move(in));
      return;
    }
    case StmtKind::Disable: {
      Scope* target = find_block(scope, s.name);
      if (!target) {
        diags_.error(s.loc, "Cannot find scope " + s.name + " for disable.");
        return;
      }
      Instr in = mk(Op::Disable);
      in.disable_scope = target;
      emit(code, std::move(in));
      return;
    }
    case StmtKind::Trigger: {
      Symbol* sym = lookup(scope, s.name);
      if (!sym || !sym->sig || sym->sig->kind != NetKind::Event) {
        diags_.error(s.loc, "Unable to bind event `" + s.name + "' in `" + scope->path + "'");
        return;
      }
      Instr in = mk(Op::Trigger);
      in.event = sym->sig;
      emit(code, std::move(in));
      return;
    }
  }
}

bool elaborate(const Design& design, const std::vector<std::string>& tops, Model& model,
               Machine& machine, DiagnosticSink& diags) {
  Elaborator e(design, model, machine, diags);
  return e.run(tops);
}

}  // namespace hwloop::sim
