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

#include "machine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hwloop::sim {

namespace {

uint64_t pow10u(int n) {
  uint64_t v = 1;
  for (int i = 0; i < n; ++i) v *= 10;
  return v;
}

bool index_value(const BitVector& v, bool is_signed, int64_t& out) {
  if (!v.is_known()) return false;
  if (is_signed) out = v.width() >= 64 ? v.to_int64() : v.resized(64, true).to_int64();
  else out = static_cast<int64_t>(v.to_uint64());
  return true;
}

bool has_real(const CExpr& e) {
  if (e.is_real) return true;
  for (const auto& a : e.a)
    if (a && has_real(*a)) return true;
  return false;
}

void collect_signals(const CExpr& e, std::vector<Signal*>& out) {
  if ((e.op == EOp::Sig || e.op == EOp::Word) && e.sig) out.push_back(e.sig);
  for (const auto& a : e.a)
    if (a) collect_signals(*a, out);
}

bool is_literal(const CExpr* e) { return e && !e->name.empty() && e->name[0] == '"'; }

std::string unit_text(int exp) {
  static const char* units[] = {"s", "ms", "us", "ns", "ps", "fs"};
  int e = -exp;
  int idx = (e + 2) / 3;
  int mult = idx * 3 - e;
  return std::to_string(pow10u(mult)) + units[std::min(idx, 5)];
}

std::string to_decimal(const BitVector& v, bool is_signed) {
  if (v.width() <= 64) {
    if (is_signed) {
      int64_t x = v.resized(64, true).to_int64();
      return std::to_string(x);
    }
    return std::to_string(v.to_uint64());
  }
  BitVector x = v;
  bool neg = false;
  if (is_signed && x.msb() == Bit::One) {
    neg = true;
    x = negate(x);
  }
  std::string digits;
  BitVector ten = BitVector::from_uint(x.width(), 10);
  while (!x.is_zero()) {
    BitVector q = div(x, ten, false);
    BitVector r = sub(x, mul(q, ten));
    digits.push_back(static_cast<char>('0' + r.to_uint64()));
    x = q;
  }
  if (digits.empty()) digits = "0";
  if (neg) digits.push_back('-');
  std::reverse(digits.begin(), digits.end());
  return digits;
}

size_t decimal_width(uint32_t width, bool is_signed) {
  BitVector max(width, Bit::One);
  if (is_signed) {
    BitVector m(width, Bit::Zero);
    m.set(width - 1, Bit::One);
    return to_decimal(m, false).size() + 1;
  }
  return to_decimal(max, false).size();
}

char group_char(const BitVector& v, uint32_t lo, uint32_t bits) {
  unsigned value = 0;
  unsigned nx = 0, nz = 0, n = 0;
  for (uint32_t i = 0; i < bits && lo + i < v.width(); ++i, ++n) {
    Bit b = v.get(lo + i);
    if (b == Bit::X) ++nx;
    else if (b == Bit::Z) ++nz;
    else if (b == Bit::One) value |= 1u << i;
  }
  if (nx == n && n) return 'x';
  if (nz == n && n) return 'z';
  if (nx) return 'X';
  if (nz) return 'Z';
  return "0123456789abcdef"[value];
}

}  // namespace

Machine::Machine(Model& model, std::ostream& out) : m_(model), out_(out) {}
Machine::~Machine() = default;

uint64_t Machine::unit_scale(const Scope* scope) const {
  int unit = scope ? scope->unit_exp : 0;
  return pow10u(std::max(0, unit - m_.global_prec));
}

// ---------------------------------------------------------------------------
// Expressions

BitVector Machine::eval(const CExpr& e, uint32_t width, bool sign) {
  switch (e.op) {
    case EOp::Const:
      return e.value.width() == width ? e.value : e.value.resized(width, sign);
    case EOp::Sig: {
      const Signal* s = e.sig;
      if (s->is_array) return BitVector::from_uint(width, s->writes);
      return s->value.width() == width ? s->value : s->value.resized(width, sign);
    }
    case EOp::Word: {
      int64_t idx = 0;
      if (!index_value(eval_self(*e.a[0]), e.a[0]->is_signed, idx)) return BitVector(width, Bit::X);
      int64_t off = e.sig->word_offset(idx);
      if (off < 0) return BitVector(width, Bit::X);
      return e.sig->words[static_cast<size_t>(off)].resized(width, sign);
    }
    case EOp::BitSel: {
      int64_t idx = 0;
      if (!index_value(eval_self(*e.a[1]), e.a[1]->is_signed, idx)) return BitVector(width, Bit::X);
      int64_t pos = e.base_msb >= e.base_lsb ? idx - e.base_lsb : e.base_lsb - idx;
      Bit b = Bit::X;
      const CExpr& base = *e.a[0];
      if (base.op == EOp::Sig && !base.sig->is_array) {
        if (pos >= 0 && pos < base.sig->value.width()) b = base.sig->value.get(static_cast<uint32_t>(pos));
      } else {
        BitVector v = eval_self(base);
        if (pos >= 0 && pos < v.width()) b = v.get(static_cast<uint32_t>(pos));
      }
      BitVector out(width, Bit::Zero);
      out.set(0, b);
      return out;
    }
    case EOp::PartSel:
      return eval_self(*e.a[0]).slice(e.const_pos, e.width).resized(width, false);
    case EOp::IdxUp:
    case EOp::IdxDown: {
      int64_t idx = 0;
      if (!index_value(eval_self(*e.a[1]), e.a[1]->is_signed, idx)) return BitVector(width, Bit::X);
      int64_t other = e.op == EOp::IdxUp ? idx + e.width - 1 : idx - static_cast<int64_t>(e.width) + 1;
      auto pos = [&](int64_t i) { return e.base_msb >= e.base_lsb ? i - e.base_lsb : e.base_lsb - i; };
      int64_t lo = std::min(pos(idx), pos(other));
      return eval_self(*e.a[0]).slice(lo, e.width).resized(width, false);
    }
    case EOp::Plus:
      return eval(*e.a[0], width, sign);
    case EOp::Neg:
      return negate(eval(*e.a[0], width, sign));
    case EOp::BitNot:
      return bit_not(eval(*e.a[0], width, sign));
    case EOp::LogNot:
    case EOp::RAnd:
    case EOp::RNand:
    case EOp::ROr:
    case EOp::RNor:
    case EOp::RXor:
    case EOp::RXnor: {
      BitVector v = eval_self(*e.a[0]);
      Bit b = Bit::X;
      switch (e.op) {
        case EOp::LogNot: b = bit_not(truth(v)); break;
        case EOp::RAnd: b = reduce_and(v); break;
        case EOp::RNand: b = bit_not(reduce_and(v)); break;
        case EOp::ROr: b = reduce_or(v); break;
        case EOp::RNor: b = bit_not(reduce_or(v)); break;
        case EOp::RXor: b = reduce_xor(v); break;
        default: b = bit_not(reduce_xor(v)); break;
      }
      BitVector out(width, Bit::Zero);
      out.set(0, b);
      return out;
    }
    case EOp::Ternary: {
      Bit c = truth(eval_self(*e.a[0]));
      if (c == Bit::One) return eval(*e.a[1], width, sign);
      if (c == Bit::Zero) return eval(*e.a[2], width, sign);
      return merge_unknown(eval(*e.a[1], width, sign), eval(*e.a[2], width, sign));
    }
    case EOp::Concat: {
      std::vector<BitVector> parts;
      parts.reserve(e.a.size());
      for (const auto& p : e.a) parts.push_back(eval_self(*p));
      return concat(parts).resized(width, false);
    }
    case EOp::Repl: {
      std::vector<BitVector> one;
      for (const auto& p : e.a) one.push_back(eval_self(*p));
      BitVector unit = concat(one);
      std::vector<BitVector> parts(e.repl, unit);
      return concat(parts).resized(width, false);
    }
    case EOp::Call:
      return call_function(e).resized(width, sign);
    case EOp::SysFunc:
      return system_function(e).resized(width, sign);
    default:
      return eval_binary(e, width, sign);
  }
}

BitVector Machine::eval_binary(const CExpr& e, uint32_t width, bool sign) {
  const CExpr& l = *e.a[0];
  const CExpr& r = *e.a[1];
  auto bit_result = [&](Bit b) {
    BitVector out(width, Bit::Zero);
    out.set(0, b);
    return out;
  };
  switch (e.op) {
    case EOp::Add: return add(eval(l, width, sign), eval(r, width, sign));
    case EOp::Sub: return sub(eval(l, width, sign), eval(r, width, sign));
    case EOp::Mul: return mul(eval(l, width, sign), eval(r, width, sign));
    case EOp::Div: return div(eval(l, width, sign), eval(r, width, sign), sign);
    case EOp::Mod: return mod(eval(l, width, sign), eval(r, width, sign), sign);
    case EOp::And: return bit_and(eval(l, width, sign), eval(r, width, sign));
    case EOp::Or: return bit_or(eval(l, width, sign), eval(r, width, sign));
    case EOp::Xor: return bit_xor(eval(l, width, sign), eval(r, width, sign));
    case EOp::Xnor: return bit_xnor(eval(l, width, sign), eval(r, width, sign));
    case EOp::Pow: return power(eval(l, width, sign), eval_self(r), sign, r.is_signed);
    case EOp::Shl:
    case EOp::AShl: return shift_left(eval(l, width, sign), eval_self(r));
    case EOp::Shr: return shift_right(eval(l, width, sign), eval_self(r), false);
    case EOp::AShr: return shift_right(eval(l, width, sign), eval_self(r), sign);
    case EOp::LogAnd: {
      Bit a = truth(eval_self(l));
      if (a == Bit::Zero) return bit_result(Bit::Zero);
      return bit_result(bit_and(a, truth(eval_self(r))));
    }
    case EOp::LogOr: {
      Bit a = truth(eval_self(l));
      if (a == Bit::One) return bit_result(Bit::One);
      return bit_result(bit_or(a, truth(eval_self(r))));
    }
    default:
      break;
  }
  uint32_t w = std::max(l.width, r.width);
  bool s = l.is_signed && r.is_signed;
  BitVector lv = eval(l, w, s);
  BitVector rv = eval(r, w, s);
  switch (e.op) {
    case EOp::Lt: return bit_result(less_than(lv, rv, s));
    case EOp::Gt: return bit_result(less_than(rv, lv, s));
    case EOp::Le: return bit_result(bit_not(less_than(rv, lv, s)));
    case EOp::Ge: return bit_result(bit_not(less_than(lv, rv, s)));
    case EOp::Eq: return bit_result(logic_eq(lv, rv));
    case EOp::Ne: return bit_result(bit_not(logic_eq(lv, rv)));
    case EOp::CaseEq: return bit_result(case_eq(lv, rv) ? Bit::One : Bit::Zero);
    case EOp::CaseNe: return bit_result(case_eq(lv, rv) ? Bit::Zero : Bit::One);
    default: return BitVector(width, Bit::X);
  }
}

BitVector Machine::call_function(const CExpr& e) {
  Subprogram* fn = e.fn;
  std::vector<BitVector> values;
  for (size_t i = 0; i < e.a.size(); ++i) {
    const CExpr& a = *e.a[i];
    Signal* s = fn->args[i];
    values.push_back(eval(a, std::max(a.width, s->width), a.is_signed).resized(s->width, false));
  }
  for (size_t i = 0; i < values.size(); ++i) fn->args[i]->value = values[i];
  fn->ret->value = BitVector(fn->ret->width, Bit::X);
  if (function_depth_ > 256) {
    out_ << "ERROR: function " << fn->name << " recursion is too deep.\n";
    finished_ = true;
    exit_status_ = 1;
    return fn->ret->value;
  }
  ++function_depth_;
  Thread t;
  t.in_function = true;
  Frame f;
  f.code = &fn->code;
  t.frames.push_back(std::move(f));
  while (!t.done && !finished_) {
    if (!step_instr(&t)) break;
  }
  --function_depth_;
  if (!t.done && !finished_) {
    out_ << "ERROR: function " << fn->name << " contains a timing control.\n";
    finished_ = true;
    exit_status_ = 1;
  }
  return fn->ret->value;
}

BitVector Machine::system_function(const CExpr& e) {
  const std::string& n = e.name;
  if (n == "$time" || n == "$realtime" || n == "$stime") {
    uint64_t scale = unit_scale(e.scope);
    uint64_t t = (now_ + scale / 2) / scale;
    return BitVector::from_uint(n == "$stime" ? 32 : 64, t);
  }
  if (n == "$random") {
    uint32_t seed = random_seed_;
    const CExpr* seed_arg = e.a.empty() ? nullptr : e.a[0].get();
    if (seed_arg && seed_arg->op == EOp::Sig) seed = static_cast<uint32_t>(seed_arg->sig->value.to_uint64());
    seed = seed * 69069u + 1u;
    if (seed_arg && seed_arg->op == EOp::Sig) {
      Target t;
      t.sig = seed_arg->sig;
      t.width = seed_arg->sig->width;
      write_target(t, BitVector::from_uint(32, seed).resized(t.width, false));
    } else {
      random_seed_ = seed;
    }
    return BitVector::from_uint(32, seed);
  }
  if (n == "$urandom" || n == "$urandom_range") {
    random_seed_ = random_seed_ * 69069u + 1u;
    uint32_t v = random_seed_;
    if (n == "$urandom_range" && !e.a.empty()) {
      uint64_t hi = eval_self(*e.a[0]).to_uint64();
      uint64_t lo = e.a.size() > 1 ? eval_self(*e.a[1]).to_uint64() : 0;
      if (hi < lo) std::swap(hi, lo);
      v = static_cast<uint32_t>(lo + v % (hi - lo + 1));
    }
    return BitVector::from_uint(32, v);
  }
  if (n == "$signed" || n == "$unsigned") return eval_self(*e.a[0]);
  if (n == "$clog2") {
    BitVector v = eval_self(*e.a[0]);
    if (!v.is_known()) return BitVector(32, Bit::X);
    uint64_t x = v.to_uint64();
    int64_t r = 0;
    while ((uint64_t{1} << r) < x && r < 64) ++r;
    return BitVector::from_int(32, r);
  }
  if (n == "$fopen") {
    std::string name = e.a.empty() ? "" : e.a[0]->value.to_text();
    auto f = std::make_unique<std::ofstream>(name);
    if (!f->is_open()) return BitVector::from_uint(32, 0);
    uint32_t fd = 0x80000000u | next_fd_++;
    files_[fd] = std::move(f);
    return BitVector::from_uint(32, fd);
  }
  if (n == "$rtoi" || n == "$itor" || n == "$ceil" || n == "$floor")
    return e.a.empty() ? BitVector(32, Bit::X) : eval_self(*e.a[0]);
  return BitVector::from_int(32, 0);
}

double Machine::eval_real(const CExpr& e) {
  if (e.is_real) return e.real;
  auto as_double = [&](const CExpr& x) { return eval_real(x); };
  switch (e.op) {
    case EOp::Add: return as_double(*e.a[0]) + as_double(*e.a[1]);
    case EOp::Sub: return as_double(*e.a[0]) - as_double(*e.a[1]);
    case EOp::Mul: return as_double(*e.a[0]) * as_double(*e.a[1]);
    case EOp::Div: return as_double(*e.a[0]) / as_double(*e.a[1]);
    case EOp::Neg: return -as_double(*e.a[0]);
    case EOp::Plus: return as_double(*e.a[0]);
    default: {
      BitVector v = eval_self(e);
      if (!v.is_known()) return 0;
      return e.is_signed ? static_cast<double>(v.resized(64, true).to_int64())
                         : static_cast<double>(v.to_uint64());
    }
  }
}

uint64_t Machine::delay_ticks(const CExpr& e, const Scope* scope) {
  if (has_real(e)) {
    double r = eval_real(e);
    if (!(r > 0)) return 0;
    int unit = scope ? scope->unit_exp : 0;
    int prec = scope ? scope->prec_exp : 0;
    double in_prec = std::llround(r * static_cast<double>(pow10u(std::max(0, unit - prec))));
    return static_cast<uint64_t>(in_prec) * pow10u(std::max(0, prec - m_.global_prec));
  }
  BitVector v = eval_self(e);
  if (!v.is_known()) return 0;
  if (e.is_signed && v.msb() == Bit::One) return 0;
  return v.to_uint64() * unit_scale(scope);
}

// ---------------------------------------------------------------------------
// Writes and propagation

void Machine::resolve_lvalue(const CLValue& lv, std::vector<Target>& out) {
  if (lv.sel == CLValue::Sel::Concat) {
    for (const auto& p : lv.parts) resolve_lvalue(p, out);
    return;
  }
  Target t;
  t.sig = lv.sig;
  t.width = lv.width;
  if (lv.word) {
    int64_t idx = 0;
    if (!index_value(eval_self(*lv.word), lv.word->is_signed, idx)) t.valid = false;
    else t.word = lv.sig->word_offset(idx);
    if (t.word < 0) t.valid = false;
  }
  switch (lv.sel) {
    case CLValue::Sel::Whole:
      t.lo = 0;
      break;
    case CLValue::Sel::Part:
      t.lo = lv.const_pos;
      break;
    case CLValue::Sel::Bit: {
      int64_t idx = 0;
      if (!index_value(eval_self(*lv.index), lv.index->is_signed, idx)) t.valid = false;
      else t.lo = lv.sig->bit_pos(idx);
      break;
    }
    case CLValue::Sel::IdxUp:
    case CLValue::Sel::IdxDown: {
      int64_t idx = 0;
      if (!index_value(eval_self(*lv.index), lv.index->is_signed, idx)) {
        t.valid = false;
        break;
      }
      int64_t other = lv.sel == CLValue::Sel::IdxUp ? idx + lv.width - 1
                                                     : idx - static_cast<int64_t>(lv.width) + 1;
      t.lo = std::min(lv.sig->bit_pos(idx), lv.sig->bit_pos(other));
      break;
    }
    default:
      break;
  }
  out.push_back(t);
}

void Machine::write_targets(const std::vector<Target>& targets, const BitVector& value) {
  if (targets.size() == 1) {
    if (targets[0].valid) write_target(targets[0], value.resized(targets[0].width, false));
    return;
  }
  int64_t offset = 0;
  for (const auto& t : targets) offset += t.width;
  for (const auto& t : targets) {
    offset -= t.width;
    if (t.valid) write_target(t, value.slice(offset, t.width));
  }
}

void Machine::write_target(const Target& t, const BitVector& value) {
  Signal* s = t.sig;
  if (t.word >= 0) {
    BitVector& w = s->words[static_cast<size_t>(t.word)];
    BitVector nv = w;
    if (t.lo == 0 && value.width() == nv.width()) nv = value;
    else nv.set_slice(t.lo, value);
    if (nv != w) {
      w = std::move(nv);
      ++s->writes;
      signal_changed(s);
    }
    return;
  }
  if (s->is_array) return;
  if (t.lo == 0 && value.width() == s->width) {
    if (value == s->value) return;
    s->value = value;
  } else {
    BitVector nv = s->value;
    nv.set_slice(t.lo, value);
    if (nv == s->value) return;
    s->value = std::move(nv);
  }
  signal_changed(s);
}

void Machine::signal_changed(Signal* sig) {
  for (Driver* d : sig->fanout) {
    if (d->pending) continue;
    d->pending = true;
    Event ev{Event::Kind::Driver};
    ev.driver = d;
    active_.push_back(std::move(ev));
  }
  if (sig->waiters.empty()) return;
  std::vector<Signal::WaitRef> keep;
  std::vector<Signal::WaitRef> refs;
  refs.swap(sig->waiters);
  for (const auto& w : refs) {
    Thread* t = w.thread;
    if (t->gen != w.gen || !t->waiting || t->done) continue;
    if (triggered(t)) {
      t->waiting = false;
      ++t->gen;
      schedule(t);
    } else {
      keep.push_back(w);
    }
  }
  // Waiters added while evaluating (none expected) are preserved.
  keep.insert(keep.end(), sig->waiters.begin(), sig->waiters.end());
  sig->waiters.swap(keep);
}

void Machine::update_net(Signal* sig) {
  BitVector nv;
  if (sig->drivers.size() == 1) {
    const auto& [d, idx] = sig->drivers[0];
    const Target& t = d->targets[idx];
    if (t.lo == 0 && t.width == sig->width) {
      nv = d->contrib[idx];
    }
  }
  if (nv.width() != sig->width || sig->drivers.size() != 1) {
    nv = BitVector(sig->width, Bit::Z);
    for (const auto& [d, idx] : sig->drivers) {
      const Target& t = d->targets[idx];
      const BitVector& c = d->contrib[idx];
      for (uint32_t j = 0; j < c.width(); ++j) {
        int64_t pos = t.lo + j;
        if (pos < 0 || pos >= sig->width) continue;
        Bit b = c.get(j);
        if (b == Bit::Z) continue;
        Bit cur = nv.get(static_cast<uint32_t>(pos));
        if (cur == Bit::Z) nv.set(static_cast<uint32_t>(pos), b);
        else if (cur != b) nv.set(static_cast<uint32_t>(pos), Bit::X);
      }
    }
  }
  if (sig->kind == ast::NetKind::Tri0 || sig->kind == ast::NetKind::Tri1) {
    Bit pull = sig->kind == ast::NetKind::Tri1 ? Bit::One : Bit::Zero;
    for (uint32_t i = 0; i < nv.width(); ++i)
      if (nv.get(i) == Bit::Z) nv.set(i, pull);
  }
  if (nv != sig->value) {
    sig->value = std::move(nv);
    signal_changed(sig);
  }
}

void Machine::evaluate_driver(Driver* d) {
  d->pending = false;
  BitVector v = eval(*d->rhs, std::max(d->rhs->width, d->width), d->rhs->is_signed)
                    .resized(d->width, false);
  if (d->delay) {
    uint64_t ticks = delay_ticks(*d->delay, d->scope);
    if (ticks > 0) {
      Event ev{Event::Kind::DriverValue};
      ev.driver = d;
      ev.value = std::move(v);
      schedule_at(now_ + ticks, std::move(ev));
      return;
    }
  }
  apply_driver_value(d, v);
}

void Machine::apply_driver_value(Driver* d, const BitVector& value) {
  int64_t offset = d->width;
  for (size_t i = 0; i < d->targets.size(); ++i) {
    const Target& t = d->targets[i];
    offset -= t.width;
    BitVector part = d->targets.size() == 1 ? value : value.slice(offset, t.width);
    if (part == d->contrib[i]) continue;
    d->contrib[i] = std::move(part);
    update_net(t.sig);
  }
}

// ---------------------------------------------------------------------------
// Threads

void Machine::schedule(Thread* t) {
  Event ev{Event::Kind::Thread};
  ev.thread = t;
  ev.gen = t->gen;
  active_.push_back(std::move(ev));
}

void Machine::schedule_at(uint64_t time, Event ev) { future_[time].active.push_back(std::move(ev)); }

Thread* Machine::spawn(const Code* code, size_t pc) {
  auto t = std::make_unique<Thread>();
  Frame f;
  f.code = code;
  f.pc = pc;
  t->frames.push_back(std::move(f));
  Thread* raw = t.get();
  threads_.push_back(std::move(t));
  return raw;
}

void Machine::run_thread(Thread* t) {
  while (!finished_ && step_instr(t)) {
  }
}

void Machine::finish_thread(Thread* t) {
  t->done = true;
  ++t->gen;
  if (t->parent && t->parent->fork_pending > 0) {
    if (--t->parent->fork_pending == 0) schedule(t->parent);
  }
}

void Machine::arm_wait(Thread* t, const Instr& in) {
  t->armed.clear();
  t->waiting = true;
  t->wait_instr = &in;
  std::vector<Signal*> sigs;
  for (const auto& item : in.items) {
    t->armed.push_back({&item, eval_self(*item.expr)});
    collect_signals(*item.expr, sigs);
  }
  std::sort(sigs.begin(), sigs.end());
  sigs.erase(std::unique(sigs.begin(), sigs.end()), sigs.end());
  for (Signal* s : sigs) s->waiters.push_back({t, t->gen});
}

bool Machine::triggered(Thread* t) {
  bool fire = false;
  for (auto& a : t->armed) {
    BitVector now = eval_self(*a.item->expr);
    if (now == a.last) continue;
    Bit o = a.last.get(0), n = now.get(0);
    switch (a.item->edge) {
      case ast::Edge::Any:
        fire = true;
        break;
      case ast::Edge::Pos:
        if ((o == Bit::Zero && n != Bit::Zero) || ((o == Bit::X || o == Bit::Z) && n == Bit::One))
          fire = true;
        break;
      case ast::Edge::Neg:
        if ((o == Bit::One && n != Bit::One) || ((o == Bit::X || o == Bit::Z) && n == Bit::Zero))
          fire = true;
        break;
    }
    a.last = std::move(now);
  }
  return fire;
}

void Machine::do_disable(Thread* self, const Instr& in) {
  const Scope* target = in.disable_scope;
  const Code* code = target->block_code;
  size_t begin = target->block_begin, end = target->block_end;
  auto in_range = [&](const Frame& f) { return f.code == code && f.pc >= begin && f.pc < end; };
  auto prune = [&](Frame& f) {
    f.counters.erase(std::remove_if(f.counters.begin(), f.counters.end(),
                                    [&](const auto& c) { return c.first >= begin && c.first < end; }),
                     f.counters.end());
  };
  std::vector<Thread*> all;
  for (auto& t : threads_) all.push_back(t.get());
  if (std::find(all.begin(), all.end(), self) == all.end()) all.push_back(self);
  for (Thread* t : all) {
    if (t->done) continue;
    for (size_t k = 0; k < t->frames.size(); ++k) {
      if (!in_range(t->frames[k])) continue;
      if (t->parent && k == 0) {
        // A fork branch inside the disabled block ends outright.
        if (t == self) {
          t->frames.clear();
        }
        finish_thread(t);
        break;
      }
      t->frames.resize(k + 1);
      prune(t->frames[k]);
      t->frames[k].pc = end;
      t->fork_pending = 0;
      if (t != self) {
        t->waiting = false;
        t->armed.clear();
        ++t->gen;
        schedule(t);
      }
      break;
    }
  }
}

bool Machine::step_instr(Thread* t) {
  if (finished_ || t->frames.empty()) return false;
  Frame& f = t->frames.back();
  const Instr& in = f.code->instrs[f.pc];
  switch (in.op) {
    case Op::Assign: {
      std::vector<Target> targets;
      resolve_lvalue(in.lv, targets);
      BitVector v = eval(*in.expr, std::max(in.expr->width, in.lv.width), in.expr->is_signed)
                        .resized(in.lv.width, false);
      ++f.pc;
      if (in.nonblocking) {
        if (in.delay) {
          uint64_t ticks = delay_ticks(*in.delay, in.scope);
          if (ticks > 0) {
            future_[now_ + ticks].nba.push_back({std::move(targets), std::move(v)});
            return true;
          }
        }
        nba_.push_back({std::move(targets), std::move(v)});
        return true;
      }
      write_targets(targets, v);
      return true;
    }
    case Op::EvalTemp: {
      f.temp_targets.clear();
      resolve_lvalue(in.lv, f.temp_targets);
      f.temp = eval(*in.expr, std::max(in.expr->width, in.lv.width), in.expr->is_signed)
                   .resized(in.lv.width, false);
      ++f.pc;
      return true;
    }
    case Op::StoreTemp:
      ++f.pc;
      write_targets(f.temp_targets, f.temp);
      return true;
    case Op::JumpIfFalse:
      f.pc = truth(eval_self(*in.expr)) == Bit::One ? f.pc + 1 : in.target;
      return true;
    case Op::Jump:
      f.pc = in.target;
      return true;
    case Op::Delay: {
      uint64_t ticks = delay_ticks(*in.expr, in.scope);
      ++f.pc;
      if (t->in_function) return false;
      Event ev{Event::Kind::Thread};
      ev.thread = t;
      ev.gen = t->gen;
      if (ticks == 0) inactive_.push_back(std::move(ev));
      else schedule_at(now_ + ticks, std::move(ev));
      return false;
    }
    case Op::WaitEvent:
      ++f.pc;
      if (t->in_function) return false;
      arm_wait(t, in);
      return false;
    case Op::WaitCond:
      if (truth(eval_self(*in.expr)) == Bit::One) {
        ++f.pc;
        return true;
      }
      if (t->in_function) return false;
      arm_wait(t, in);
      return false;
    case Op::Case: {
      BitVector sel = eval(*in.expr, in.case_width, in.case_signed);
      size_t dest = in.target;
      for (const auto& arm : in.arms) {
        bool hit = false;
        for (const auto& label : arm.labels) {
          BitVector lv = eval(*label, in.case_width, in.case_signed);
          if (in.case_kind == "case") {
            hit = case_eq(sel, lv);
          } else {
            hit = true;
            bool x_wild = in.case_kind == "casex";
            for (uint32_t i = 0; i < in.case_width && hit; ++i) {
              Bit a = sel.get(i), b = lv.get(i);
              if (a == Bit::Z || b == Bit::Z) continue;
              if (x_wild && (a == Bit::X || b == Bit::X)) continue;
              if (a != b) hit = false;
            }
          }
          if (hit) break;
        }
        if (hit) {
          dest = arm.target;
          break;
        }
      }
      f.pc = dest;
      return true;
    }
    case Op::RepeatInit: {
      BitVector v = eval_self(*in.expr);
      int64_t n = 0;
      if (!index_value(v, in.expr->is_signed, n) || n < 0) n = 0;
      f.counters.emplace_back(f.pc + 1, n);
      ++f.pc;
      return true;
    }
    case Op::RepeatTest: {
      if (f.counters.empty() || f.counters.back().second <= 0) {
        if (!f.counters.empty()) f.counters.pop_back();
        f.pc = in.target;
        return true;
      }
      --f.counters.back().second;
      ++f.pc;
      return true;
    }
    case Op::SysTask:
      ++f.pc;
      system_task(t, in);
      return !finished_;
    case Op::TaskCall: {
      Subprogram* task = in.sub;
      std::vector<BitVector> values(in.args.size());
      for (size_t i = 0; i < in.args.size(); ++i) {
        if (!in.args[i]) continue;
        Signal* s = task->args[i];
        const CExpr& a = *in.args[i];
        values[i] = eval(a, std::max(a.width, s->width), a.is_signed).resized(s->width, false);
      }
      for (size_t i = 0; i < in.args.size(); ++i) {
        if (!in.args[i]) continue;
        Target tg;
        tg.sig = task->args[i];
        tg.width = tg.sig->width;
        write_target(tg, values[i]);
      }
      ++f.pc;
      Frame nf;
      nf.code = &task->code;
      nf.call = &in;
      t->frames.push_back(std::move(nf));
      return true;
    }
    case Op::Return: {
      const Instr* call = f.call;
      t->frames.pop_back();
      if (t->frames.empty()) {
        t->done = true;
        return false;
      }
      if (call) {
        for (size_t i = 0; i < call->outs.size(); ++i) {
          const CLValue& lv = call->outs[i];
          if (!lv.sig && lv.sel != CLValue::Sel::Concat) continue;
          std::vector<Target> targets;
          resolve_lvalue(lv, targets);
          write_targets(targets, call->sub->args[i]->value.resized(lv.width, false));
        }
      }
      return true;
    }
    case Op::Fork: {
      f.pc = in.target;
      if (in.fork_starts.empty()) return true;
      t->fork_pending = static_cast<int>(in.fork_starts.size());
      for (size_t start : in.fork_starts) {
        Thread* child = spawn(f.code, start);
        child->parent = t;
        schedule(child);
      }
      return false;
    }
    case Op::ForkEnd:
      finish_thread(t);
      return false;
    case Op::Trigger: {
      ++f.pc;
      Signal* s = in.event;
      s->value = add(s->value, BitVector::from_uint(s->width, 1));
      signal_changed(s);
      return true;
    }
    case Op::Disable: {
      ++f.pc;
      do_disable(t, in);
      return !t->done && !t->frames.empty();
    }
    case Op::Halt:
      finish_thread(t);
      return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// System tasks and formatting

std::string Machine::format_value(char spec, const BitVector& v, bool is_signed, int width,
                                  bool left, const Scope* scope) {
  std::string body;
  char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(spec)));
  auto pad = [&](std::string s, size_t w, char fill) {
    if (s.size() >= w) return s;
    if (left) return s + std::string(w - s.size(), ' ');
    return std::string(w - s.size(), fill) + s;
  };
  switch (lower) {
    case 'd': {
      std::string s;
      if (!v.is_known()) {
        bool allx = v.all_x(), allz = v.all_z();
        bool anyx = false;
        for (uint32_t i = 0; i < v.width(); ++i)
          if (v.get(i) == Bit::X) anyx = true;
        s = allx ? "x" : allz ? "z" : anyx ? "X" : "Z";
      } else {
        s = to_decimal(v, is_signed);
      }
      size_t w = width < 0 ? decimal_width(v.width(), is_signed) : static_cast<size_t>(width);
      return pad(s, w, ' ');
    }
    case 'b':
    case 'o':
    case 'h':
    case 'x': {
      uint32_t bits = lower == 'b' ? 1 : lower == 'o' ? 3 : 4;
      uint32_t groups = (v.width() + bits - 1) / bits;
      for (uint32_t g = groups; g-- > 0;) body.push_back(group_char(v, g * bits, bits));
      if (width == 0) {
        size_t nz = body.find_first_not_of('0');
        body = nz == std::string::npos ? "0" : body.substr(nz);
        return body;
      }
      if (width > 0) return pad(body, static_cast<size_t>(width), left ? ' ' : '0');
      return body;
    }
    case 'c': {
      std::string s(1, static_cast<char>(v.slice(0, 8).to_uint64()));
      return width > 0 ? pad(s, static_cast<size_t>(width), ' ') : s;
    }
    case 's': {
      std::string s = v.to_text();
      return width > 0 ? pad(s, static_cast<size_t>(width), ' ') : s;
    }
    case 't': {
      std::string s;
      if (!v.is_known()) s = "x";
      else s = std::to_string(v.to_uint64() * unit_scale(scope));
      size_t w = width < 0 ? 20 : static_cast<size_t>(width);
      return pad(s, w, ' ');
    }
    case 'e':
    case 'f':
    case 'g': {
      double d = 0;
      if (v.is_known()) {
        d = is_signed ? static_cast<double>(v.resized(64, true).to_int64())
                      : static_cast<double>(v.to_uint64());
      }
      char buf[64];
      std::string f = "%";
      if (width >= 0) f += std::to_string(width);
      f += lower;
      std::snprintf(buf, sizeof buf, f.c_str(), d);
      return buf;
    }
    case 'v': {
      std::string s;
      for (uint32_t i = v.width(); i-- > 0;) {
        Bit b = v.get(i);
        s += b == Bit::Zero ? "St0" : b == Bit::One ? "St1" : b == Bit::X ? "StX" : "HiZ";
        if (i) s += " ";
      }
      return s;
    }
    default:
      return std::string(1, spec);
  }
}

std::string Machine::format_args(const std::vector<CExprPtr>& args, size_t first,
                                 const Scope* scope, char default_base) {
  std::string out;
  size_t i = first;
  while (i < args.size()) {
    const CExpr* a = args[i].get();
    ++i;
    if (!a) {
      out += ' ';
      continue;
    }
    if (!is_literal(a)) {
      bool is_time = a->op == EOp::SysFunc &&
                     (a->name == "$time" || a->name == "$stime" || a->name == "$realtime");
      BitVector v = eval_self(*a);
      out += format_value(is_time ? 't' : default_base, v, a->is_signed, -1, false, scope);
      continue;
    }
    const std::string fmt = a->name.substr(1);
    for (size_t k = 0; k < fmt.size(); ++k) {
      char c = fmt[k];
      if (c != '%') {
        out += c;
        continue;
      }
      ++k;
      if (k >= fmt.size()) break;
      bool left = false;
      if (fmt[k] == '-') {
        left = true;
        ++k;
      }
      int width = -1;
      if (k < fmt.size() && std::isdigit(static_cast<unsigned char>(fmt[k]))) {
        width = 0;
        while (k < fmt.size() && std::isdigit(static_cast<unsigned char>(fmt[k])))
          width = width * 10 + (fmt[k++] - '0');
      }
      if (k < fmt.size() && fmt[k] == '.') {
        ++k;
        while (k < fmt.size() && std::isdigit(static_cast<unsigned char>(fmt[k]))) ++k;
      }
      if (k >= fmt.size()) break;
      char spec = fmt[k];
      if (spec == '%') {
        out += '%';
        continue;
      }
      if (spec == 'm' || spec == 'M') {
        out += scope ? scope->path : "";
        continue;
      }
      if (i >= args.size() || !args[i]) {
        if (i < args.size()) ++i;
        continue;
      }
      const CExpr* v = args[i++].get();
      BitVector val = is_literal(v) ? v->value : eval_self(*v);
      out += format_value(spec, val, v->is_signed, width, left, scope);
    }
  }
  return out;
}

std::string Machine::monitor_key() {
  std::string key;
  for (const auto& a : monitor_->args) {
    if (!a || is_literal(a.get())) continue;
    if (a->op == EOp::SysFunc && (a->name == "$time" || a->name == "$stime" || a->name == "$realtime"))
      continue;
    key += eval_self(*a).to_bit_string();
    key += '|';
  }
  return key;
}

void Machine::read_mem(const Instr& in, bool hex) {
  if (in.args.size() < 2 || !in.args[0] || !in.args[1]) return;
  std::string file = is_literal(in.args[0].get()) ? in.args[0]->name.substr(1)
                                                  : eval_self(*in.args[0]).to_text();
  Signal* mem = in.args[1]->sig;
  std::ifstream f(file);
  const char* task = hex ? "$readmemh" : "$readmemb";
  if (!f) {
    out_ << "WARNING: " << in.loc.file_name() << ":" << in.loc.line << ": " << task
         << ": Unable to open " << file << " for reading.\n";
    return;
  }
  std::stringstream ss;
  ss << f.rdbuf();
  std::string text = ss.str();
  int64_t addr = mem->arr_first;
  if (in.args.size() > 2 && in.args[2]) {
    BitVector s = eval_self(*in.args[2]);
    if (s.is_known()) addr = static_cast<int64_t>(s.to_uint64());
  }
  int64_t step = mem->arr_first <= mem->arr_last ? 1 : -1;
  size_t p = 0;
  while (p < text.size()) {
    char c = text[p];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++p;
      continue;
    }
    if (c == '/' && p + 1 < text.size() && text[p + 1] == '/') {
      while (p < text.size() && text[p] != '\n') ++p;
      continue;
    }
    if (c == '/' && p + 1 < text.size() && text[p + 1] == '*') {
      size_t e = text.find("*/", p + 2);
      p = e == std::string::npos ? text.size() : e + 2;
      continue;
    }
    size_t start = p;
    while (p < text.size() && !std::isspace(static_cast<unsigned char>(text[p]))) ++p;
    std::string tok = text.substr(start, p - start);
    tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
    if (tok.empty()) continue;
    if (tok[0] == '@') {
      addr = static_cast<int64_t>(std::stoull(tok.substr(1), nullptr, 16));
      continue;
    }
    std::string bits;
    for (char d : tok) {
      char l = static_cast<char>(std::tolower(static_cast<unsigned char>(d)));
      if (hex) {
        if (l == 'x' || l == 'z') {
          bits.append(4, l);
          continue;
        }
        unsigned v = std::isdigit(static_cast<unsigned char>(l)) ? l - '0' : l - 'a' + 10;
        for (int b = 3; b >= 0; --b) bits.push_back((v >> b) & 1 ? '1' : '0');
      } else {
        bits.push_back(l);
      }
    }
    int64_t off = mem->word_offset(addr);
    if (off >= 0) {
      mem->words[static_cast<size_t>(off)] = BitVector::from_bits(bits).resized(mem->width, false);
      ++mem->writes;
    }
    addr += step;
  }
  signal_changed(mem);
}

void Machine::system_task(Thread* t, const Instr& in) {
  (void)t;
  const std::string& n = in.name;
  auto base_of = [](const std::string& name) {
    char last = name.back();
    if (last == 'b' || last == 'h' || last == 'o') return last;
    return 'd';
  };
  if (n.rfind("$display", 0) == 0) {
    out_ << format_args(in.args, 0, in.scope, base_of(n)) << '\n';
    return;
  }
  if (n.rfind("$write", 0) == 0) {
    out_ << format_args(in.args, 0, in.scope, base_of(n));
    return;
  }
  if (n == "$strobe") {
    strobes_.emplace_back(&in, t);
    return;
  }
  if (n == "$monitor") {
    monitor_ = &in;
    monitor_fresh_ = true;
    return;
  }
  if (n == "$monitoron") {
    monitor_on_ = true;
    monitor_fresh_ = true;
    return;
  }
  if (n == "$monitoroff") {
    monitor_on_ = false;
    return;
  }
  if (n == "$finish" || n == "$stop") {
    int level = 1;
    if (!in.args.empty() && in.args[0]) {
      BitVector v = eval_self(*in.args[0]);
      if (v.is_known()) level = static_cast<int>(v.to_uint64());
    }
    if (level > 0) {
      out_ << in.loc.file_name() << ":" << in.loc.line << ": " << n << " called at " << now_ << " ("
           << unit_text(m_.global_prec) << ")\n";
    }
    finished_ = true;
    return;
  }
  if (n == "$dumpfile") {
    std::string file = "dump.vcd";
    if (!in.args.empty() && in.args[0])
      file = is_literal(in.args[0].get()) ? in.args[0]->name.substr(1) : eval_self(*in.args[0]).to_text();
    std::ofstream f(file);
    if (f) f << "$date\n$end\n$timescale\n  " << unit_text(m_.global_prec) << "\n$end\n";
    out_ << "VCD info: dumpfile " << file << " opened for output.\n";
    return;
  }
  if (n == "$fdisplay" || n == "$fwrite" || n == "$fstrobe") {
    if (in.args.empty() || !in.args[0]) return;
    uint32_t fd = static_cast<uint32_t>(eval_self(*in.args[0]).to_uint64());
    std::string text = format_args(in.args, 1, in.scope, 'd');
    if (n != "$fwrite") text += '\n';
    if (fd == 1 || fd == 0x80000001u || fd == 0x80000002u) {
      out_ << text;
      return;
    }
    auto it = files_.find(fd);
    if (it != files_.end()) *it->second << text;
    return;
  }
  if (n == "$fclose") {
    if (in.args.empty() || !in.args[0]) return;
    files_.erase(static_cast<uint32_t>(eval_self(*in.args[0]).to_uint64()));
    return;
  }
  if (n == "$readmemh" || n == "$readmemb") {
    read_mem(in, n == "$readmemh");
    return;
  }
  if (n == "$random") {
    random_seed_ = random_seed_ * 69069u + 1u;
    return;
  }
  // $dumpvars, $timeformat, $fflush and friends have no observable effect here.
}

void Machine::postponed() {
  auto strobes = std::move(strobes_);
  strobes_.clear();
  for (const auto& [in, t] : strobes) out_ << format_args(in->args, 0, in->scope, 'd') << '\n';
  if (monitor_ && monitor_on_) {
    std::string key = monitor_key();
    if (monitor_fresh_ || key != monitor_key_) {
      out_ << format_args(monitor_->args, 0, monitor_->scope, 'd') << '\n';
      monitor_key_ = key;
      monitor_fresh_ = false;
    }
  }
}

int Machine::run() {
  for (auto& [sig, v] : m_.initial_values) sig->value = v;
  for (auto& d : m_.drivers) {
    d->pending = true;
    Event ev{Event::Kind::Driver};
    ev.driver = d.get();
    active_.push_back(std::move(ev));
  }
  for (auto& code : m_.processes) schedule(spawn(code.get(), 0));

  while (!finished_) {
    if (!active_.empty()) {
      Event ev = std::move(active_.front());
      active_.pop_front();
      switch (ev.kind) {
        case Event::Kind::Thread:
          if (ev.thread->done || ev.gen != ev.thread->gen) break;
          run_thread(ev.thread);
          break;
        case Event::Kind::Driver:
          evaluate_driver(ev.driver);
          break;
        case Event::Kind::DriverValue:
          apply_driver_value(ev.driver, ev.value);
          break;
      }
      continue;
    }
    if (!inactive_.empty()) {
      while (!inactive_.empty()) {
        active_.push_back(std::move(inactive_.front()));
        inactive_.pop_front();
      }
      continue;
    }
    if (!nba_.empty()) {
      auto batch = std::move(nba_);
      nba_.clear();
      for (auto& u : batch) write_targets(u.targets, u.value);
      continue;
    }
    postponed();
    if (finished_ || future_.empty()) break;
    auto it = future_.begin();
    now_ = it->first;
    Slot slot = std::move(it->second);
    future_.erase(it);
    for (auto& ev : slot.active) active_.push_back(std::move(ev));
    for (auto& u : slot.nba) nba_.push_back(std::move(u));
  }
  out_.flush();
  return exit_status_;
}

}  // namespace hwloop::sim
