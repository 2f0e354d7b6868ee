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

#include "hwloop/hdl_parse.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <regex>
#include <set>

#include "hwloop/errors.hpp"
#include "text.hpp"

namespace hwloop {

namespace {

// ---------------------------------------------------------------------------
// A forgiving Verilog tokenizer. Never throws; unknown characters become
// single-character punctuation.

enum class T { Ident, Number, String, Punct };

struct Tok {
  T kind;
  std::string text;
  std::size_t offset;
};

struct Lexed {
  std::vector<Tok> toks;
  bool open_comment = false;
  bool open_string = false;
};

const char* kPuncts[] = {"<<<=", ">>>=", "===", "!==", "<<<", ">>>", "<<=", ">>=", "**", "<<",
                         ">>",   "<=",   ">=",  "==",  "!=",  "&&",  "||",  "++",  "--", "+=",
                         "-=",   "*=",   "/=",  "|=",  "&=",  "^=",  "+:",  "-:",  "->", "::",
                         "~&",   "~|",   "~^",  "^~"};

Lexed lex(std::string_view s) {
  Lexed out;
  std::size_t i = 0, n = s.size();
  while (i < n) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && s[i + 1] == '/') {
      while (i < n && s[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && s[i + 1] == '*') {
      std::size_t e = s.find("*/", i + 2);
      if (e == std::string_view::npos) {
        out.open_comment = true;
        break;
      }
      i = e + 2;
      continue;
    }
    if (c == '(' && i + 1 < n && s[i + 1] == '*' && (i + 2 >= n || s[i + 2] != ')')) {
      std::size_t e = s.find("*)", i + 2);
      if (e != std::string_view::npos) {
        i = e + 2;
        continue;
      }
    }
    if (c == '`') {
      // Directives are skipped to end of line; macro uses become identifiers.
      std::size_t j = i + 1;
      while (j < n && text::is_ident_char(s[j])) ++j;
      std::string word(s.substr(i + 1, j - i - 1));
      static const std::set<std::string> line_directives = {
          "timescale", "define", "include", "ifdef", "ifndef", "else", "elsif", "endif",
          "undef", "default_nettype", "resetall", "celldefine", "endcelldefine"};
      if (line_directives.count(word)) {
        while (i < n && s[i] != '\n') ++i;
      } else {
        out.toks.push_back({T::Ident, std::string(s.substr(i, j - i)), i});
        i = j;
      }
      continue;
    }
    if (c == '"') {
      std::size_t j = i + 1;
      while (j < n && s[j] != '"' && s[j] != '\n') {
        if (s[j] == '\\') ++j;
        ++j;
      }
      if (j >= n || s[j] != '"') {
        out.open_string = j >= n;
        out.toks.push_back({T::String, std::string(s.substr(i, std::min(j, n) - i)), i});
        i = std::min(j, n);
        continue;
      }
      out.toks.push_back({T::String, std::string(s.substr(i, j + 1 - i)), i});
      i = j + 1;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t j = i;
      while (j < n && text::is_ident_char(s[j])) ++j;
      out.toks.push_back({T::Ident, std::string(s.substr(i, j - i)), i});
      i = j;
      continue;
    }
    if (c == '\\') {
      std::size_t j = i;
      while (j < n && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      out.toks.push_back({T::Ident, std::string(s.substr(i + 1, j - i - 1)), i});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '\'' && i + 1 < n)) {
      std::size_t j = i;
      while (j < n && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      std::size_t k = j;
      while (k < n && (s[k] == ' ' || s[k] == '\t')) ++k;
      if (k < n && s[k] == '\'') {
        std::size_t b = k + 1;
        if (b < n && (s[b] == 's' || s[b] == 'S')) ++b;
        if (b < n && std::strchr("bBoOdDhH", s[b])) {
          ++b;
          while (b < n && (s[b] == ' ' || s[b] == '\t')) ++b;
          while (b < n && (std::isxdigit(static_cast<unsigned char>(s[b])) || s[b] == '_' ||
                           std::strchr("xXzZ?", s[b])))
            ++b;
          out.toks.push_back({T::Number, std::string(s.substr(i, b - i)), i});
          i = b;
          continue;
        }
        if (j == i && b < n && std::strchr("01xXzZ", s[b])) {
          // '0 / '1 fill literal
          out.toks.push_back({T::Number, std::string(s.substr(i, b + 1 - i)), i});
          i = b + 1;
          continue;
        }
      }
      if (j == i) {
        out.toks.push_back({T::Punct, "'", i});
        ++i;
        continue;
      }
      if (j < n && s[j] == '.' && j + 1 < n && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        ++j;
        while (j < n && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      }
      out.toks.push_back({T::Number, std::string(s.substr(i, j - i)), i});
      i = j;
      continue;
    }
    bool matched = false;
    for (const char* p : kPuncts) {
      std::size_t len = std::strlen(p);
      if (s.substr(i, len) == p) {
        out.toks.push_back({T::Punct, p, i});
        i += len;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    out.toks.push_back({T::Punct, std::string(1, c), i});
    ++i;
  }
  return out;
}

bool is_word(const Tok& t, std::string_view w) { return t.kind == T::Ident && t.text == w; }

int line_of(std::string_view s, std::size_t offset) {
  return 1 + static_cast<int>(std::count(s.begin(), s.begin() + std::min(offset, s.size()), '\n'));
}

struct Balance {
  int module = 0, begin = 0, kase = 0, fork = 0, function = 0, task = 0, generate = 0;
  bool any_negative = false;

  void feed(const Tok& t) {
    if (t.kind != T::Ident) return;
    const std::string& w = t.text;
    auto bump = [&](int& counter, int d) {
      counter += d;
      if (counter < 0) any_negative = true;
    };
    if (w == "module" || w == "macromodule") bump(module, 1);
    else if (w == "endmodule") bump(module, -1);
    else if (w == "begin") bump(begin, 1);
    else if (w == "end") bump(begin, -1);
    else if (w == "case" || w == "casez" || w == "casex") bump(kase, 1);
    else if (w == "endcase") bump(kase, -1);
    else if (w == "fork") bump(fork, 1);
    else if (w == "join" || w == "join_any" || w == "join_none") bump(fork, -1);
    else if (w == "function") bump(function, 1);
    else if (w == "endfunction") bump(function, -1);
    else if (w == "task") bump(task, 1);
    else if (w == "endtask") bump(task, -1);
    else if (w == "generate") bump(generate, 1);
    else if (w == "endgenerate") bump(generate, -1);
  }
  bool open() const {
    return module > 0 || begin > 0 || kase > 0 || fork > 0 || function > 0 || task > 0 ||
           generate > 0;
  }
  bool balanced() const { return !open() && !any_negative && module == 0; }
};

struct RawBlock {
  CodeBlock block;
  bool closed = true;
};

std::vector<RawBlock> extract_raw(std::string_view message, int origin) {
  std::vector<RawBlock> out;
  auto lines = text::split_lines(message);
  bool any_fence = false;
  bool in_fence = false;
  RawBlock cur;
  for (const auto& line : lines) {
    std::string t = text::trim(line);
    if (t.rfind("```", 0) == 0) {
      any_fence = true;
      if (!in_fence) {
        in_fence = true;
        cur = RawBlock{};
        cur.block.fenced = true;
        cur.block.origin_message_index = origin;
        std::string tag = text::trim(t.substr(3));
        if (!tag.empty()) cur.block.declared_language_tag = tag;
      } else {
        in_fence = false;
        if (!text::trim(cur.block.text).empty()) out.push_back(cur);
      }
      continue;
    }
    if (in_fence) cur.block.text += line + "\n";
  }
  if (in_fence) {
    cur.closed = false;
    if (!text::trim(cur.block.text).empty()) out.push_back(cur);
  }
  if (any_fence) return out;

  static const std::regex header(R"(\b(module|macromodule)\s+[A-Za-z_][A-Za-z0-9_$]*\s*(#|\(|;))");
  std::string msg(message);
  std::smatch m;
  if (!std::regex_search(msg, m, header)) return out;
  std::size_t begin = static_cast<std::size_t>(m.position(0));
  std::size_t line_start = msg.rfind('\n', begin);
  line_start = line_start == std::string::npos ? 0 : line_start + 1;
  if (text::trim(msg.substr(line_start, begin - line_start)).empty()) begin = line_start;
  std::size_t end = msg.size();
  std::size_t last = msg.rfind("endmodule");
  if (last != std::string::npos && last > begin) {
    end = last + 9;
    std::size_t nl = msg.find('\n', end);
    end = nl == std::string::npos ? msg.size() : nl + 1;
  }
  RawBlock rb;
  rb.block.text = msg.substr(begin, end - begin);
  rb.block.fenced = false;
  rb.block.origin_message_index = origin;
  if (!text::trim(rb.block.text).empty()) out.push_back(rb);
  return out;
}

// ---------------------------------------------------------------------------
// Constant expressions in port ranges.

struct ConstEval {
  const std::vector<Tok>& toks;
  std::size_t pos;
  std::size_t end;
  const std::map<std::string, int64_t>& params;
  bool ok = true;

  const Tok* peek() const { return pos < end ? &toks[pos] : nullptr; }
  bool at(std::string_view p) const {
    return pos < end && toks[pos].kind == T::Punct && toks[pos].text == p;
  }

  int64_t parse() { return ternary(); }

  int64_t ternary() {
    int64_t c = binary(0);
    if (at("?")) {
      ++pos;
      int64_t a = ternary();
      if (!at(":")) {
        ok = false;
        return 0;
      }
      ++pos;
      int64_t b = ternary();
      return c ? a : b;
    }
    return c;
  }

  static int prec(const std::string& op) {
    static const std::map<std::string, int> table = {
        {"||", 1}, {"&&", 2}, {"|", 3},  {"^", 4},  {"&", 5},  {"==", 6}, {"!=", 6},
        {"<", 7},  {">", 7},  {"<=", 7}, {">=", 7}, {"<<", 8}, {">>", 8}, {"+", 9},
        {"-", 9},  {"*", 10}, {"/", 10}, {"%", 10}, {"**", 11}};
    auto it = table.find(op);
    return it == table.end() ? -1 : it->second;
  }

  int64_t binary(int min_prec) {
    int64_t lhs = unary();
    while (ok && pos < end && toks[pos].kind == T::Punct) {
      std::string op = toks[pos].text;
      int p = prec(op);
      if (p < 0 || p < min_prec) break;
      ++pos;
      int64_t rhs = binary(op == "**" ? p : p + 1);
      lhs = apply(op, lhs, rhs);
    }
    return lhs;
  }

  int64_t apply(const std::string& op, int64_t a, int64_t b) {
    if (op == "+") return a + b;
    if (op == "-") return a - b;
    if (op == "*") return a * b;
    if ((op == "/" || op == "%") && b == 0) {
      ok = false;
      return 0;
    }
    if (op == "/") return a / b;
    if (op == "%") return a % b;
    if (op == "**") {
      int64_t r = 1;
      for (int64_t i = 0; i < b && i < 64; ++i) r *= a;
      return r;
    }
    if (op == "<<") return b >= 63 ? 0 : a << b;
    if (op == ">>") return b >= 63 ? 0 : a >> b;
    if (op == "<") return a < b;
    if (op == ">") return a > b;
    if (op == "<=") return a <= b;
    if (op == ">=") return a >= b;
    if (op == "==") return a == b;
    if (op == "!=") return a != b;
    if (op == "&") return a & b;
    if (op == "|") return a | b;
    if (op == "^") return a ^ b;
    if (op == "&&") return a && b;
    if (op == "||") return a || b;
    ok = false;
    return 0;
  }

  int64_t unary() {
    if (at("-")) return ++pos, -unary();
    if (at("+")) return ++pos, unary();
    if (at("!")) return ++pos, !unary();
    if (at("~")) return ++pos, ~unary();
    return primary();
  }

  int64_t primary() {
    const Tok* t = peek();
    if (!t) {
      ok = false;
      return 0;
    }
    if (at("(")) {
      ++pos;
      int64_t v = ternary();
      if (!at(")")) ok = false;
      else ++pos;
      return v;
    }
    if (t->kind == T::Number) {
      ++pos;
      return number(t->text);
    }
    if (t->kind == T::Ident) {
      ++pos;
      if (t->text == "$clog2" && at("(")) {
        ++pos;
        int64_t v = ternary();
        if (!at(")")) ok = false;
        else ++pos;
        int64_t r = 0;
        while (r < 63 && (int64_t{1} << r) < v) ++r;
        return r;
      }
      auto it = params.find(t->text);
      if (it == params.end()) {
        ok = false;
        return 0;
      }
      return it->second;
    }
    ok = false;
    return 0;
  }

  int64_t number(const std::string& s) {
    std::string digits;
    int base = 10;
    auto q = s.find('\'');
    std::string body = q == std::string::npos ? s : s.substr(q + 1);
    if (q != std::string::npos) {
      if (!body.empty() && (body[0] == 's' || body[0] == 'S')) body = body.substr(1);
      if (body.empty()) {
        ok = false;
        return 0;
      }
      char b = static_cast<char>(std::tolower(static_cast<unsigned char>(body[0])));
      base = b == 'b' ? 2 : b == 'o' ? 8 : b == 'h' ? 16 : 10;
      body = body.substr(1);
    }
    for (char c : body)
      if (c != '_' && !std::isspace(static_cast<unsigned char>(c))) digits += c;
    if (digits.empty() || digits.find_first_of("xXzZ?.") != std::string::npos) {
      ok = false;
      return 0;
    }
    try {
      return static_cast<int64_t>(std::stoull(digits, nullptr, base));
    } catch (...) {
      ok = false;
      return 0;
    }
  }
};

// ---------------------------------------------------------------------------
// Header parsing.

class HeaderParser {
 public:
  HeaderParser(const std::vector<Tok>& toks, std::size_t start, std::size_t source_size)
      : t_(toks), pos_(start), size_(source_size) {}

  InterfaceDesc parse() {
    InterfaceDesc d;
    d.offset = t_[pos_].offset;
    ++pos_;  // module
    if (!cur() || cur()->kind != T::Ident) fail("expected module name");
    d.module_name = cur()->text;
    ++pos_;
    if (punct("#")) {
      ++pos_;
      expect("(");
      header_params();
    }
    std::vector<std::string> order;
    bool ansi = false;
    if (punct("(")) {
      ++pos_;
      if (punct(")")) {
        ++pos_;
      } else if (cur() && is_dir(*cur())) {
        ansi = true;
        ansi_ports(d);
      } else {
        plain_port_list(order);
      }
    }
    expect(";");
    if (!ansi) body_ports(d, order);
    std::set<std::string> seen;
    for (const auto& p : d.ports)
      if (!seen.insert(p.name).second) fail("duplicate port " + p.name);
    return d;
  }

 private:
  const Tok* cur() const { return pos_ < t_.size() ? &t_[pos_] : nullptr; }
  bool punct(std::string_view p) const {
    return cur() && cur()->kind == T::Punct && cur()->text == p;
  }
  bool word(std::string_view w) const { return cur() && is_word(*cur(), w); }
  static bool is_dir(const Tok& t) {
    return is_word(t, "input") || is_word(t, "output") || is_word(t, "inout");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, cur() ? cur()->offset : size_);
  }
  void expect(std::string_view p) {
    if (!punct(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }

  // Index of the token ending the expression starting at pos_, stopping at
  // any of `stops` at nesting depth zero.
  std::size_t expr_end(std::initializer_list<std::string_view> stops) const {
    int depth = 0;
    for (std::size_t i = pos_; i < t_.size(); ++i) {
      const Tok& t = t_[i];
      if (t.kind == T::Punct) {
        if (depth == 0)
          for (auto s : stops)
            if (t.text == s) return i;
        if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
        if (t.text == ")" || t.text == "]" || t.text == "}") {
          if (depth == 0) return i;
          --depth;
        }
      }
      if (t.kind == T::Ident && (t.text == "endmodule" || t.text == "module")) return i;
    }
    return t_.size();
  }

  int64_t eval_until(std::size_t end) {
    ConstEval ev{t_, pos_, end, params_};
    int64_t v = ev.parse();
    if (!ev.ok || ev.pos != end) fail("cannot evaluate constant expression");
    pos_ = end;
    return v;
  }

  void skip_type_words(bool& is_reg, bool& is_integer) {
    static const std::set<std::string> nets = {"wire", "tri", "tri0", "tri1", "wand", "wor",
                                               "supply0", "supply1", "uwire", "var", "logic"};
    while (cur() && cur()->kind == T::Ident) {
      const std::string& w = cur()->text;
      if (w == "reg") is_reg = true;
      else if (w == "integer" || w == "int") {
        is_reg = true;
        is_integer = true;
      } else if (w != "signed" && w != "unsigned" && !nets.count(w)) {
        break;
      }
      ++pos_;
    }
  }

  std::optional<int> range() {
    if (!punct("[")) return std::nullopt;
    ++pos_;
    int64_t msb = eval_until(expr_end({":"}));
    expect(":");
    int64_t lsb = eval_until(expr_end({"]"}));
    expect("]");
    int64_t w = msb > lsb ? msb - lsb + 1 : lsb - msb + 1;
    if (w < 1 || w > (1 << 20)) fail("invalid port width");
    return static_cast<int>(w);
  }

  void param_assignments() {
    // [type] [signed] [range] name = expr {, name = expr}
    while (cur() && cur()->kind == T::Ident &&
           (cur()->text == "integer" || cur()->text == "signed" || cur()->text == "real" ||
            cur()->text == "unsigned"))
      ++pos_;
    if (punct("[")) {
      std::size_t close = expr_end({"]"});
      pos_ = close + 1;
    }
    while (true) {
      if (!cur() || cur()->kind != T::Ident) fail("expected parameter name");
      std::string name = cur()->text;
      ++pos_;
      expect("=");
      std::size_t end = expr_end({",", ";"});
      ConstEval ev{t_, pos_, end, params_};
      int64_t v = ev.parse();
      if (ev.ok && ev.pos == end) params_[name] = v;
      pos_ = end;
      if (!punct(",")) break;
      // A following `parameter` keyword starts a new declaration.
      if (pos_ + 1 < t_.size() && (is_word(t_[pos_ + 1], "parameter") || is_word(t_[pos_ + 1], "localparam")))
        break;
      ++pos_;
    }
  }

  void header_params() {
    while (!punct(")")) {
      if (word("parameter") || word("localparam")) ++pos_;
      param_assignments();
      if (punct(",")) ++pos_;
      else if (!punct(")")) fail("expected ',' or ')' in parameter list");
    }
    ++pos_;
  }

  void ansi_ports(InterfaceDesc& d) {
    Direction dir = Direction::Input;
    bool is_reg = false;
    int width = 1;
    while (true) {
      if (cur() && is_dir(*cur())) {
        dir = cur()->text == "input" ? Direction::Input
              : cur()->text == "output" ? Direction::Output
                                        : Direction::Inout;
        ++pos_;
        is_reg = false;
        bool is_integer = false;
        skip_type_words(is_reg, is_integer);
        auto w = range();
        width = w ? *w : is_integer ? 32 : 1;
      }
      if (!cur() || cur()->kind != T::Ident) fail("expected port name");
      d.ports.push_back({cur()->text, dir, width, is_reg});
      ++pos_;
      while (punct("[")) pos_ = expr_end({"]"}) + 1;  // unpacked dimensions
      if (punct("=")) pos_ = expr_end({",", ")"});
      if (punct(",")) {
        ++pos_;
        continue;
      }
      expect(")");
      return;
    }
  }

  void plain_port_list(std::vector<std::string>& order) {
    while (true) {
      if (punct(".")) {
        // .name(expr) style external names
        ++pos_;
        if (!cur() || cur()->kind != T::Ident) fail("expected port name");
        order.push_back(cur()->text);
        ++pos_;
        expect("(");
        pos_ = expr_end({")"}) + 1;
      } else {
        if (!cur() || cur()->kind != T::Ident) fail("expected port name");
        order.push_back(cur()->text);
        ++pos_;
        if (punct("[")) pos_ = expr_end({"]"}) + 1;
      }
      if (punct(",")) {
        ++pos_;
        continue;
      }
      expect(")");
      return;
    }
  }

  // Port and reg declarations in a non-ANSI module body. Statements that do
  // not parse are skipped.
  void body_ports(InterfaceDesc& d, const std::vector<std::string>& order) {
    std::map<std::string, PortDesc> found;
    std::set<std::string> regs;
    std::map<std::string, int> reg_width;
    int depth = 0;  // function/task nesting
    while (cur()) {
      const Tok& t = *cur();
      if (is_word(t, "endmodule") || is_word(t, "module") || is_word(t, "macromodule")) break;
      if (is_word(t, "function") || is_word(t, "task")) {
        ++depth;
        ++pos_;
        continue;
      }
      if (is_word(t, "endfunction") || is_word(t, "endtask")) {
        --depth;
        ++pos_;
        continue;
      }
      std::size_t stmt_start = pos_;
      try {
        if (depth == 0 && (is_word(t, "parameter") || is_word(t, "localparam"))) {
          ++pos_;
          param_assignments();
        } else if (depth == 0 && is_dir(t)) {
          Direction dir = t.text == "input" ? Direction::Input
                          : t.text == "output" ? Direction::Output
                                               : Direction::Inout;
          ++pos_;
          bool is_reg = false, is_integer = false;
          skip_type_words(is_reg, is_integer);
          auto w = range();
          int width = w ? *w : is_integer ? 32 : 1;
          while (cur() && cur()->kind == T::Ident) {
            found[cur()->text] = {cur()->text, dir, width, is_reg};
            ++pos_;
            if (!punct(",")) break;
            ++pos_;
          }
        } else if (depth == 0 && (is_word(t, "reg") || is_word(t, "integer"))) {
          bool integer = is_word(t, "integer");
          ++pos_;
          bool is_reg = true, is_integer = integer;
          skip_type_words(is_reg, is_integer);
          auto w = range();
          while (cur() && cur()->kind == T::Ident) {
            regs.insert(cur()->text);
            reg_width[cur()->text] = w ? *w : is_integer ? 32 : 1;
            ++pos_;
            while (punct("[")) pos_ = expr_end({"]"}) + 1;
            if (punct("=")) pos_ = expr_end({",", ";"});
            if (!punct(",")) break;
            ++pos_;
          }
        }
      } catch (const ParseError&) {
        pos_ = stmt_start;
      }
      // Advance to the next statement boundary.
      if (pos_ == stmt_start) ++pos_;
      while (cur() && !punct(";") && !is_word(*cur(), "endmodule") && !is_word(*cur(), "module") &&
             !is_word(*cur(), "function") && !is_word(*cur(), "task") &&
             !is_word(*cur(), "endfunction") && !is_word(*cur(), "endtask"))
        ++pos_;
      if (punct(";")) ++pos_;
    }
    for (const auto& name : order) {
      auto it = found.find(name);
      PortDesc p = it != found.end() ? it->second : PortDesc{name, Direction::Input, 1, false};
      if (regs.count(name)) {
        p.is_reg = true;
        if (it == found.end()) p.width = reg_width[name];
      }
      d.ports.push_back(p);
    }
  }

  const std::vector<Tok>& t_;
  std::size_t pos_;
  std::size_t size_;
  std::map<std::string, int64_t> params_;
};

}  // namespace

// ---------------------------------------------------------------------------

std::vector<CodeBlock> extract_code_blocks(std::string_view message, int origin_message_index) {
  std::vector<CodeBlock> out;
  for (auto& rb : extract_raw(message, origin_message_index)) out.push_back(std::move(rb.block));
  return out;
}

bool detect_truncation(std::string_view message) {
  auto blocks = extract_raw(message, 0);
  if (blocks.empty()) return false;
  Balance bal;
  std::string all;
  for (const auto& b : blocks) {
    if (!b.closed) return true;
    all += b.block.text;
  }
  Lexed lx = lex(all);
  if (lx.open_comment) return true;
  for (const auto& t : lx.toks) bal.feed(t);
  return bal.open();
}

std::vector<ModuleSpan> module_spans(std::string_view source) {
  std::vector<ModuleSpan> out;
  Lexed lx = lex(source);
  const auto& toks = lx.toks;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!is_word(toks[i], "module") && !is_word(toks[i], "macromodule")) continue;
    ModuleSpan span;
    span.begin = toks[i].offset;
    std::size_t ls = source.rfind('\n', span.begin == 0 ? 0 : span.begin - 1);
    std::size_t line_start = (span.begin == 0 || ls == std::string_view::npos) ? 0 : ls + 1;
    if (text::trim(source.substr(line_start, span.begin - line_start)).empty()) span.begin = line_start;
    if (i + 1 < toks.size() && toks[i + 1].kind == T::Ident) span.name = toks[i + 1].text;
    span.end = source.size();
    std::size_t j = i + 1;
    for (; j < toks.size(); ++j) {
      if (is_word(toks[j], "endmodule")) {
        span.complete = true;
        span.end = toks[j].offset + 9;
        std::size_t nl = source.find('\n', span.end);
        std::string_view rest = source.substr(span.end, (nl == std::string_view::npos ? source.size() : nl) - span.end);
        if (text::trim(rest).empty()) span.end = nl == std::string_view::npos ? source.size() : nl + 1;
        break;
      }
      if (is_word(toks[j], "module") || is_word(toks[j], "macromodule")) {
        span.end = toks[j].offset;
        --j;
        break;
      }
    }
    out.push_back(span);
    i = j < toks.size() ? j : toks.size();
  }
  return out;
}

std::string assemble_design(const std::vector<CodeBlock>& parts) {
  if (parts.empty()) throw AssemblyError("no code to assemble");
  std::string result;
  if (parts.size() == 1) {
    result = parts[0].text;
  } else {
    auto lines = text::split_lines(parts[0].text);
    bool trailing_newline = !parts[0].text.empty() && parts[0].text.back() == '\n';
    for (std::size_t p = 1; p < parts.size(); ++p) {
      auto next = text::split_lines(parts[p].text);
      std::size_t best = 0;
      std::size_t limit = std::min(lines.size(), next.size());
      for (std::size_t k = limit; k >= 1; --k) {
        bool same = true, all_blank = true;
        for (std::size_t i = 0; i < k && same; ++i) {
          std::string a = text::trim(lines[lines.size() - k + i]);
          std::string b = text::trim(next[i]);
          if (a != b) same = false;
          if (!a.empty()) all_blank = false;
        }
        if (same && !all_blank) {
          best = k;
          break;
        }
      }
      if (best == 0 && !lines.empty() && !next.empty()) {
        // A cut mid-line is usually restarted in full by the continuation.
        std::string tail = text::trim(lines.back());
        std::string head = text::trim(next.front());
        if (!tail.empty() && head.size() > tail.size() && head.compare(0, tail.size(), tail) == 0)
          lines.pop_back();
      }
      lines.insert(lines.end(), next.begin() + static_cast<std::ptrdiff_t>(best), next.end());
      trailing_newline = !parts[p].text.empty() && parts[p].text.back() == '\n';
    }
    result = text::join(lines, "\n");
    if (trailing_newline) result += "\n";
  }

  // Later complete definitions replace earlier ones of the same name.
  auto spans = module_spans(result);
  std::vector<std::pair<std::size_t, std::size_t>> drop;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (std::size_t j = i + 1; j < spans.size(); ++j) {
      if (spans[j].name == spans[i].name && spans[j].complete) {
        drop.emplace_back(spans[i].begin, spans[i].end);
        break;
      }
    }
  }
  for (auto it = drop.rbegin(); it != drop.rend(); ++it) result.erase(it->first, it->second - it->first);

  spans = module_spans(result);
  if (spans.empty()) throw AssemblyError("no module definition found");
  for (const auto& s : spans)
    if (!s.complete) throw AssemblyError("module " + s.name + " has no endmodule");
  Balance bal;
  Lexed lx = lex(result);
  if (lx.open_comment) throw AssemblyError("unterminated comment");
  for (const auto& t : lx.toks) bal.feed(t);
  if (!bal.balanced()) throw AssemblyError("unbalanced block structure");
  return result;
}

const PortDesc* InterfaceDesc::find(std::string_view name) const {
  for (const auto& p : ports)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<InterfaceDesc> parse_module_interface(std::string_view source) {
  Lexed lx = lex(source);
  std::vector<InterfaceDesc> out;
  std::optional<ParseError> first_error;
  for (std::size_t i = 0; i < lx.toks.size(); ++i) {
    if (!is_word(lx.toks[i], "module") && !is_word(lx.toks[i], "macromodule")) continue;
    try {
      HeaderParser hp(lx.toks, i, source.size());
      out.push_back(hp.parse());
    } catch (const ParseError& e) {
      if (!first_error) first_error = e;
    }
  }
  if (out.empty()) {
    if (first_error) throw *first_error;
    throw NotFoundError("no module found");
  }
  return out;
}

std::string emit_module_header(const InterfaceDesc& desc) {
  std::string out = "module " + desc.module_name + " (\n";
  for (std::size_t i = 0; i < desc.ports.size(); ++i) {
    const auto& p = desc.ports[i];
    out += "    " + to_string(p.direction) + (p.is_reg ? " reg" : " wire");
    if (p.width > 1) out += " [" + std::to_string(p.width - 1) + ":0]";
    out += " " + p.name;
    out += i + 1 < desc.ports.size() ? ",\n" : "\n";
  }
  out += ");\nendmodule\n";
  return out;
}

std::string ConformanceReport::summary() const {
  if (conforms && extra.empty()) return "interface conforms";
  std::vector<std::string> parts;
  for (const auto& m : missing) parts.push_back("missing " + to_string(m.direction) + " " + m.name);
  for (const auto& w : width_mismatches)
    parts.push_back(w.port + ": expected " + std::to_string(w.expected) + " bits, found " +
                    std::to_string(w.found));
  for (const auto& d : direction_mismatches) parts.push_back(d + ": wrong direction");
  for (const auto& e : extra) parts.push_back("extra port " + e);
  return (conforms ? "interface conforms; " : "interface does not conform: ") + text::join(parts, "; ");
}

ConformanceReport check_interface(const InterfaceDesc& found, const InterfaceSpec& spec,
                                  const CheckOptions& options) {
  ConformanceReport r;
  r.module_name = found.module_name;
  std::vector<bool> used(found.ports.size(), false);
  std::vector<int> match(spec.ports.size(), -1);

  auto try_match = [&](const std::function<bool(const PortSpec&, const PortDesc&)>& eq) {
    for (std::size_t s = 0; s < spec.ports.size(); ++s) {
      if (match[s] >= 0) continue;
      for (std::size_t f = 0; f < found.ports.size(); ++f) {
        if (used[f] || !eq(spec.ports[s], found.ports[f])) continue;
        match[s] = static_cast<int>(f);
        used[f] = true;
        break;
      }
    }
  };
  try_match([](const PortSpec& s, const PortDesc& f) { return s.name == f.name; });
  try_match([](const PortSpec& s, const PortDesc& f) {
    return normalize_port_name(s.name) == normalize_port_name(f.name);
  });
  try_match([&](const PortSpec& s, const PortDesc& f) {
    for (const auto& a : spec.aliases_of(s.name))
      if (normalize_port_name(a) == normalize_port_name(f.name)) return true;
    return false;
  });

  for (std::size_t s = 0; s < spec.ports.size(); ++s) {
    const PortSpec& sp = spec.ports[s];
    if (match[s] < 0) {
      r.missing.push_back(sp);
      continue;
    }
    const PortDesc& fp = found.ports[static_cast<std::size_t>(match[s])];
    r.binding[sp.name] = fp.name;
    if (fp.direction != sp.direction) r.direction_mismatches.push_back(fp.name);
    else if (fp.width != sp.width) r.width_mismatches.push_back({fp.name, sp.width, fp.width});
  }
  for (std::size_t f = 0; f < found.ports.size(); ++f)
    if (!used[f]) r.extra.push_back(found.ports[f].name);
  r.conforms = r.missing.empty() && r.width_mismatches.empty() && r.direction_mismatches.empty() &&
               (!options.strict_extra || r.extra.empty());
  return r;
}

const InterfaceDesc* select_module(const std::vector<InterfaceDesc>& modules,
                                   const std::string& benchmark_id, const InterfaceSpec& spec) {
  if (modules.empty()) return nullptr;
  for (const auto& m : modules)
    if (normalize_port_name(m.module_name) == normalize_port_name(benchmark_id)) return &m;
  for (const auto& m : modules)
    if (check_interface(m, spec).conforms) return &m;
  return &modules.front();
}

std::vector<LintWarning> lint_verilog2001(std::string_view source) {
  static const std::set<std::string> sv_words = {
      "logic",   "always_ff", "always_comb", "always_latch", "typedef", "enum",    "struct",
      "union",   "interface", "modport",     "unique",       "priority", "int",    "byte",
      "shortint", "longint",  "import",      "package",      "class",    "program", "bit",
      "assert",  "final",     "endclass",    "void",         "string"};
  static const std::set<std::string> sv_ops = {"++", "--", "+=", "-=", "*=", "/=", "|=",
                                               "&=", "^=", "::", "<<=", ">>="};
  std::vector<LintWarning> out;
  Lexed lx = lex(source);
  for (const auto& t : lx.toks) {
    if (t.kind == T::Ident && sv_words.count(t.text)) {
      out.push_back({line_of(source, t.offset), t.text,
                     "'" + t.text + "' is SystemVerilog and is not accepted in Verilog-2001 mode"});
    } else if (t.kind == T::Punct && sv_ops.count(t.text)) {
      out.push_back({line_of(source, t.offset), t.text,
                     "operator '" + t.text + "' is SystemVerilog and is not accepted in Verilog-2001 mode"});
    } else if (t.kind == T::Number && t.text.size() == 2 && t.text[0] == '\'') {
      out.push_back({line_of(source, t.offset), t.text,
                     "fill literal " + t.text + " is SystemVerilog"});
    }
  }
  return out;
}

}  // namespace hwloop
