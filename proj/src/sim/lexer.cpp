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

#include "lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace hwloop::sim {

namespace {

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> kw = {
      "always", "and", "assign", "automatic", "begin", "buf", "bufif0", "bufif1",
      "case", "casex", "casez", "cell", "cmos", "config", "deassign", "default",
      "defparam", "design", "disable", "edge", "else", "end", "endcase",
      "endconfig", "endfunction", "endgenerate", "endmodule", "endprimitive",
      "endspecify", "endtable", "endtask", "event", "for", "force", "forever",
      "fork", "function", "generate", "genvar", "highz0", "highz1", "if",
      "ifnone", "incdir", "include", "initial", "inout", "input", "instance",
      "integer", "join", "large", "liblist", "library", "localparam",
      "macromodule", "medium", "module", "nand", "negedge", "nmos", "nor",
      "noshowcancelled", "not", "notif0", "notif1", "or", "output", "parameter",
      "pmos", "posedge", "primitive", "pull0", "pull1", "pulldown", "pullup",
      "pulsestyle_onevent", "pulsestyle_ondetect", "rcmos", "real", "realtime",
      "reg", "release", "repeat", "rnmos", "rpmos", "rtran", "rtranif0",
      "rtranif1", "scalared", "showcancelled", "signed", "small", "specify",
      "specparam", "strong0", "strong1", "supply0", "supply1", "table", "task",
      "time", "tran", "tranif0", "tranif1", "tri", "tri0", "tri1", "triand",
      "trior", "trireg", "unsigned", "use", "vectored", "wait", "wand", "weak0",
      "weak1", "while", "wire", "wor", "xnor", "xor"};
  return kw;
}

constexpr std::array<std::string_view, 26> kPuncts = {
    "<<<", ">>>", "===", "!==", "**", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||",  "~&",  "~|",  "~^",  "^~", "->", "+:", "-:", "+",  "-",  "*",  "/",
    "%",   "&"};
constexpr std::string_view kSingles = "|^~!<>=?:;,.()[]{}#@'";

int timescale_exponent(std::string_view spec, bool& ok) {
  size_t i = 0;
  while (i < spec.size() && std::isdigit(static_cast<unsigned char>(spec[i]))) ++i;
  std::string_view mag = spec.substr(0, i);
  std::string_view unit = spec.substr(i);
  while (!unit.empty() && unit.front() == ' ') unit.remove_prefix(1);
  int exp = 0;
  if (mag == "1") exp = 0;
  else if (mag == "10") exp = 1;
  else if (mag == "100") exp = 2;
  else ok = false;
  if (unit == "s") exp += 0;
  else if (unit == "ms") exp += -3;
  else if (unit == "us") exp += -6;
  else if (unit == "ns") exp += -9;
  else if (unit == "ps") exp += -12;
  else if (unit == "fs") exp += -15;
  else ok = false;
  return exp;
}

}  // namespace

bool is_keyword(std::string_view word) { return keywords().count(word) != 0; }

Lexer::Lexer(std::string_view file, std::string_view text, DiagnosticSink& diags,
             std::map<std::string, MacroDef>* macros)
    : file_(file), diags_(diags), macros_(macros ? macros : &local_macros_) {
  Source s;
  s.text = std::string(text);
  stack_.push_back(std::move(s));
}

bool Lexer::at_end() const {
  return stack_.size() == 1 && stack_.back().pos >= stack_.back().text.size();
}

char Lexer::peek(size_t ahead) const {
  const Source& s = stack_.back();
  size_t p = s.pos + ahead;
  return p < s.text.size() ? s.text[p] : '\0';
}

char Lexer::get() {
  Source& s = stack_.back();
  if (s.pos >= s.text.size()) return '\0';
  char c = s.text[s.pos++];
  if (c == '\n' && !s.is_macro) ++s.line;
  return c;
}

SourceLoc Lexer::loc() const {
  static thread_local std::shared_ptr<const std::string> cached;
  if (!cached || *cached != file_) cached = std::make_shared<const std::string>(file_);
  return SourceLoc{cached, stack_.front().line};
}

bool Lexer::active() const {
  return std::all_of(cond_.begin(), cond_.end(), [](const auto& c) { return c.first; });
}

void Lexer::skip_space_and_comments() {
  for (;;) {
    while (stack_.size() > 1 && stack_.back().pos >= stack_.back().text.size())
      stack_.pop_back();
    char c = peek();
    if (c == '\0') return;
    if (std::isspace(static_cast<unsigned char>(c))) {
      get();
    } else if (c == '/' && peek(1) == '/') {
      while (peek() != '\n' && peek() != '\0') get();
    } else if (c == '/' && peek(1) == '*') {
      get();
      get();
      while (!(peek() == '*' && peek(1) == '/')) {
        if (peek() == '\0') {
          diags_.error(loc(), "Unterminated block comment");
          return;
        }
        get();
      }
      get();
      get();
    } else if (c == '(' && peek(1) == '*' && peek(2) != ')') {
      // (* attribute *) instances are ignored.
      get();
      get();
      while (!(peek() == '*' && peek(1) == ')') && peek() != '\0') get();
      get();
      get();
    } else {
      return;
    }
  }
}

std::string Lexer::read_line_rest() {
  std::string out;
  for (;;) {
    char c = peek();
    if (c == '\0' || c == '\n') break;
    if (c == '\\' && peek(1) == '\n') {
      get();
      get();
      out.push_back('\n');
      continue;
    }
    if (c == '/' && peek(1) == '/') {
      while (peek() != '\n' && peek() != '\0') get();
      break;
    }
    out.push_back(get());
  }
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

std::string Lexer::read_identifier() {
  std::string id;
  while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '$')
    id.push_back(get());
  return id;
}

void Lexer::directive(std::vector<Token>& out) {
  SourceLoc at = loc();
  get();  // backtick
  std::string name = read_identifier();
  auto skip_blank = [this] {
    while (peek() == ' ' || peek() == '\t') get();
  };
  if (name == "ifdef" || name == "ifndef") {
    skip_blank();
    std::string sym = read_identifier();
    bool defined = macros_->count(sym) != 0;
    bool take = name == "ifdef" ? defined : !defined;
    cond_.emplace_back(take, take);
    return;
  }
  if (name == "elsif") {
    skip_blank();
    std::string sym = read_identifier();
    if (cond_.empty()) {
      diags_.error(at, "`elsif without `ifdef");
      return;
    }
    auto& c = cond_.back();
    bool take = !c.second && macros_->count(sym) != 0;
    c.first = take;
    c.second = c.second || take;
    return;
  }
  if (name == "else") {
    if (cond_.empty()) {
      diags_.error(at, "`else without `ifdef");
      return;
    }
    auto& c = cond_.back();
    c.first = !c.second;
    c.second = true;
    return;
  }
  if (name == "endif") {
    if (cond_.empty()) diags_.error(at, "`endif without `ifdef");
    else cond_.pop_back();
    return;
  }
  if (!active()) return;
  if (name == "define") {
    skip_blank();
    std::string sym = read_identifier();
    MacroDef def;
    if (peek() == '(') {
      def.function_like = true;
      get();
      std::string param;
      while (peek() != ')' && peek() != '\0' && peek() != '\n') {
        char c = get();
        if (c == ',') {
          def.params.push_back(param);
          param.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
          param.push_back(c);
        }
      }
      if (!param.empty()) def.params.push_back(param);
      get();
    }
    skip_blank();
    def.body = read_line_rest();
    (*macros_)[sym] = std::move(def);
    return;
  }
  if (name == "undef") {
    skip_blank();
    macros_->erase(read_identifier());
    return;
  }
  if (name == "timescale") {
    skip_blank();
    std::string spec = read_line_rest();
    auto slash = spec.find('/');
    bool ok = slash != std::string::npos;
    auto trim = [](std::string s) {
      s.erase(std::remove_if(s.begin(), s.end(),
                             [](unsigned char ch) { return std::isspace(ch); }),
              s.end());
      return s;
    };
    int unit = 0, prec = 0;
    if (ok) {
      unit = timescale_exponent(trim(spec.substr(0, slash)), ok);
      prec = timescale_exponent(trim(spec.substr(slash + 1)), ok);
    }
    if (!ok || prec > unit) {
      diags_.error(at, "Invalid `timescale directive");
      return;
    }
    out.push_back(Token{Tok::Timescale, std::to_string(unit) + " " + std::to_string(prec), at});
    return;
  }
  if (name == "include") {
    read_line_rest();
    diags_.error(at, "`include is not supported; pass every source file explicitly");
    return;
  }
  if (name == "default_nettype" || name == "resetall" || name == "celldefine" ||
      name == "endcelldefine" || name == "unconnected_drive" ||
      name == "nounconnected_drive" || name == "line" || name == "pragma") {
    read_line_rest();
    return;
  }
  auto it = macros_->find(name);
  if (it == macros_->end()) {
    diags_.error(at, "macro `" + name + " is not defined");
    return;
  }
  if (stack_.size() > 64) {
    diags_.error(at, "macro expansion too deep");
    return;
  }
  std::string body = it->second.body;
  if (it->second.function_like) {
    skip_space_and_comments();
    std::vector<std::string> args;
    if (peek() == '(') {
      get();
      int depth = 0;
      std::string arg;
      for (;;) {
        char c = peek();
        if (c == '\0') break;
        get();
        if (depth == 0 && (c == ',' || c == ')')) {
          args.push_back(arg);
          arg.clear();
          if (c == ')') break;
          continue;
        }
        if (c == '(' || c == '[' || c == '{') ++depth;
        if (c == ')' || c == ']' || c == '}') --depth;
        arg.push_back(c);
      }
    }
    const auto& params = it->second.params;
    std::string expanded;
    for (size_t i = 0; i < body.size();) {
      if (std::isalpha(static_cast<unsigned char>(body[i])) || body[i] == '_') {
        size_t j = i;
        while (j < body.size() && (std::isalnum(static_cast<unsigned char>(body[j])) ||
                                   body[j] == '_' || body[j] == '$'))
          ++j;
        std::string word = body.substr(i, j - i);
        auto p = std::find(params.begin(), params.end(), word);
        if (p != params.end() && static_cast<size_t>(p - params.begin()) < args.size())
          expanded += args[p - params.begin()];
        else
          expanded += word;
        i = j;
      } else {
        expanded.push_back(body[i++]);
      }
    }
    body = expanded;
  }
  Source s;
  s.text = body;
  s.is_macro = true;
  s.macro_name = name;
  stack_.push_back(std::move(s));
}

void Lexer::number(std::vector<Token>& out) {
  SourceLoc at = loc();
  std::string text;
  if (peek() != '\'') {
    while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') {
      char c = get();
      if (c != '_') text.push_back(c);
    }
    // Real literal.
    if ((peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) ||
        ((peek() == 'e' || peek() == 'E') &&
         (std::isdigit(static_cast<unsigned char>(peek(1))) ||
          ((peek(1) == '-' || peek(1) == '+') &&
           std::isdigit(static_cast<unsigned char>(peek(2))))))) {
      if (peek() == '.') {
        text.push_back(get());
        while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') {
          char c = get();
          if (c != '_') text.push_back(c);
        }
      }
      if (peek() == 'e' || peek() == 'E') {
        text.push_back(get());
        if (peek() == '-' || peek() == '+') text.push_back(get());
        while (std::isdigit(static_cast<unsigned char>(peek()))) text.push_back(get());
      }
      out.push_back(Token{Tok::RealNumber, text, at});
      return;
    }
    // Size followed by a base, possibly with whitespace in between.
    size_t save = stack_.back().pos;
    uint32_t save_line = stack_.front().line;
    while (peek() == ' ' || peek() == '\t') get();
    if (peek() != '\'') {
      stack_.back().pos = save;
      stack_.front().line = save_line;
      out.push_back(Token{Tok::Number, text, at});
      return;
    }
  }
  // Based literal.
  text.push_back(get());  // '
  if (peek() == 's' || peek() == 'S') text.push_back(static_cast<char>(std::tolower(get())));
  char base = static_cast<char>(std::tolower(static_cast<unsigned char>(peek())));
  if (base != 'b' && base != 'o' && base != 'd' && base != 'h') {
    diags_.syntax_error(at, "Malformed based number");
    return;
  }
  get();
  text.push_back(base);
  while (peek() == ' ' || peek() == '\t') get();
  bool any = false;
  while (std::isxdigit(static_cast<unsigned char>(peek())) || peek() == '_' ||
         peek() == 'x' || peek() == 'X' || peek() == 'z' || peek() == 'Z' || peek() == '?') {
    char c = get();
    if (c == '_') continue;
    text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    any = true;
  }
  if (!any) {
    diags_.syntax_error(at, "Based number is missing its digits");
    return;
  }
  out.push_back(Token{Tok::Number, text, at});
}

void Lexer::string_literal(std::vector<Token>& out) {
  SourceLoc at = loc();
  get();
  std::string s;
  for (;;) {
    char c = peek();
    if (c == '\0' || c == '\n') {
      diags_.syntax_error(at, "Unterminated string literal");
      break;
    }
    get();
    if (c == '"') break;
    if (c == '\\') {
      char e = get();
      switch (e) {
        case 'n': s.push_back('\n'); break;
        case 't': s.push_back('\t'); break;
        case '\\': s.push_back('\\'); break;
        case '"': s.push_back('"'); break;
        case 'a': s.push_back('\a'); break;
        case '\n': break;
        default:
          if (e >= '0' && e <= '7') {
            int v = e - '0';
            for (int k = 0; k < 2 && peek() >= '0' && peek() <= '7'; ++k) v = v * 8 + (get() - '0');
            s.push_back(static_cast<char>(v));
          } else {
            s.push_back(e);
          }
      }
      continue;
    }
    s.push_back(c);
  }
  out.push_back(Token{Tok::String, s, at});
}

void Lexer::punct(std::vector<Token>& out) {
  SourceLoc at = loc();
  for (auto p : kPuncts) {
    bool match = true;
    for (size_t i = 0; i < p.size(); ++i)
      if (peek(i) != p[i]) match = false;
    if (match) {
      for (size_t i = 0; i < p.size(); ++i) get();
      out.push_back(Token{Tok::Punct, std::string(p), at});
      return;
    }
  }
  char c = peek();
  if (kSingles.find(c) != std::string_view::npos) {
    get();
    out.push_back(Token{Tok::Punct, std::string(1, c), at});
    return;
  }
  get();
  diags_.syntax_error(at, std::string("Unexpected character '") + c + "'");
}

std::vector<Token> Lexer::tokenize() {
  std::vector<Token> out;
  for (;;) {
    skip_space_and_comments();
    if (at_end()) break;
    char c = peek();
    if (c == '`') {
      directive(out);
      continue;
    }
    if (!active()) {
      if (c == '"') {
        std::vector<Token> dummy;
        string_literal(dummy);
      } else {
        get();
      }
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      SourceLoc at = loc();
      std::string id = read_identifier();
      out.push_back(Token{is_keyword(id) ? Tok::Keyword : Tok::Identifier, id, at});
    } else if (c == '\\') {
      SourceLoc at = loc();
      get();
      std::string id;
      while (peek() != '\0' && !std::isspace(static_cast<unsigned char>(peek()))) id.push_back(get());
      out.push_back(Token{Tok::Identifier, id, at});
    } else if (c == '$') {
      SourceLoc at = loc();
      get();
      out.push_back(Token{Tok::SystemName, "$" + read_identifier(), at});
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      number(out);
    } else if (c == '\'' ) {
      char n = static_cast<char>(std::tolower(static_cast<unsigned char>(peek(1))));
      if (n == 'b' || n == 'o' || n == 'd' || n == 'h' || n == 's') number(out);
      else punct(out);
    } else if (c == '"') {
      string_literal(out);
    } else {
      punct(out);
    }
  }
  if (!cond_.empty()) diags_.error(loc(), "missing `endif");
  out.push_back(Token{Tok::End, "", loc()});
  return out;
}

}  // namespace hwloop::sim
