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

#include "hwloop/sim/simulator.hpp"

#include <map>
#include "json.hpp"
#include <sstream>

#include "elaborate.hpp"
#include "lexer.hpp"
#include "machine.hpp"
#include "parser.hpp"

namespace hwloop::sim {

namespace {

constexpr const char* kMagic = "#! hwlsim";

std::string render_all(const DiagnosticSink& diags) {
  std::string out;
  for (const auto& d : diags.all()) {
    out += d.render();
    out += '\n';
  }
  return out;
}

bool build(const std::vector<SourceFile>& sources, const std::vector<std::string>& tops,
           ast::Design& design, Model& model, Machine& machine, DiagnosticSink& diags,
           std::string& text) {
  std::map<std::string, MacroDef> macros;
  TimescaleState ts;
  for (const auto& src : sources) {
    Lexer lexer(src.path, src.text, diags, &macros);
    Parser parser(lexer.tokenize(), diags, ts);
    parser.parse(design);
  }
  if (diags.error_count() > 0) {
    text = render_all(diags);
    return false;
  }
  bool ok = elaborate(design, tops, model, machine, diags);
  text = render_all(diags);
  if (!ok || diags.error_count() > 0) {
    text += std::to_string(diags.error_count()) + " error(s) during elaboration.\n";
    return false;
  }
  return true;
}

}  // namespace

CompileOutcome compile(const std::vector<SourceFile>& sources,
                       const std::vector<std::string>& tops) {
  ast::Design design;
  Model model;
  std::ostringstream sink;
  Machine machine(model, sink);
  DiagnosticSink diags;
  CompileOutcome out;
  out.ok = build(sources, tops, design, model, machine, diags, out.diagnostics);
  return out;
}

int simulate(const std::vector<SourceFile>& sources, const std::vector<std::string>& tops,
             std::ostream& out, std::ostream& err) {
  ast::Design design;
  Model model;
  Machine machine(model, out);
  DiagnosticSink diags;
  std::string text;
  bool ok = build(sources, tops, design, model, machine, diags, text);
  // Warnings were already shown by the compile step.
  if (!ok) {
    err << text;
    return 1;
  }
  return machine.run();
}

std::string write_artifact(const std::vector<SourceFile>& sources,
                           const std::vector<std::string>& tops) {
  nlohmann::json j;
  j["tops"] = tops;
  j["sources"] = nlohmann::json::array();
  for (const auto& s : sources) j["sources"].push_back({{"path", s.path}, {"text", s.text}});
  return std::string(kMagic) + "\n" + j.dump() + "\n";
}

bool read_artifact(const std::string& text, std::vector<SourceFile>& sources,
                   std::vector<std::string>& tops) {
  std::string magic(kMagic);
  if (text.compare(0, magic.size(), magic) != 0) return false;
  auto nl = text.find('\n');
  if (nl == std::string::npos) return false;
  auto j = nlohmann::json::parse(text.substr(nl + 1), nullptr, false);
  if (j.is_discarded() || !j.contains("sources")) return false;
  sources.clear();
  for (const auto& s : j["sources"])
    sources.push_back({s.value("path", ""), s.value("text", "")});
  tops = j.value("tops", std::vector<std::string>{});
  return true;
}

}  // namespace hwloop::sim
