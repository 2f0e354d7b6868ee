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

#include "hwloop/bench_spec.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "hwloop/errors.hpp"
#include "text.hpp"

namespace hwloop {

namespace detail {
struct EmbeddedFile {
  const char* name;
  const char* data;
};
extern const EmbeddedFile kEmbeddedFiles[];
extern const std::size_t kEmbeddedFileCount;
}  // namespace detail

namespace {

constexpr int kMaxTapeoutInputs = 5;
constexpr int kMaxTapeoutOutputs = 8;
constexpr int kMaxPerGroup = 8;

const PromptTemplate kDesign{
    PromptKind::Design,
    "I am trying to create a Verilog model for {subject}. It must meet the following "
    "specifications:\n{spec_bullets}\nHow would I write a design that meets these "
    "specifications?"};
const PromptTemplate kTestbench{
    PromptKind::Testbench,
    "Can you create a Verilog testbench for this design? It should be self-checking and made "
    "to work with iverilog for simulation and validation. If test cases should fail, the "
    "testbench should provide enough information that the error can be found and resolved."};
const PromptTemplate kFix{
    PromptKind::Fix,
    "When running the simulation it gives the following output. Please provide fixed code."};
const PromptTemplate kContinue{PromptKind::Continue, "Please continue"};

[[noreturn]] void config_error(const YAML::Node& node, const std::string& field,
                               const std::string& msg) {
  int line = node.IsDefined() ? node.Mark().line + 1 : 0;
  throw ConfigError("line " + std::to_string(line) + ": field '" + field + "': " + msg, line,
                    field);
}

std::string required_string(const YAML::Node& parent, const std::string& field) {
  YAML::Node n = parent[field];
  if (!n || !n.IsScalar()) config_error(parent, field, "missing or not a string");
  return n.as<std::string>();
}

Direction parse_direction(const YAML::Node& n) {
  std::string s = n.as<std::string>();
  if (s == "input") return Direction::Input;
  if (s == "output") return Direction::Output;
  config_error(n, "direction", "expected input or output, got '" + s + "'");
}

PortRole parse_role(const YAML::Node& n) {
  static const std::map<std::string, PortRole> roles = {
      {"clock", PortRole::Clock},
      {"reset_active_low", PortRole::ResetActiveLow},
      {"reset_active_high", PortRole::ResetActiveHigh},
      {"data", PortRole::Data},
      {"enable", PortRole::Enable},
      {"select", PortRole::Select},
      {"plain", PortRole::Plain}};
  auto it = roles.find(n.as<std::string>());
  if (it == roles.end()) config_error(n, "role", "unknown role '" + n.as<std::string>() + "'");
  return it->second;
}

void validate_interface(const InterfaceSpec& iface, const YAML::Node& node, const std::string& id) {
  std::set<std::string> names;
  int clocks = 0, resets = 0;
  for (const auto& p : iface.ports) {
    if (p.width < 1) config_error(node, "width", "port " + p.name + " must be at least 1 bit");
    if (!names.insert(normalize_port_name(p.name)).second)
      config_error(node, "ports", "duplicate port name " + p.name);
    if (p.role == PortRole::Clock) ++clocks;
    if (p.role == PortRole::ResetActiveLow || p.role == PortRole::ResetActiveHigh) ++resets;
  }
  if (clocks > 1) config_error(node, "ports", "more than one clock port");
  if (resets > 1) config_error(node, "ports", "more than one reset port");
  if (iface.tapeout_constrained) {
    if (iface.input_bits() > kMaxTapeoutInputs)
      throw ConstraintError(id + ": " + std::to_string(iface.input_bits()) +
                            " input bits exceed the tapeout budget of " +
                            std::to_string(kMaxTapeoutInputs));
    if (iface.output_bits() > kMaxTapeoutOutputs)
      throw ConstraintError(id + ": " + std::to_string(iface.output_bits()) +
                            " output bits exceed the tapeout budget of " +
                            std::to_string(kMaxTapeoutOutputs));
  }
}

std::string substitute(const std::string& body, const std::map<std::string, std::string>& values) {
  std::string out;
  size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      size_t close = body.find('}', i);
      if (close != std::string::npos) {
        auto it = values.find(body.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += body[i++];
  }
  return out;
}

BenchmarkSpec parse_benchmark(const YAML::Node& b, const AssetResolver& resolver) {
  BenchmarkSpec spec;
  spec.id = required_string(b, "id");
  spec.title = b["title"] ? b["title"].as<std::string>() : spec.id;
  spec.subject = b["subject"] ? b["subject"].as<std::string>() : "a " + spec.title;
  if (b["group"]) spec.group = b["group"].as<std::string>();
  spec.interface.tapeout_constrained = b["tapeout"] && b["tapeout"].as<bool>();

  YAML::Node ports = b["ports"];
  if (!ports || !ports.IsSequence()) config_error(b, "ports", "missing port list");
  for (const auto& p : ports) {
    PortSpec port;
    port.name = required_string(p, "name");
    if (!p["direction"]) config_error(p, "direction", "missing");
    port.direction = parse_direction(p["direction"]);
    if (p["width"]) {
      try {
        port.width = p["width"].as<int>();
      } catch (const YAML::Exception&) {
        config_error(p["width"], "width", "not an integer");
      }
    }
    if (p["role"]) port.role = parse_role(p["role"]);
    port.label = p["label"] ? p["label"].as<std::string>() : port.name;
    spec.interface.ports.push_back(std::move(port));
  }
  if (YAML::Node aliases = b["aliases"]) {
    if (!aliases.IsMap()) config_error(aliases, "aliases", "expected a mapping");
    for (const auto& kv : aliases) {
      std::string key = kv.first.as<std::string>();
      if (!spec.interface.find(key)) config_error(kv.first, "aliases", "unknown port " + key);
      for (const auto& a : kv.second) spec.interface.name_aliases[key].push_back(a.as<std::string>());
    }
  }
  validate_interface(spec.interface, b, spec.id);

  if (YAML::Node params = b["parameters"]) {
    for (const auto& kv : params) spec.parameters[kv.first.as<std::string>()] = kv.second.as<std::string>();
  }
  if (YAML::Node cons = b["constraints"]) {
    for (const auto& c : cons) {
      std::string line = c.as<std::string>();
      for (const auto& name : template_placeholders(line)) {
        if (!spec.parameters.count(name))
          config_error(c, "constraints", "references undefined parameter {" + name + "}");
      }
      spec.extra_constraints.push_back(line);
    }
  }

  spec.golden_design = required_string(b, "golden_design");
  spec.golden_testbench = required_string(b, "golden_testbench");
  auto design = resolver(spec.golden_design);
  if (!design) config_error(b["golden_design"], "golden_design", "asset not found: " + spec.golden_design);
  auto bench = resolver(spec.golden_testbench);
  if (!bench)
    config_error(b["golden_testbench"], "golden_testbench", "asset not found: " + spec.golden_testbench);
  spec.golden_design_source = *design;
  spec.golden_testbench_source = *bench;

  spec.description_bullets.push_back("- Inputs:");
  for (const auto& p : spec.interface.ports)
    if (p.direction == Direction::Input) spec.description_bullets.push_back("\t- " + p.label);
  spec.description_bullets.push_back("- Outputs:");
  for (const auto& p : spec.interface.ports)
    if (p.direction == Direction::Output) spec.description_bullets.push_back("\t- " + p.label);
  return spec;
}

}  // namespace

std::string to_string(Direction d) {
  switch (d) {
    case Direction::Input: return "input";
    case Direction::Output: return "output";
    case Direction::Inout: return "inout";
  }
  return "input";
}

std::string to_string(PortRole r) {
  switch (r) {
    case PortRole::Clock: return "clock";
    case PortRole::ResetActiveLow: return "reset_active_low";
    case PortRole::ResetActiveHigh: return "reset_active_high";
    case PortRole::Data: return "data";
    case PortRole::Enable: return "enable";
    case PortRole::Select: return "select";
    case PortRole::Plain: return "plain";
  }
  return "plain";
}

int InterfaceSpec::input_bits() const {
  int n = 0;
  for (const auto& p : ports)
    if (p.direction == Direction::Input) n += p.width;
  return n;
}

int InterfaceSpec::output_bits() const {
  int n = 0;
  for (const auto& p : ports)
    if (p.direction == Direction::Output) n += p.width;
  return n;
}

const PortSpec* InterfaceSpec::find(std::string_view name) const {
  for (const auto& p : ports)
    if (p.name == name) return &p;
  return nullptr;
}

const PortSpec* InterfaceSpec::clock() const {
  for (const auto& p : ports)
    if (p.role == PortRole::Clock) return &p;
  return nullptr;
}

const PortSpec* InterfaceSpec::reset() const {
  for (const auto& p : ports)
    if (p.role == PortRole::ResetActiveLow || p.role == PortRole::ResetActiveHigh) return &p;
  return nullptr;
}

std::vector<std::string> InterfaceSpec::aliases_of(const std::string& name) const {
  std::vector<std::string> out;
  auto add = [&](const std::string& a) {
    if (a != name && std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  };
  if (auto it = name_aliases.find(name); it != name_aliases.end())
    for (const auto& a : it->second) add(a);
  const auto& table = builtin_aliases();
  if (auto it = table.find(name); it != table.end())
    for (const auto& a : it->second) add(a);
  return out;
}

std::string normalize_port_name(std::string_view name) {
  std::string out;
  for (char c : name)
    if (c != '_') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::map<std::string, std::vector<std::string>>& builtin_aliases() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"clk", {"clock"}},
      {"clock", {"clk"}},
      {"reset_n", {"rst_n"}},
      {"rst_n", {"reset_n"}},
      {"data_in", {"data"}},
      {"data_out", {"q", "out", "dout", "data"}},
  };
  return table;
}

std::vector<BenchmarkSpec> load_suite(const std::string& document, const AssetResolver& resolver) {
  YAML::Node root;
  try {
    root = YAML::Load(document);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg, e.mark.line + 1);
  }
  std::vector<BenchmarkSpec> out;
  if (!root || root.IsNull()) return out;
  if (!root.IsMap()) throw ConfigError("suite document must be a mapping", 1);
  YAML::Node list = root["benchmarks"];
  if (!list || list.IsNull()) return out;
  if (!list.IsSequence()) config_error(list, "benchmarks", "expected a list");
  std::set<std::string> ids;
  std::map<std::string, int> per_group;
  for (const auto& b : list) {
    if (!b.IsMap()) config_error(b, "benchmarks", "entry is not a mapping");
    BenchmarkSpec spec = parse_benchmark(b, resolver);
    if (!ids.insert(spec.id).second) config_error(b, "id", "duplicate benchmark id " + spec.id);
    if (spec.interface.tapeout_constrained && ++per_group[spec.group] > kMaxPerGroup)
      throw ConstraintError("wrapper group '" + spec.group + "' has more than " +
                            std::to_string(kMaxPerGroup) + " tapeout-constrained benchmarks");
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<BenchmarkSpec> load_suite_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read suite file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto dir = path.parent_path();
  return load_suite(ss.str(), [dir](const std::string& name) -> std::optional<std::string> {
    std::ifstream f(dir / name);
    if (!f) return std::nullopt;
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
  });
}

std::optional<std::string> embedded_asset(const std::string& name) {
  for (std::size_t i = 0; i < detail::kEmbeddedFileCount; ++i)
    if (name == detail::kEmbeddedFiles[i].name) return std::string(detail::kEmbeddedFiles[i].data);
  return std::nullopt;
}

std::vector<std::string> embedded_asset_names() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < detail::kEmbeddedFileCount; ++i) out.emplace_back(detail::kEmbeddedFiles[i].name);
  return out;
}

const std::vector<BenchmarkSpec>& builtin_suite() {
  static const std::vector<BenchmarkSpec> suite = [] {
    auto doc = embedded_asset("suite.yaml");
    if (!doc) throw ConfigError("embedded suite.yaml missing");
    return load_suite(*doc, [](const std::string& n) { return embedded_asset(n); });
  }();
  return suite;
}

const BenchmarkSpec& builtin_benchmark(std::string_view id) {
  for (const auto& b : builtin_suite())
    if (b.id == id) return b;
  throw ConfigError("unknown benchmark '" + std::string(id) + "'");
}

void export_builtin_suite(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& name : embedded_asset_names()) {
    if (name.find('.') == std::string::npos) continue;
    if (name != "suite.yaml" && name.substr(name.size() - 2) != ".v") continue;
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    out << *embedded_asset(name);
  }
}

std::vector<std::string> template_placeholders(std::string_view body) {
  std::vector<std::string> out;
  size_t i = 0;
  while ((i = body.find('{', i)) != std::string_view::npos) {
    size_t close = body.find('}', i);
    if (close == std::string_view::npos) break;
    std::string name(body.substr(i + 1, close - i - 1));
    bool ident = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
    if (ident) out.push_back(name);
    i = close + 1;
  }
  return out;
}

std::vector<std::string> spec_bullet_lines(const BenchmarkSpec& spec) {
  std::vector<std::string> lines = spec.description_bullets;
  for (const auto& c : spec.extra_constraints) lines.push_back("- " + substitute(c, spec.parameters));
  return lines;
}

std::string render_design_prompt(const BenchmarkSpec& spec) {
  return substitute(kDesign.body, {{"subject", spec.subject},
                                   {"spec_bullets", text::join(spec_bullet_lines(spec), "\n")}});
}

const PromptTemplate& prompt_template(PromptKind kind) {
  switch (kind) {
    case PromptKind::Design: return kDesign;
    case PromptKind::Testbench: return kTestbench;
    case PromptKind::Fix: return kFix;
    case PromptKind::Continue: return kContinue;
  }
  return kContinue;
}

std::string render_fixed_prompt(PromptKind kind) {
  if (kind == PromptKind::Design) throw PreconditionError("the design prompt needs a benchmark");
  return prompt_template(kind).body;
}

}  // namespace hwloop
