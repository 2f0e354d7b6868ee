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

#include "hwloop/wrapper_gen.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "hwloop/errors.hpp"
#include "text.hpp"

namespace hwloop {

namespace {

constexpr int kMaxBenchmarks = 8;
constexpr int kIoBits = 8;

std::string pin_expr(int pin, bool inverted) {
  std::string e = "io_in[" + std::to_string(pin) + "]";
  return inverted ? "~" + e : e;
}

std::string input_expr(const PortRoute& r) {
  if (r.pins.size() == 1) return pin_expr(r.pins[0], r.inverted);
  std::vector<std::string> bits;
  for (auto it = r.pins.rbegin(); it != r.pins.rend(); ++it) bits.push_back(pin_expr(*it, r.inverted));
  return "{" + text::join(bits, ", ") + "}";
}

int output_bits(const BenchmarkRoute& r) {
  int n = 0;
  for (const auto& o : r.outputs) n += o.width;
  return n;
}

std::string range(int width) { return width > 1 ? "[" + std::to_string(width - 1) + ":0] " : ""; }

// Instance text plus the packed 8-bit output wire. Output nets are named
// <net_prefix><port>.
std::string instance_block(const BenchmarkRoute& r, const std::string& inst, const std::string& net_prefix,
                           const std::string& packed) {
  std::string out;
  for (const auto& o : r.outputs) out += "    wire " + range(o.width) + net_prefix + o.port + ";\n";
  std::vector<std::string> conns;
  for (const auto& i : r.inputs) conns.push_back("        ." + i.port + "(" + input_expr(i) + ")");
  for (const auto& o : r.outputs) conns.push_back("        ." + o.port + "(" + net_prefix + o.port + ")");
  out += "    " + r.module + " " + inst + " (\n" + text::join(conns, ",\n") + "\n    );\n";
  std::vector<std::string> parts;
  int pad = kIoBits - output_bits(r);
  if (pad > 0) parts.push_back(std::to_string(pad) + "'b0");
  for (auto it = r.outputs.rbegin(); it != r.outputs.rend(); ++it) parts.push_back(net_prefix + it->port);
  out += "    wire [7:0] " + packed + " = {" + text::join(parts, ", ") + "};\n";
  return out;
}

}  // namespace

void PinMap::validate() const {
  std::vector<int> all(select_bits.begin(), select_bits.end());
  all.push_back(clock_bit);
  all.insert(all.end(), shared_inputs.begin(), shared_inputs.end());
  std::set<int> seen;
  for (int b : all) {
    if (b < 0 || b >= kIoBits) throw PinmapError("pin " + std::to_string(b) + " is outside io_in[7:0]");
    if (!seen.insert(b).second) throw PinmapError("pin " + std::to_string(b) + " is assigned twice");
  }
  std::set<int> usable(shared_inputs.begin(), shared_inputs.end());
  usable.insert(clock_bit);
  for (const auto& [id, ports] : assignments)
    for (const auto& [port, pin] : ports)
      if (!usable.count(pin))
        throw PinmapError(id + "." + port + ": pin " + std::to_string(pin) + " is not a clock or shared input");
}

PinMap default_pinmap() { return PinMap{}; }

PinMap parse_pinmap(const std::string& document) {
  PinMap p;
  YAML::Node root;
  try {
    root = YAML::Load(document);
  } catch (const YAML::Exception& e) {
    throw ConfigError("pinmap line " + std::to_string(e.mark.line + 1) + ": " + e.msg, e.mark.line + 1);
  }
  auto ints = [&](const char* field, auto& arr) {
    YAML::Node n = root[field];
    if (!n) return;
    if (!n.IsSequence() || n.size() != arr.size())
      throw PinmapError(std::string("pinmap '") + field + "' needs " + std::to_string(arr.size()) + " entries");
    for (std::size_t i = 0; i < arr.size(); ++i) arr[i] = n[i].as<int>();
  };
  if (root && root.IsMap()) {
    ints("select", p.select_bits);
    ints("shared", p.shared_inputs);
    if (root["clock"]) p.clock_bit = root["clock"].as<int>();
    if (root["assign"])
      for (const auto& b : root["assign"])
        for (const auto& port : b.second) p.assignments[b.first.as<std::string>()][port.first.as<std::string>()] = port.second.as<int>();
  }
  p.validate();
  return p;
}

PinMap load_pinmap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read pinmap " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pinmap(ss.str());
}

std::vector<BenchmarkRoute> route_benchmarks(const std::vector<BenchmarkSpec>& benchmarks, const PinMap& pinmap,
                                             const std::map<std::string, std::string>& module_names) {
  if (benchmarks.size() > kMaxBenchmarks)
    throw CapacityError(std::to_string(benchmarks.size()) + " benchmarks exceed the 8 select values");
  pinmap.validate();
  std::vector<BenchmarkRoute> routes;
  for (std::size_t i = 0; i < benchmarks.size(); ++i) {
    const BenchmarkSpec& b = benchmarks[i];
    BenchmarkRoute r;
    r.select = static_cast<int>(i);
    r.id = b.id;
    auto mn = module_names.find(b.id);
    r.module = mn != module_names.end() ? mn->second : b.id;
    const PortSpec* clock = b.interface.clock();
    std::vector<int> free(pinmap.shared_inputs.begin(), pinmap.shared_inputs.end());
    // Without a clock port the clock pin carries ordinary data.
    if (!clock) free.push_back(pinmap.clock_bit);
    std::set<int> used;
    auto overrides = pinmap.assignments.count(b.id) ? pinmap.assignments.at(b.id) : std::map<std::string, int>{};
    int out_bit = 0;
    for (const auto& p : b.interface.ports) {
      PortRoute pr;
      pr.port = p.name;
      pr.width = p.width;
      if (p.direction == Direction::Inout) throw PinmapError(b.id + "." + p.name + ": inout ports cannot be wrapped");
      if (p.direction == Direction::Output) {
        for (int k = 0; k < p.width; ++k) {
          if (out_bit >= kIoBits)
            throw PinmapError(b.id + "." + p.name + ": outputs exceed the 8 available output bits");
          pr.pins.push_back(out_bit++);
        }
        r.outputs.push_back(pr);
        continue;
      }
      if (clock && p.name == clock->name) {
        if (p.width != 1) throw PinmapError(b.id + "." + p.name + ": clock must be 1 bit");
        pr.pins.push_back(pinmap.clock_bit);
        r.inputs.push_back(pr);
        continue;
      }
      for (int k = 0; k < p.width; ++k) {
        std::string key = p.width == 1 ? p.name : p.name + "[" + std::to_string(k) + "]";
        int pin = -1;
        auto ov = overrides.find(key);
        if (ov == overrides.end() && p.width == 1) ov = overrides.find(p.name + "[0]");
        if (ov != overrides.end()) {
          pin = ov->second;
          if (std::find(free.begin(), free.end(), pin) == free.end() || used.count(pin))
            throw PinmapError(b.id + "." + key + ": pin " + std::to_string(pin) + " is not available");
        } else {
          for (int f : free)
            if (!used.count(f) && ![&] {
                  for (const auto& [k2, v2] : overrides)
                    if (v2 == f) return true;
                  return false;
                }()) {
              pin = f;
              break;
            }
        }
        if (pin < 0) throw PinmapError(b.id + "." + key + ": no input pin left (5 input bits per benchmark, clock included)");
        used.insert(pin);
        pr.pins.push_back(pin);
      }
      if (p.role == PortRole::ResetActiveLow || p.role == PortRole::ResetActiveHigh) {
        pr.inverted = p.role == PortRole::ResetActiveLow;
        r.reset_pin = pr.pins.front();
      }
      r.inputs.push_back(pr);
    }
    routes.push_back(std::move(r));
  }
  return routes;
}

WrapperArtifacts generate_wrapper(const std::vector<BenchmarkSpec>& benchmarks, const PinMap& pinmap,
                                  const WrapperOptions& options) {
  WrapperArtifacts a;
  a.routes = route_benchmarks(benchmarks, pinmap, options.module_names);
  std::set<std::string> modules;
  for (const auto& r : a.routes) modules.insert(r.module);

  a.top = options.top_name;
  while (modules.count(a.top)) a.top += "_top";

  auto identifiers = [&](const std::string& p) {
    std::vector<std::string> ids = {p + "sel", p + "mux"};
    for (const auto& r : a.routes) {
      std::string i = std::to_string(r.select);
      ids.push_back(p + "out_" + i);
      ids.push_back(p + "u" + i);
      for (const auto& o : r.outputs) ids.push_back(p + "o" + i + "_" + o.port);
    }
    return ids;
  };
  auto collides = [&](const std::string& p) {
    for (const auto& id : identifiers(p))
      if (modules.count(id) || id == a.top) return true;
    return false;
  };
  a.prefix = "hwl_";
  for (int n = 1; collides(a.prefix); ++n) a.prefix = "hwl" + std::to_string(n) + "_";
  const std::string& p = a.prefix;

  std::string v;
  v += "// Generated by hwloop. Verilog-2001.\n";
  v += "module " + a.top + " (\n    input  wire [7:0] io_in,\n    output wire [7:0] io_out\n);\n";
  v += "    wire [2:0] " + p + "sel = {io_in[" + std::to_string(pinmap.select_bits[2]) + "], io_in[" +
       std::to_string(pinmap.select_bits[1]) + "], io_in[" + std::to_string(pinmap.select_bits[0]) + "]};\n\n";
  for (const auto& r : a.routes) {
    std::string i = std::to_string(r.select);
    v += "    // select " + i + ": " + r.id + "\n";
    v += instance_block(r, p + "u" + i, p + "o" + i + "_", p + "out_" + i) + "\n";
  }
  if (a.routes.size() == 1) {
    v += "    assign io_out = " + p + "out_0;\n";
  } else {
    v += "    reg [7:0] " + p + "mux;\n    always @(*) begin\n        case (" + p + "sel)\n";
    for (const auto& r : a.routes) {
      std::string i = std::to_string(r.select);
      v += "            3'd" + i + ": " + p + "mux = " + p + "out_" + i + ";\n";
    }
    v += "            default: " + p + "mux = 8'd0;\n        endcase\n    end\n";
    v += "    assign io_out = " + p + "mux;\n";
  }
  v += "endmodule\n";
  a.verilog = v;

  std::string t;
  t += "Pinout for " + a.top + "\n";
  t += "select  = {io_in[" + std::to_string(pinmap.select_bits[2]) + "], io_in[" + std::to_string(pinmap.select_bits[1]) +
       "], io_in[" + std::to_string(pinmap.select_bits[0]) + "]}\n";
  t += "clock   = io_in[" + std::to_string(pinmap.clock_bit) + "]\n";
  t += "unassigned select values drive io_out = 0\n\n";
  std::vector<std::array<std::string, 4>> rows = {{"sel", "benchmark", "signal", "pin"}};
  for (const auto& r : a.routes) {
    std::string s = std::to_string(r.select);
    for (const auto& in : r.inputs)
      for (std::size_t k = 0; k < in.pins.size(); ++k)
        rows.push_back({s, r.id, in.width > 1 ? in.port + "[" + std::to_string(k) + "]" : in.port,
                        pin_expr(in.pins[k], in.inverted)});
    for (const auto& o : r.outputs)
      for (std::size_t k = 0; k < o.pins.size(); ++k)
        rows.push_back({s, r.id, o.width > 1 ? o.port + "[" + std::to_string(k) + "]" : o.port,
                        "io_out[" + std::to_string(o.pins[k]) + "]"});
  }
  std::array<std::size_t, 4> w{};
  for (const auto& row : rows)
    for (std::size_t i = 0; i < 4; ++i) w[i] = std::max(w[i], row[i].size());
  for (std::size_t n = 0; n < rows.size(); ++n) {
    std::string line;
    for (std::size_t i = 0; i < 4; ++i) {
      line += rows[n][i];
      if (i < 3) line += std::string(w[i] - rows[n][i].size() + 2, ' ');
    }
    t += line + "\n";
    if (n == 0) t += std::string(w[0] + w[1] + w[2] + w[3] + 6, '-') + "\n";
  }
  a.pinout = t;
  return a;
}

std::string swap_select_branches(const std::string& wrapper, const std::string& prefix, int a, int b) {
  std::string la = "3'd" + std::to_string(a) + ": " + prefix + "mux = " + prefix + "out_" + std::to_string(a) + ";";
  std::string lb = "3'd" + std::to_string(b) + ": " + prefix + "mux = " + prefix + "out_" + std::to_string(b) + ";";
  std::size_t pa = wrapper.find(la), pb = wrapper.find(lb);
  if (pa == std::string::npos || pb == std::string::npos) throw NotFoundError("select branches not found");
  std::string ra = "3'd" + std::to_string(a) + ": " + prefix + "mux = " + prefix + "out_" + std::to_string(b) + ";";
  std::string rb = "3'd" + std::to_string(b) + ": " + prefix + "mux = " + prefix + "out_" + std::to_string(a) + ";";
  std::string out = wrapper;
  out.replace(out.find(la), la.size(), ra);
  out.replace(out.find(lb), lb.size(), rb);
  return out;
}

// ---------------------------------------------------------------------------

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& s : selects) {
    out += "select " + std::to_string(s.select) + " (" + (s.benchmark.empty() ? "-" : s.benchmark) + "): " + s.status;
    if (s.cycle >= 0) out += " at cycle " + std::to_string(s.cycle) + ", expected " + s.expected + ", observed " + s.observed;
    out += "\n";
  }
  return out;
}

ValidationReport validate_wrapper(const std::string& wrapper_source, const WrapperArtifacts& artifacts,
                                  const std::vector<BenchmarkSpec>& benchmarks, ToolBridge& bridge,
                                  const ValidationOptions& options) {
  const std::string p = artifacts.prefix + "h_";
  std::string h;
  h += "`timescale 1ns/1ps\nmodule " + p + "harness;\n";
  h += "    reg [7:0] io_in;\n    wire [7:0] io_out;\n    reg [31:0] " + p + "rng;\n    reg [7:0] " + p +
       "expected;\n    integer " + p + "cycle;\n    integer " + p + "fails;\n    integer " + p + "cur;\n";
  h += "    " + artifacts.top + " " + p + "dut (.io_in(io_in), .io_out(io_out));\n\n";
  for (const auto& r : artifacts.routes) {
    std::string i = std::to_string(r.select);
    h += instance_block(r, p + "bare" + i, p + "b" + i + "_", p + "bare_out_" + i) + "\n";
  }
  h += "    task " + p + "check;\n        begin\n            case (" + p + "cur)\n";
  for (const auto& r : artifacts.routes)
    h += "                " + std::to_string(r.select) + ": " + p + "expected = " + p + "bare_out_" +
         std::to_string(r.select) + ";\n";
  if (artifacts.routes.size() == 1) {
    // A single benchmark answers every select value.
    for (int s = 1; s < kMaxBenchmarks; ++s)
      h += "                " + std::to_string(s) + ": " + p + "expected = " + p + "bare_out_0;\n";
  }
  h += "                default: " + p + "expected = 8'd0;\n            endcase\n";
  h += "            if (io_out !== " + p + "expected) begin\n";
  h += "                if (" + p + "fails == 0) $display(\"HWL_MISMATCH sel=%0d cycle=%0d expected=%b observed=%b\", " + p +
       "cur, " + p + "cycle, " + p + "expected, io_out);\n";
  h += "                " + p + "fails = " + p + "fails + 1;\n            end\n        end\n    endtask\n\n";

  // Select and clock pins are recovered from the generated text and routes.
  std::smatch m;
  std::regex sel_re("wire \\[2:0\\] " + artifacts.prefix + "sel = \\{io_in\\[(\\d)\\], io_in\\[(\\d)\\], io_in\\[(\\d)\\]\\};");
  if (!std::regex_search(artifacts.verilog, m, sel_re)) throw NotFoundError("wrapper select decode not found");
  int sel_bits[3] = {std::stoi(m[3]), std::stoi(m[2]), std::stoi(m[1])};
  int clock_bit = -1;
  for (const auto& r : artifacts.routes) {
    const BenchmarkSpec* spec = nullptr;
    for (const auto& b : benchmarks)
      if (b.id == r.id) spec = &b;
    if (spec && spec->interface.clock())
      for (const auto& in : r.inputs)
        if (in.port == spec->interface.clock()->name) clock_bit = in.pins[0];
  }

  h += "    initial begin\n";
  for (int s = 0; s < kMaxBenchmarks; ++s) {
    const BenchmarkRoute* route = nullptr;
    for (const auto& r : artifacts.routes)
      if (r.select == s) route = &r;
    unsigned seed = options.seed * 2654435761u + static_cast<unsigned>(s) * 40503u + 1u;
    if (seed == 0) seed = 1;
    h += "        " + p + "cur = " + std::to_string(s) + ";\n        " + p + "fails = 0;\n";
    h += "        " + p + "rng = 32'd" + std::to_string(seed) + ";\n";
    h += "        for (" + p + "cycle = 0; " + p + "cycle < " + std::to_string(options.cycles) + "; " + p + "cycle = " + p +
         "cycle + 1) begin\n";
    h += "            " + p + "rng = " + p + "rng ^ (" + p + "rng << 13);\n";
    h += "            " + p + "rng = " + p + "rng ^ (" + p + "rng >> 17);\n";
    h += "            " + p + "rng = " + p + "rng ^ (" + p + "rng << 5);\n";
    h += "            io_in = " + p + "rng[7:0];\n";
    for (int k = 0; k < 3; ++k)
      h += "            io_in[" + std::to_string(sel_bits[k]) + "] = 1'b" + std::to_string((s >> k) & 1) + ";\n";
    if (route && route->reset_pin)
      h += "            io_in[" + std::to_string(*route->reset_pin) + "] = (" + p + "cycle < 2) ? 1'b1 : (" + p +
           "rng[13:9] == 5'd0);\n";
    if (clock_bit >= 0) h += "            io_in[" + std::to_string(clock_bit) + "] = 1'b0;\n";
    h += "            #5 " + p + "check;\n";
    if (clock_bit >= 0) h += "            io_in[" + std::to_string(clock_bit) + "] = 1'b1;\n";
    h += "            #5 " + p + "check;\n        end\n";
    h += "        $display(\"HWL_DONE sel=%0d fails=%0d\", " + std::to_string(s) + ", " + p + "fails);\n";
  }
  h += "        $finish;\n    end\nendmodule\n";

  std::vector<SourceText> sources = {{"wrapper.v", wrapper_source}};
  std::set<std::string> added;
  for (const auto& r : artifacts.routes) {
    for (const auto& b : benchmarks)
      if (b.id == r.id && added.insert(b.id).second)
        sources.push_back({"bench_" + b.id + ".v", b.golden_design_source});
  }
  sources.push_back({"harness.v", h});

  ValidationReport rep;
  Workdir wd(options.work_base);
  CompileResult c = bridge.compile(sources, p + "harness", wd.path());
  if (!c.ok()) {
    rep.raw_output = c.raw_output;
    for (int s = 0; s < kMaxBenchmarks; ++s) rep.selects.push_back({s, "", false, "harness did not compile", -1, "", ""});
    return rep;
  }
  SimResult sim = bridge.simulate(c, wd.path());
  rep.raw_output = sim.raw_output;
  std::regex done(R"(HWL_DONE sel=(\d+) fails=(\d+))");
  std::regex mismatch(R"(HWL_MISMATCH sel=(\d+) cycle=(\d+) expected=([01xz]+) observed=([01xz]+))");
  std::map<int, int> fails;
  std::map<int, SelectCheck> details;
  for (const auto& line : text::split_lines(sim.raw_output)) {
    std::smatch mm;
    if (std::regex_search(line, mm, done)) fails[std::stoi(mm[1])] = std::stoi(mm[2]);
    if (std::regex_search(line, mm, mismatch)) {
      SelectCheck& d = details[std::stoi(mm[1])];
      d.cycle = std::stoi(mm[2]);
      d.expected = mm[3];
      d.observed = mm[4];
    }
  }
  rep.passed = !sim.timed_out;
  for (int s = 0; s < kMaxBenchmarks; ++s) {
    SelectCheck sc = details.count(s) ? details[s] : SelectCheck{};
    sc.select = s;
    for (const auto& r : artifacts.routes)
      if (r.select == s) sc.benchmark = r.id;
    if (artifacts.routes.size() == 1) sc.benchmark = artifacts.routes[0].id;
    auto f = fails.find(s);
    if (f == fails.end()) {
      sc.status = "no result";
      sc.passed = false;
    } else if (f->second == 0) {
      sc.passed = true;
      sc.status = sc.benchmark.empty() ? "unassigned, quiescent" : "match";
    } else {
      sc.passed = false;
      sc.status = "mismatch";
    }
    if (!sc.passed) rep.passed = false;
    rep.selects.push_back(sc);
  }
  return rep;
}

}  // namespace hwloop
