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

#include "hwloop/tool_bridge.hpp"

#include <unistd.h>

#include <boost/process.hpp>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "hwloop/errors.hpp"
#include "text.hpp"

#ifndef HWLOOP_TOOL_DIR
#define HWLOOP_TOOL_DIR ""
#endif

namespace hwloop {

namespace bp = boost::process;

namespace {

std::mutex g_discovery_mutex;

bool executable(const fs::path& p) {
  std::error_code ec;
  return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
}

std::optional<fs::path> on_path(const std::string& name) {
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    fs::path p = fs::path(dir) / name;
    if (executable(p)) return p;
  }
  return std::nullopt;
}

fs::path self_dir() {
  std::error_code ec;
  fs::path exe = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::path{} : exe.parent_path();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) {
  if (!s.empty() && s.find_first_of(" \t'\"\\$") == std::string::npos) return s;
  return "'" + text::replace_all(s, "'", "'\\''") + "'";
}

std::string command_line(const fs::path& exe, const std::vector<std::string>& args) {
  std::string out = quote(exe.string());
  for (const auto& a : args) out += " " + quote(a);
  return out;
}

struct RunOutcome {
  int exit_status = 0;
  bool timed_out = false;
  std::string output;
};

RunOutcome run_process(const fs::path& exe, const std::vector<std::string>& args, const fs::path& cwd,
                       std::chrono::milliseconds timeout) {
  RunOutcome out;
  fs::path log = cwd / ".hwloop_tool_output";
  std::error_code ec;
  fs::remove(log, ec);
  try {
    bp::child child(bp::exe = exe.string(), bp::args = args, bp::start_dir = cwd.string(),
                    (bp::std_out & bp::std_err) > log.string(), bp::std_in < bp::null);
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (child.running()) {
      if (std::chrono::steady_clock::now() >= deadline) {
        child.terminate();
        out.timed_out = true;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    if (!out.timed_out) {
      child.wait();
      out.exit_status = child.exit_code();
    } else {
      out.exit_status = -1;
    }
  } catch (const bp::process_error& e) {
    throw EnvironmentError("cannot run " + exe.string() + ": " + e.what());
  }
  out.output = read_file(log);
  fs::remove(log, ec);
  return out;
}

bool is_noise_line(std::string_view line) {
  return text::contains(line, "$finish called at") || text::starts_with_ci(text::trim(line), "VCD info:") ||
         text::contains(line, "$stop called at");
}

const std::regex& location_prefix() {
  static const std::regex re(R"(^\s*(?:ERROR:\s*)?[^\s:]+:\d+:(?:\d+:)?\s*)");
  return re;
}

}  // namespace

std::string to_string(ToolPhase p) { return p == ToolPhase::Compile ? "compile" : "simulate"; }

std::string ErrorFingerprint::str() const { return to_string(phase) + "[" + text::join(keys, " | ") + "]"; }

bool CompileResult::ok() const {
  if (exit_status != 0) return false;
  for (const auto& d : diagnostics)
    if (d.severity == "error") return false;
  return true;
}

Toolchain discover_toolchain(const ToolchainConfig& config) {
  std::lock_guard<std::mutex> lock(g_discovery_mutex);
  if (config.compiler || config.runtime) {
    if (!config.compiler || !config.runtime)
      throw EnvironmentError("both compiler and runtime paths must be configured");
    if (!executable(*config.compiler)) throw EnvironmentError("configured compiler not executable: " + config.compiler->string());
    if (!executable(*config.runtime)) throw EnvironmentError("configured runtime not executable: " + config.runtime->string());
    return {*config.compiler, *config.runtime, "config"};
  }
  const char* ec = std::getenv("HWLOOP_IVERILOG");
  const char* er = std::getenv("HWLOOP_VVP");
  if (ec && er && *ec && *er) {
    if (!executable(ec) || !executable(er))
      throw EnvironmentError("HWLOOP_IVERILOG / HWLOOP_VVP do not name executables");
    return {ec, er, "environment"};
  }
  auto pc = on_path("iverilog");
  auto pr = on_path("vvp");
  if (pc && pr) return {*pc, *pr, "path"};
  if (config.allow_bundled) {
    for (const fs::path& dir : {self_dir(), fs::path(HWLOOP_TOOL_DIR)}) {
      if (dir.empty()) continue;
      if (executable(dir / "hwlsim-compile") && executable(dir / "hwlsim-run"))
        return {dir / "hwlsim-compile", dir / "hwlsim-run", "bundled"};
    }
    auto bc = on_path("hwlsim-compile");
    auto br = on_path("hwlsim-run");
    if (bc && br) return {*bc, *br, "bundled"};
  }
  throw EnvironmentError(
      "no Verilog compiler/simulator found: install iverilog (iverilog + vvp on PATH), or set "
      "HWLOOP_IVERILOG and HWLOOP_VVP");
}

std::vector<Diagnostic> parse_diagnostics(std::string_view raw) {
  static const std::regex loc(R"(^([^\s:][^:]*):(\d+):\s*(.*)$)");
  std::vector<Diagnostic> out;
  for (const auto& line : text::split_lines(raw)) {
    if (text::trim(line).empty()) continue;
    std::smatch m;
    Diagnostic d;
    std::string msg;
    if (std::regex_match(line, m, loc)) {
      d.file = m[1];
      d.line = std::stoi(m[2]);
      msg = m[3];
    } else {
      msg = text::trim(line);
    }
    std::string lower = text::to_lower(msg);
    if (lower.rfind("warning", 0) == 0) d.severity = "warning";
    else if (lower.rfind("sorry", 0) == 0 || lower.find("error") != std::string::npos ||
             lower.find("i give up") != std::string::npos)
      d.severity = "error";
    else d.severity = "note";
    static const std::regex sev(R"(^(?:error|warning|sorry|note)\s*:\s*)", std::regex::icase);
    d.message = std::regex_replace(msg, sev, "");
    out.push_back(std::move(d));
  }
  return out;
}

std::string normalize_diagnostic(std::string_view line) {
  std::string s = std::regex_replace(std::string(line), location_prefix(), "");
  static const std::regex received(R"(\b(Received|Got|Actual|Observed|Output)(\s*[:=]\s*)[^,;]*)",
                                   std::regex::icase);
  s = std::regex_replace(s, received, "$1$2#");
  static const std::regex number(R"((\d+'[sS]?[bBoOdDhH][0-9a-fA-FxXzZ_?]+)|('[bBoOdDhH][0-9a-fA-FxXzZ_?]+)|\b[0-9][0-9a-fA-FxXzZ_]*\b)");
  s = std::regex_replace(s, number, "#");
  return text::collapse_space(text::trim(s));
}

ErrorFingerprint fingerprint_compile(const std::vector<Diagnostic>& diagnostics) {
  ErrorFingerprint fp{ToolPhase::Compile, {}};
  std::set<std::string> seen;
  for (const auto& d : diagnostics) {
    if (d.severity != "error") continue;
    std::string key = normalize_diagnostic(d.message);
    if (seen.insert(key).second) fp.keys.push_back(key);
  }
  if (fp.keys.empty()) fp.keys.push_back("compile-failed");
  return fp;
}

ErrorFingerprint fingerprint_sim(const std::vector<std::string>& error_lines, bool timed_out, bool crashed) {
  static const std::regex tc(R"(test\s*case\s*#?\s*(\d+)\D*?fail)", std::regex::icase);
  ErrorFingerprint fp{ToolPhase::Simulate, {}};
  std::set<std::string> seen;
  auto add = [&](std::string key) {
    if (seen.insert(key).second) fp.keys.push_back(std::move(key));
  };
  for (const auto& line : error_lines) {
    std::smatch m;
    if (std::regex_search(line, m, tc)) add("tb-case-mismatch:case-" + std::to_string(std::stoi(m[1])));
    else add(normalize_diagnostic(line));
  }
  if (timed_out) add("sim-timeout");
  else if (crashed) add("sim-crash");
  return fp;
}

Workdir::Workdir(const fs::path& base, bool keep) : keep_(keep) {
  std::error_code ec;
  fs::create_directories(base, ec);
  std::string tmpl = (base / "hwloop-XXXXXX").string();
  std::vector<char> buf(tmpl.begin(), tmpl.end());
  buf.push_back('\0');
  if (!::mkdtemp(buf.data())) throw EnvironmentError("cannot create work directory under " + base.string());
  path_ = buf.data();
}

Workdir::~Workdir() {
  if (!keep_) cleanup();
}

void Workdir::cleanup() {
  if (path_.empty()) return;
  std::error_code ec;
  fs::remove_all(path_, ec);
}

ToolBridge::ToolBridge(ToolchainConfig config) : config_(std::move(config)) {
  patterns_ = config_.extra_error_patterns;
}

const Toolchain& ToolBridge::toolchain() {
  if (!toolchain_) toolchain_ = discover_toolchain(config_);
  return *toolchain_;
}

CompileResult ToolBridge::compile(const std::vector<SourceText>& sources, const std::optional<std::string>& top,
                                  const fs::path& workdir) {
  if (sources.empty()) throw PreconditionError("compile: no source files");
  const Toolchain& tc = toolchain();
  std::vector<std::string> args = {"-g2001", "-o", "design.vvp"};
  if (top) {
    args.push_back("-s");
    args.push_back(*top);
  }
  for (const auto& s : sources) {
    if (s.name.empty() || s.name.find('/') != std::string::npos || s.name.find("..") != std::string::npos)
      throw PreconditionError("compile: source names must be plain file names: '" + s.name + "'");
    std::ofstream out(workdir / s.name, std::ios::binary);
    if (!out) throw EnvironmentError("cannot write " + (workdir / s.name).string());
    out << s.text;
    args.push_back(s.name);
  }
  std::error_code ec;
  fs::remove(workdir / "design.vvp", ec);
  ++invocations_;
  RunOutcome run = run_process(tc.compiler, args, workdir, config_.compile_timeout);
  if (run.timed_out) throw TimeoutError("compiler did not finish within " + std::to_string(config_.compile_timeout.count()) + " ms");
  CompileResult r;
  r.exit_status = run.exit_status;
  r.raw_output = std::move(run.output);
  r.diagnostics = parse_diagnostics(r.raw_output);
  r.command_line = command_line(tc.compiler, args);
  r.artifact = workdir / "design.vvp";
  return r;
}

SimResult ToolBridge::simulate(const CompileResult& compiled, const fs::path& workdir,
                               std::optional<std::chrono::milliseconds> timeout) {
  if (!compiled.ok()) throw PreconditionError("simulate: compilation did not succeed");
  const Toolchain& tc = toolchain();
  std::vector<std::string> args = {"-n", compiled.artifact.filename().string()};
  ++invocations_;
  RunOutcome run = run_process(tc.runtime, args, workdir, timeout.value_or(config_.sim_timeout));
  SimResult r;
  r.exit_status = run.exit_status;
  r.timed_out = run.timed_out;
  r.raw_output = std::move(run.output);
  r.command_line = command_line(tc.runtime, args);
  for (const auto& line : text::split_lines(r.raw_output)) {
    if (is_error_line(line)) r.error_lines.push_back(line);
    if (is_pass_banner(line)) r.saw_pass_banner = true;
  }
  return r;
}

bool ToolBridge::is_error_line(std::string_view line) const {
  std::string t = text::trim(line);
  if (t.empty()) return false;
  if (text::starts_with_ci(t, "error")) return true;
  if (text::contains(t, "FAILED")) return true;
  static const std::regex tool(R"(^[^\s:]+:\d+:\s*(error|syntax error|sorry))", std::regex::icase);
  if (std::regex_search(t, tool)) return true;
  for (const auto& p : patterns_)
    if (std::regex_search(t, std::regex(p, std::regex::icase))) return true;
  return false;
}

bool ToolBridge::is_pass_banner(std::string_view line) {
  return text::to_lower(line).find("passed") != std::string::npos;
}

namespace {

std::string bounded(const std::vector<std::string>& lines, std::size_t limit, bool& truncated) {
  truncated = lines.size() > limit;
  std::vector<std::string> kept(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(std::min(limit, lines.size())));
  return text::join(kept, "\n");
}

}  // namespace

ToolVerdict ToolBridge::classify(const CompileResult& r) const {
  ToolVerdict v;
  v.phase = ToolPhase::Compile;
  v.passed = r.ok();
  v.raw_output = r.raw_output;
  v.command_lines = {r.command_line};
  if (v.passed) return v;
  std::vector<std::string> lines;
  for (const auto& line : text::split_lines(r.raw_output))
    if (!text::trim(line).empty()) lines.push_back(line);
  v.feedback_text = bounded(lines, config_.feedback_line_limit, v.truncated);
  if (lines.empty()) v.note = "The compiler exited with status " + std::to_string(r.exit_status) + " and printed nothing.";
  v.fingerprint = fingerprint_compile(r.diagnostics);
  return v;
}

ToolVerdict ToolBridge::classify(const SimResult& r) const {
  ToolVerdict v;
  v.phase = ToolPhase::Simulate;
  bool crashed = !r.timed_out && r.exit_status != 0;
  v.passed = r.error_lines.empty() && !r.timed_out && !crashed;
  v.raw_output = r.raw_output;
  v.command_lines = {r.command_line};
  if (v.passed) return v;
  std::vector<std::string> lines;
  for (const auto& line : text::split_lines(r.raw_output))
    if (!text::trim(line).empty() && !is_noise_line(line)) lines.push_back(line);
  v.feedback_text = bounded(lines, config_.feedback_line_limit, v.truncated);
  if (r.timed_out)
    v.note = "The simulation did not finish within " + std::to_string(config_.sim_timeout.count()) +
             " ms and was stopped. The testbench may be missing $finish.";
  else if (crashed)
    v.note = "The simulator exited with status " + std::to_string(r.exit_status) + ".";
  v.fingerprint = fingerprint_sim(r.error_lines, r.timed_out, crashed);
  return v;
}

ToolVerdict ToolBridge::build_and_run(const std::vector<SourceText>& sources, const fs::path& workdir,
                                      const std::optional<std::string>& top) {
  CompileResult c = compile(sources, top, workdir);
  ToolVerdict cv = classify(c);
  if (!cv.passed) return cv;
  SimResult s = simulate(c, workdir);
  ToolVerdict sv = classify(s);
  sv.command_lines.insert(sv.command_lines.begin(), c.command_line);
  return sv;
}

}  // namespace hwloop
