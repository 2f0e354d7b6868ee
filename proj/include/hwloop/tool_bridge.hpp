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

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hwloop {

namespace fs = std::filesystem;

struct SourceText {
  std::string name;  // file name inside the workdir
  std::string text;
};

struct ToolchainConfig {
  std::optional<fs::path> compiler;  // explicit paths win over everything else
  std::optional<fs::path> runtime;
  bool allow_bundled = true;         // fall back to hwlsim-compile / hwlsim-run
  std::vector<std::string> extra_error_patterns;  // ECMAScript regex, case-insensitive
  std::chrono::milliseconds compile_timeout{30000};
  std::chrono::milliseconds sim_timeout{10000};
  std::size_t feedback_line_limit = 100;
};

struct Toolchain {
  fs::path compiler;
  fs::path runtime;
  std::string origin;  // config, environment, path or bundled
};

/// Config path, then HWLOOP_IVERILOG / HWLOOP_VVP, then `iverilog` / `vvp`
/// on PATH, then the bundled pair. Throws EnvironmentError.
Toolchain discover_toolchain(const ToolchainConfig& config);

struct Diagnostic {
  std::string severity;  // error, warning, note
  std::string file;
  int line = 0;
  std::string message;
};

struct CompileResult {
  int exit_status = 0;
  std::string raw_output;
  std::vector<Diagnostic> diagnostics;
  std::string command_line;
  fs::path artifact;
  bool ok() const;
};

struct SimResult {
  int exit_status = 0;
  std::string raw_output;
  std::vector<std::string> error_lines;
  bool saw_pass_banner = false;
  bool timed_out = false;
  std::string command_line;
};

enum class ToolPhase { Compile, Simulate };
std::string to_string(ToolPhase p);

struct ErrorFingerprint {
  ToolPhase phase = ToolPhase::Compile;
  std::vector<std::string> keys;
  bool operator==(const ErrorFingerprint&) const = default;
  std::string str() const;
};

struct ToolVerdict {
  ToolPhase phase = ToolPhase::Compile;
  bool passed = false;
  std::string feedback_text;  // verbatim output lines, bounded
  std::string note;           // harness remark (timeout, crash); not tool output
  ErrorFingerprint fingerprint;
  std::string raw_output;
  std::vector<std::string> command_lines;
  bool truncated = false;
};

/// Diagnostic lines from iverilog-style compiler output.
std::vector<Diagnostic> parse_diagnostics(std::string_view raw);

std::string normalize_diagnostic(std::string_view line);
ErrorFingerprint fingerprint_compile(const std::vector<Diagnostic>& diagnostics);
ErrorFingerprint fingerprint_sim(const std::vector<std::string>& error_lines, bool timed_out,
                                 bool crashed);

/// A scratch directory owned by one conversation step.
class Workdir {
 public:
  explicit Workdir(const fs::path& base = fs::temp_directory_path(), bool keep = false);
  ~Workdir();
  Workdir(const Workdir&) = delete;
  Workdir& operator=(const Workdir&) = delete;
  const fs::path& path() const { return path_; }
  void cleanup();  // idempotent

 private:
  fs::path path_;
  bool keep_;
};

class ToolBridge {
 public:
  explicit ToolBridge(ToolchainConfig config = {});

  const ToolchainConfig& config() const { return config_; }
  const Toolchain& toolchain();  // discovered on first use

  CompileResult compile(const std::vector<SourceText>& sources, const std::optional<std::string>& top,
                        const fs::path& workdir);
  SimResult simulate(const CompileResult& compiled, const fs::path& workdir,
                     std::optional<std::chrono::milliseconds> timeout = std::nullopt);

  ToolVerdict classify(const CompileResult& r) const;
  ToolVerdict classify(const SimResult& r) const;

  /// compile, then simulate if compilation succeeded.
  ToolVerdict build_and_run(const std::vector<SourceText>& sources, const fs::path& workdir,
                            const std::optional<std::string>& top = std::nullopt);

  bool is_error_line(std::string_view line) const;
  static bool is_pass_banner(std::string_view line);

  int invocations() const { return invocations_; }

 private:
  ToolchainConfig config_;
  std::optional<Toolchain> toolchain_;
  std::vector<std::string> patterns_;
  int invocations_ = 0;
};

}  // namespace hwloop
