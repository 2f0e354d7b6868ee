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

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hwloop/evalkit.hpp"
#include "hwloop/loop_engine.hpp"
#include "hwloop/wrapper_gen.hpp"

namespace hwloop::cli {

enum ExitCode { kCompleted = 0, kUsage = 1, kEnvironment = 2 };

struct ReplayReport {
  std::filesystem::path log;
  bool confirmed = false;
  std::string recorded;    // outcome JSON as logged
  std::string reproduced;  // outcome JSON from the re-run
  std::vector<std::string> mismatches;
  int tool_invocations = 0;
};

/// Re-runs a logged conversation from its assistant messages and compares
/// the outcome and every user prompt with the log.
ReplayReport replay_log(const std::filesystem::path& log, const std::vector<BenchmarkSpec>& suite,
                        const ToolchainConfig& tools,
                        const std::filesystem::path& work_base = std::filesystem::temp_directory_path());

/// Finds the scripted transcript for a benchmark trial in `dir`:
/// <id>.<trial>.yaml, then <id>.yaml.
std::filesystem::path find_transcript(const std::filesystem::path& dir, const std::string& id,
                                      const std::string& trial);

/// Writes the single-conversation artifacts into `dir`.
void write_artifacts(const std::filesystem::path& dir, const ConversationResult& result);

struct WrapperCommandResult {
  WrapperArtifacts artifacts;
  std::optional<ValidationReport> validation;  // absent when tools are missing or disabled
  std::string skipped_reason;
};

WrapperCommandResult wrapper_command(const std::vector<BenchmarkSpec>& suite, const PinMap& pinmap,
                                     const std::filesystem::path& out_dir, bool validate,
                                     const ToolchainConfig& tools);

struct ServeConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;
  std::filesystem::path assets;
  std::vector<BenchmarkSpec> suite;
  BackendConfig backend;
  LoopLimits limits;
  ToolchainConfig tools;
  bool confirm_regenerations = false;
  std::filesystem::path run_dir;  // conversation logs; empty: not persisted
};

/// Blocks serving HTTP assets and the /events WebSocket. Throws
/// EnvironmentError when the port cannot be bound. `on_listening` receives
/// the bound port (useful with port 0).
void serve(const ServeConfig& config, const std::function<void(unsigned short)>& on_listening = {},
           const std::function<bool()>& should_stop = {});

std::filesystem::path default_ui_assets();

}  // namespace hwloop::cli
