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

#include "commands.hpp"

#include "hwloop/errors.hpp"
#include "text.hpp"

namespace hwloop::cli {

namespace fs = std::filesystem;

namespace {

LoopLimits limits_from_metadata(const json& metadata) {
  LoopLimits l;
  if (!metadata.contains("limits")) return l;
  const json& j = metadata["limits"];
  l.max_regenerations = j.value("max_regenerations", l.max_regenerations);
  l.max_user_messages = j.value("max_user_messages", l.max_user_messages);
  l.identical_error_threshold = j.value("identical_error_threshold", l.identical_error_threshold);
  l.per_human_level_attempts = j.value("per_human_level_attempts", l.per_human_level_attempts);
  l.count_continuations = j.value("count_continuations", l.count_continuations);
  l.feedback_line_limit = j.value("feedback_line_limit", l.feedback_line_limit);
  return l;
}

std::vector<const ChatMessage*> by_role(const Conversation& c, Role role) {
  std::vector<const ChatMessage*> out;
  for (const auto& m : c.messages)
    if (m.role == role) out.push_back(&m);
  return out;
}

}  // namespace

ReplayReport replay_log(const fs::path& log, const std::vector<BenchmarkSpec>& suite, const ToolchainConfig& tools,
                        const fs::path& work_base) {
  ReplayReport rep;
  rep.log = log;
  LoadedLog loaded = load_conversation_log(log);
  if (!loaded.outcome) throw RecordError("log has no outcome record", 0);
  rep.recorded = loaded.outcome->dump();

  const Conversation& original = loaded.conversation;
  const BenchmarkSpec* spec = nullptr;
  for (const auto& b : suite)
    if (b.id == original.benchmark_id) spec = &b;
  if (!spec) throw NotFoundError("benchmark '" + original.benchmark_id + "' is not in the suite");

  ReplayInputs inputs = replay_inputs(original, loaded.outcome);
  Conversation fresh;
  fresh.id = original.id;
  fresh.benchmark_id = original.benchmark_id;
  fresh.trial_label = original.trial_label;
  Session session(std::make_unique<ScriptedBackend>(inputs.transcript), fresh, nullptr);
  ScriptedFeedbackProvider feedback(inputs.feedback);
  ToolBridge bridge(tools);
  ToolBridge compliance_bridge(tools);
  RunOptions opt;
  opt.limits = limits_from_metadata(original.metadata);
  opt.work_base = work_base;
  opt.compliance = [&](const std::string& design) {
    ComplianceResult c = check_compliance(design, *spec, compliance_bridge, work_base);
    return ComplianceVerdict{c.compliant, c.evidence};
  };

  ConversationResult result;
  try {
    result = run_conversation(*spec, session, bridge, feedback, opt);
  } catch (const ReplayUnderrun& e) {
    rep.mismatches.push_back(std::string("replay diverged: ") + e.what());
    return rep;
  } catch (const ProtocolError& e) {
    rep.mismatches.push_back(std::string("replay diverged: ") + e.what());
    return rep;
  }
  rep.tool_invocations = result.tool_invocations;
  rep.reproduced = result.outcome.to_json().dump();
  if (rep.reproduced != rep.recorded) rep.mismatches.push_back("outcome differs");

  auto logged_users = by_role(original, Role::User);
  auto replayed_users = by_role(result.conversation, Role::User);
  if (logged_users.size() != replayed_users.size()) {
    rep.mismatches.push_back("user message count differs: logged " + std::to_string(logged_users.size()) +
                             ", replayed " + std::to_string(replayed_users.size()));
  } else {
    for (std::size_t i = 0; i < logged_users.size(); ++i)
      if (logged_users[i]->content != replayed_users[i]->content)
        rep.mismatches.push_back("user message " + std::to_string(i + 1) + " differs");
  }
  rep.confirmed = rep.mismatches.empty();
  return rep;
}

fs::path find_transcript(const fs::path& dir, const std::string& id, const std::string& trial) {
  for (const fs::path& p : {dir / (id + "." + trial + ".yaml"), dir / (id + ".yaml")})
    if (fs::exists(p)) return p;
  throw ConfigError("no transcript for " + id + " " + trial + " in " + dir.string());
}

void write_artifacts(const fs::path& dir, const ConversationResult& result) {
  fs::create_directories(dir);
  text::write_file(dir / "design.v", result.design);
  text::write_file(dir / "testbench.v", result.testbench);
  text::write_file(dir / "outcome.json", result.outcome.to_json().dump(2) + "\n");
}

WrapperCommandResult wrapper_command(const std::vector<BenchmarkSpec>& suite, const PinMap& pinmap,
                                     const fs::path& out_dir, bool validate, const ToolchainConfig& tools) {
  WrapperCommandResult r;
  r.artifacts = generate_wrapper(suite, pinmap);
  fs::create_directories(out_dir);
  text::write_file(out_dir / (r.artifacts.top + ".v"), r.artifacts.verilog);
  text::write_file(out_dir / "pinout.txt", r.artifacts.pinout);
  if (!validate) {
    r.skipped_reason = "validation disabled";
    return r;
  }
  ToolBridge bridge(tools);
  try {
    bridge.toolchain();
  } catch (const EnvironmentError& e) {
    r.skipped_reason = std::string("environment: ") + e.what();
    return r;
  }
  ValidationOptions vo;
  r.validation = validate_wrapper(r.artifacts.verilog, r.artifacts, suite, bridge, vo);
  text::write_file(out_dir / "validation.txt", r.validation->summary());
  return r;
}

}  // namespace hwloop::cli
