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
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hwloop/bench_spec.hpp"
#include "hwloop/hdl_parse.hpp"
#include "hwloop/llm_session.hpp"
#include "hwloop/tool_bridge.hpp"

namespace hwloop {

struct LoopLimits {
  int max_regenerations = 5;
  int max_user_messages = 25;
  int identical_error_threshold = 3;
  int per_human_level_attempts = 2;
  bool count_continuations = true;
  int max_uncounted_continuations = 10;  // only used when continuations are not counted
  std::size_t feedback_line_limit = 100;

  void validate() const;  // throws ConfigError
};

enum class LoopPhase { AwaitDesign, SpecGate, AwaitTestbench, BuildAndSim, Feedback, Terminal };
enum class TerminalClass { NFN, TF, SHF, MHF, AHF, FAIL };

std::string to_string(LoopPhase p);
std::string to_string(TerminalClass t);
TerminalClass terminal_from_string(const std::string& s);

// What the driver must do next.
enum class LoopAction {
  None,
  SendContinuation,
  Regenerate,
  CheckSpec,
  SendTestbenchPrompt,
  Build,
  SendFix,
  RequestHuman,
  SendHumanFeedback,
};
std::string to_string(LoopAction a);

struct LoopState {
  LoopPhase phase = LoopPhase::AwaitDesign;
  FeedbackLevel feedback_level = FeedbackLevel::None;
  int regen_count = 0;
  int user_message_count = 1;  // the design prompt opens every conversation
  int uncounted_continuations = 0;
  std::vector<ErrorFingerprint> fingerprint_history;
  int level_streak = 0;  // consecutive equal fingerprints at the current human level
  bool awaiting_human = false;
  std::string working_design;
  std::string working_testbench;
  std::optional<TerminalClass> result;
  std::string reason;  // why the conversation ended, for FAIL
  LoopAction next = LoopAction::None;

  bool terminal() const { return phase == LoopPhase::Terminal; }
  bool operator==(const LoopState&) const = default;
};

struct AssistantReplyEvent {
  std::string text;
  bool truncated = false;
  std::optional<std::string> design_update;
  std::optional<std::string> testbench_update;
};

struct SpecCheckEvent {
  bool conforms = false;
  std::string summary;
  std::string design_source;
};

struct ToolVerdictEvent {
  bool passed = false;
  ErrorFingerprint fingerprint;
};

struct HumanFeedbackEvent {
  std::string text;
  FeedbackLevel level = FeedbackLevel::SHF;
};

enum class AbortReason { WroteHdl, Other };

struct OperatorAbortEvent {
  AbortReason reason = AbortReason::Other;
};

using LoopEvent =
    std::variant<AssistantReplyEvent, SpecCheckEvent, ToolVerdictEvent, HumanFeedbackEvent, OperatorAbortEvent>;

std::string event_name(const LoopEvent& e);

/// Pure transition. Throws ProtocolError for an event the phase cannot take.
LoopState step(const LoopState& state, const LoopEvent& event, const LoopLimits& limits);

// ---------------------------------------------------------------------------

struct Outcome {
  std::string benchmark_id;
  std::string trial_label;
  TerminalClass terminal = TerminalClass::FAIL;
  std::optional<bool> compliant;  // absent when FAIL
  int user_messages = 0;
  std::string reason;
  bool skipped_env = false;  // harness could not run; never counted as FAIL
  std::vector<std::string> compliance_evidence;

  json to_json() const;
  static Outcome from_json(const json& j);
};

struct EscalationRequest {
  std::string benchmark_id;
  FeedbackLevel level = FeedbackLevel::SHF;
  std::vector<ErrorFingerprint> history;
  ToolVerdict latest;
};

struct OperatorAction {
  enum class Kind { Feedback, Abort } kind = Kind::Feedback;
  std::string text;
  AbortReason abort_reason = AbortReason::Other;
};

class FeedbackProvider {
 public:
  virtual ~FeedbackProvider() = default;
  virtual OperatorAction on_escalation(const EscalationRequest& request) = 0;
  // Asked before each spec-gate regeneration; false aborts the run.
  virtual bool approve_regeneration(const std::string& /*summary*/) { return true; }
};

/// Feedback entries consumed in order. Throws ReplayUnderrun when exhausted.
class ScriptedFeedbackProvider : public FeedbackProvider {
 public:
  explicit ScriptedFeedbackProvider(std::vector<ScriptedFeedback> entries);
  OperatorAction on_escalation(const EscalationRequest& request) override;

 private:
  std::vector<ScriptedFeedback> entries_;
  std::size_t next_ = 0;
};

/// Prompts on `out`, reads one paragraph (ended by a line ".") from `in`.
/// "/abort wrote_hdl" and "/abort" end the run.
class InteractiveFeedbackProvider : public FeedbackProvider {
 public:
  InteractiveFeedbackProvider(std::istream& in, std::ostream& out);
  OperatorAction on_escalation(const EscalationRequest& request) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

// Versioned records {"v":1,"seq":n,"type":..,"data":{..}}.
constexpr int kEventSchemaVersion = 1;
using EventSink = std::function<void(const json& event)>;

struct ComplianceVerdict {
  bool compliant = false;
  std::vector<std::string> evidence;
};
using ComplianceHook = std::function<ComplianceVerdict(const std::string& design)>;

struct RunOptions {
  LoopLimits limits;
  std::filesystem::path work_base = std::filesystem::temp_directory_path();
  bool keep_workdirs = false;
  EventSink events;
  ComplianceHook compliance;  // applied to non-FAIL results
};

struct ConversationResult {
  Outcome outcome;
  LoopState final_state;
  std::string design;
  std::string testbench;
  Conversation conversation;
  int tool_invocations = 0;
};

/// Drives one conversation to a terminal state. Transport errors and
/// EnvironmentError propagate after the log has been written.
ConversationResult run_conversation(const BenchmarkSpec& spec, Session& session, ToolBridge& bridge,
                                    FeedbackProvider& feedback, const RunOptions& options);

int count_user_messages(const Conversation& conversation);

/// Rebuilds the scripted inputs that reproduce a logged conversation.
struct ReplayInputs {
  Transcript transcript;
  std::vector<ScriptedFeedback> feedback;
};
ReplayInputs replay_inputs(const Conversation& conversation, const std::optional<json>& outcome);

// Working-source helpers shared with the CLI and tests.

/// Code from a reply chain, joined across continuations.
std::string reply_code(const std::vector<std::string>& replies);
/// Replaces same-named modules of `base` by those in `update`; appends new ones.
std::string merge_modules(const std::string& base, const std::string& update);

}  // namespace hwloop
