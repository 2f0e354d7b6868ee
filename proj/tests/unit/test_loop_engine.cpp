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

#include "doctest.h"

#include <random>
#include <sstream>

#include "hwloop/errors.hpp"
#include "hwloop/loop_engine.hpp"
#include "support.hpp"

using namespace hwloop;
using hwloop::testing::fixture;
using hwloop::testing::TempDir;

namespace {

ErrorFingerprint fp(const std::string& key) { return {ToolPhase::Simulate, {key}}; }

AssistantReplyEvent reply(bool truncated = false) {
  AssistantReplyEvent e;
  e.truncated = truncated;
  return e;
}

SpecCheckEvent check(bool ok) {
  SpecCheckEvent e;
  e.conforms = ok;
  e.design_source = "module m; endmodule\n";
  return e;
}

ToolVerdictEvent verdict(bool passed, const std::string& key = "a") { return {passed, passed ? ErrorFingerprint{} : fp(key)}; }

LoopState run(std::vector<LoopEvent> events, const LoopLimits& limits = {}) {
  LoopState s;
  for (const auto& e : events) s = step(s, e, limits);
  return s;
}

// Reaches BuildAndSim with two user messages spent.
std::vector<LoopEvent> to_build() { return {reply(), check(true), reply()}; }

int level_rank(FeedbackLevel l) { return static_cast<int>(l); }

// Events the current phase accepts. `fps` is the fingerprint alphabet.
std::vector<LoopEvent> accepted(const LoopState& s, int fps) {
  std::vector<LoopEvent> out;
  switch (s.phase) {
    case LoopPhase::AwaitDesign:
    case LoopPhase::AwaitTestbench:
      out = {reply(false), reply(true)};
      break;
    case LoopPhase::SpecGate:
      out = {check(true), check(false)};
      break;
    case LoopPhase::BuildAndSim:
      out.push_back(verdict(true));
      for (int i = 0; i < fps; ++i) out.push_back(verdict(false, std::string(1, static_cast<char>('a' + i))));
      break;
    case LoopPhase::Feedback:
      if (s.awaiting_human) out.push_back(HumanFeedbackEvent{"hint", s.feedback_level});
      else out = {reply(false), reply(true)};
      break;
    case LoopPhase::Terminal:
      break;
  }
  return out;
}

// Trailing run of fingerprints equal to the last one.
int trailing_equal(const std::vector<ErrorFingerprint>& h) {
  int n = 0;
  for (auto it = h.rbegin(); it != h.rend() && *it == h.back(); ++it) ++n;
  return n;
}

}  // namespace

TEST_CASE("happy path without feedback is NFN") {
  LoopState s = run({reply(), check(true), reply(), verdict(true)});
  CHECK(s.terminal());
  CHECK(s.result == TerminalClass::NFN);
  CHECK(s.user_message_count == 2);
}

TEST_CASE("each phase names the next action") {
  LoopLimits l;
  LoopState s;
  s = step(s, reply(), l);
  CHECK(s.next == LoopAction::CheckSpec);
  s = step(s, check(false), l);
  CHECK(s.next == LoopAction::Regenerate);
  CHECK(s.phase == LoopPhase::AwaitDesign);
  CHECK(s.user_message_count == 1);
  s = step(s, reply(), l);
  s = step(s, check(true), l);
  CHECK(s.next == LoopAction::SendTestbenchPrompt);
  CHECK(s.working_design == "module m; endmodule\n");
  s = step(s, reply(true), l);
  CHECK(s.next == LoopAction::SendContinuation);
  CHECK(s.user_message_count == 3);
  s = step(s, reply(), l);
  CHECK(s.next == LoopAction::Build);
  s = step(s, verdict(false), l);
  CHECK(s.next == LoopAction::SendFix);
  CHECK(s.feedback_level == FeedbackLevel::TF);
}

TEST_CASE("spec gate gives up after the regeneration budget") {
  LoopLimits l;
  l.max_regenerations = 5;
  LoopState s;
  for (int i = 0; i < 5; ++i) {
    s = step(step(s, reply(), l), check(false), l);
    CHECK_FALSE(s.terminal());
  }
  s = step(step(s, reply(), l), check(false), l);
  CHECK(s.terminal());
  CHECK(s.result == TerminalClass::FAIL);
  CHECK(s.reason == "spec_gate");
  CHECK(s.user_message_count == 1);
}

TEST_CASE("three identical tool failures escalate to SHF") {
  LoopLimits l;
  auto ev = to_build();
  for (int i = 0; i < 2; ++i) {
    ev.push_back(verdict(false, "x"));
    ev.push_back(reply());
  }
  LoopState s = run(ev, l);
  CHECK(s.feedback_level == FeedbackLevel::TF);
  s = step(s, verdict(false, "x"), l);
  CHECK(s.feedback_level == FeedbackLevel::SHF);
  CHECK(s.awaiting_human);
  CHECK(s.next == LoopAction::RequestHuman);
  CHECK_THROWS_AS(step(s, reply(), l), ProtocolError);
  CHECK_THROWS_AS(step(s, HumanFeedbackEvent{"t", FeedbackLevel::MHF}, l), ProtocolError);
  s = step(s, HumanFeedbackEvent{"t", FeedbackLevel::SHF}, l);
  CHECK(s.next == LoopAction::SendHumanFeedback);
  s = step(s, reply(), l);
  s = step(s, verdict(true), l);
  CHECK(s.result == TerminalClass::SHF);
}

TEST_CASE("alternating tool failures stay at TF") {
  LoopLimits l;
  auto ev = to_build();
  for (int i = 0; i < 6; ++i) {
    ev.push_back(verdict(false, i % 2 ? "x" : "y"));
    ev.push_back(reply());
  }
  LoopState s = run(ev, l);
  CHECK(s.feedback_level == FeedbackLevel::TF);
  CHECK(step(s, verdict(true), l).result == TerminalClass::TF);
}

TEST_CASE("repeated failures climb SHF, MHF, AHF then fail") {
  LoopLimits l;
  l.max_user_messages = 100;
  auto ev = to_build();
  LoopState s = run(ev, l);
  std::vector<FeedbackLevel> seen;
  while (!s.terminal()) {
    s = step(s, verdict(false, "same"), l);
    if (s.terminal()) break;
    if (s.awaiting_human) {
      seen.push_back(s.feedback_level);
      s = step(s, HumanFeedbackEvent{"t", s.feedback_level}, l);
    }
    s = step(s, reply(), l);
  }
  CHECK(s.result == TerminalClass::FAIL);
  CHECK(s.reason == "feedback_exhausted");
  // Two feedback rounds per human level.
  CHECK(seen == std::vector<FeedbackLevel>{FeedbackLevel::SHF, FeedbackLevel::SHF, FeedbackLevel::MHF,
                                           FeedbackLevel::MHF, FeedbackLevel::AHF, FeedbackLevel::AHF});
}

TEST_CASE("message cap ends the conversation") {
  LoopLimits l;
  l.max_user_messages = 3;
  auto ev = to_build();
  ev.push_back(verdict(false, "x"));
  LoopState s = run(ev, l);
  CHECK(s.user_message_count == 3);
  s = step(s, reply(), l);
  s = step(s, verdict(false, "y"), l);
  CHECK(s.result == TerminalClass::FAIL);
  CHECK(s.reason == "message_limit");
  CHECK(s.user_message_count == 3);
}

TEST_CASE("uncounted continuations have their own cap") {
  LoopLimits l;
  l.count_continuations = false;
  l.max_uncounted_continuations = 2;
  LoopState s = run({reply(true), reply(true)}, l);
  CHECK(s.user_message_count == 1);
  CHECK(s.uncounted_continuations == 2);
  s = step(s, reply(true), l);
  CHECK(s.result == TerminalClass::FAIL);
  CHECK(s.reason == "continuation_limit");
}

TEST_CASE("operator abort and protocol errors") {
  LoopLimits l;
  LoopState s = run(to_build(), l);
  LoopState a = step(s, OperatorAbortEvent{AbortReason::WroteHdl}, l);
  CHECK(a.result == TerminalClass::FAIL);
  CHECK(a.reason == "operator_abort:wrote_hdl");
  CHECK_THROWS_AS(step(a, reply(), l), ProtocolError);
  CHECK_THROWS_AS(step(s, reply(), l), ProtocolError);
  CHECK_THROWS_AS(step(s, check(true), l), ProtocolError);
  CHECK_THROWS_AS(step(LoopState{}, verdict(true), l), ProtocolError);
  CHECK_THROWS_AS(step(LoopState{}, HumanFeedbackEvent{}, l), ProtocolError);
}

TEST_CASE("limit validation") {
  LoopLimits l;
  l.max_user_messages = 0;
  CHECK_THROWS_AS(l.validate(), ConfigError);
  CHECK_NOTHROW(LoopLimits{}.validate());
}

TEST_CASE("random traces keep the loop invariants") {
  std::mt19937 rng(7);
  int terminals = 0;
  for (int trace = 0; trace < 10000; ++trace) {
    LoopLimits l;
    l.max_user_messages = 2 + static_cast<int>(rng() % 24);
    l.max_regenerations = 1 + static_cast<int>(rng() % 5);
    l.identical_error_threshold = 1 + static_cast<int>(rng() % 4);
    l.per_human_level_attempts = 1 + static_cast<int>(rng() % 3);
    l.count_continuations = rng() % 4 != 0;
    int fps = 1 + static_cast<int>(rng() % 3);
    LoopState s;
    for (int steps = 0; !s.terminal(); ++steps) {
      REQUIRE(steps < 1000);
      auto options = accepted(s, fps);
      LoopEvent e = options[rng() % options.size()];
      if (rng() % 200 == 0) e = OperatorAbortEvent{AbortReason::Other};
      LoopState n = step(s, e, l);
      CHECK(level_rank(n.feedback_level) >= level_rank(s.feedback_level));
      CHECK(n.user_message_count <= l.max_user_messages);
      CHECK(n.user_message_count >= s.user_message_count);
      CHECK(n.regen_count <= l.max_regenerations + 1);
      if (n.terminal() && n.result != TerminalClass::FAIL) CHECK(std::holds_alternative<ToolVerdictEvent>(e));
      // Escalation needs the configured run of identical failures.
      if (s.feedback_level == FeedbackLevel::TF && n.feedback_level == FeedbackLevel::SHF)
        CHECK(trailing_equal(n.fingerprint_history) >= l.identical_error_threshold);
      if (level_rank(s.feedback_level) >= level_rank(FeedbackLevel::SHF) &&
          n.feedback_level != s.feedback_level)
        CHECK(trailing_equal(n.fingerprint_history) >= l.per_human_level_attempts);
      if (n.result == TerminalClass::FAIL && n.reason == "feedback_exhausted")
        CHECK(s.feedback_level == FeedbackLevel::AHF);
      s = n;
    }
    ++terminals;
  }
  CHECK(terminals == 10000);
}

namespace {

struct Enumeration {
  long paths = 0;
  int max_depth = 0;
  bool cycle = false;
};

void explore(const LoopState& s, const LoopLimits& l, std::vector<LoopState>& path, Enumeration& out) {
  if (s.terminal()) {
    ++out.paths;
    out.max_depth = std::max(out.max_depth, static_cast<int>(path.size()));
    return;
  }
  for (const auto& e : accepted(s, 2)) {
    LoopState n = step(s, e, l);
    for (const auto& p : path)
      if (p == n) out.cycle = true;
    if (out.cycle) return;
    path.push_back(n);
    explore(n, l, path, out);
    path.pop_back();
  }
}

}  // namespace

TEST_CASE("every event sequence terminates for small caps") {
  for (int cap = 1; cap <= 6; ++cap) {
    CAPTURE(cap);
    LoopLimits l;
    l.max_user_messages = cap;
    l.max_regenerations = 2;
    l.identical_error_threshold = 2;
    l.per_human_level_attempts = 1;
    Enumeration e;
    std::vector<LoopState> path{LoopState{}};
    explore(LoopState{}, l, path, e);
    CHECK_FALSE(e.cycle);
    CHECK(e.paths > 0);
    // Each user message buys at most one reply, three regenerations, one
    // spec check and one verdict.
    CHECK(e.max_depth <= 1 + cap * 4 + 3 * 2);
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Fixture {
  std::vector<json> events;
  ConversationResult result;
};

Fixture drive(const std::string& benchmark, Transcript t, ToolchainConfig tools = {}, LoopLimits limits = {}) {
  const BenchmarkSpec& spec = builtin_benchmark(benchmark);
  Conversation conv;
  conv.id = benchmark + ".T1";
  conv.benchmark_id = benchmark;
  conv.trial_label = "T1";
  ScriptedFeedbackProvider feedback(t.feedback);
  Session session(std::make_unique<ScriptedBackend>(t), conv);
  ToolBridge bridge(tools);
  TempDir work;
  Fixture f;
  RunOptions opt;
  opt.limits = limits;
  opt.work_base = work.path;
  opt.events = [&](const json& e) { f.events.push_back(e); };
  f.result = run_conversation(spec, session, bridge, feedback, opt);
  return f;
}

Transcript transcript(const std::string& name) { return load_transcript(fixture("transcripts/" + name)); }

}  // namespace

TEST_CASE("shift register conversation needs one round of tool feedback") {
  Fixture f = drive("shift_register", transcript("sr_tool_feedback.yaml"));
  CHECK(f.result.outcome.terminal == TerminalClass::TF);
  CHECK(f.result.outcome.user_messages == 3);
  CHECK(f.result.tool_invocations == 4);
  const auto& msgs = f.result.conversation.messages;
  REQUIRE(msgs.size() == 6);
  CHECK(msgs[4].phase == MessagePhase::ToolFeedback);
  CHECK(msgs[4].content.find("Error: Test case 1 failed. Expected: 10000000, Received: 01111111") !=
        std::string::npos);
  CHECK(f.result.design.find("module shift_register") != std::string::npos);
  CHECK(f.result.testbench.find("$finish") != std::string::npos);
  // Event records are versioned and numbered without gaps.
  REQUIRE_FALSE(f.events.empty());
  for (std::size_t i = 0; i < f.events.size(); ++i) {
    CHECK(f.events[i]["v"] == 1);
    CHECK(f.events[i]["seq"] == static_cast<long>(i));
  }
  CHECK(f.events.back()["type"] == "terminal");
  CHECK(f.events.back()["data"]["terminal"] == "TF");
}

TEST_CASE("a repeated syntax error reaches simple human feedback") {
  Fixture f = drive("shift_register", transcript("shf_escalation.yaml"));
  CHECK(f.result.outcome.terminal == TerminalClass::SHF);
  CHECK(f.result.outcome.user_messages == 5);
  int escalations = 0;
  for (const auto& e : f.events)
    if (e["type"] == "escalation") ++escalations;
  CHECK(escalations == 1);
  const auto& msgs = f.result.conversation.messages;
  CHECK(msgs[8].phase == MessagePhase::HumanFeedback);
  CHECK(msgs[8].feedback_level == FeedbackLevel::SHF);
}

TEST_CASE("an operator who writes the HDL ends the run as FAIL") {
  Transcript t = transcript("shf_escalation.yaml");
  t.feedback = {{FeedbackLevel::SHF, "", std::string("wrote_hdl")}};
  Fixture f = drive("shift_register", t);
  CHECK(f.result.outcome.terminal == TerminalClass::FAIL);
  CHECK(f.result.outcome.reason == "operator_abort:wrote_hdl");
  CHECK_FALSE(f.result.outcome.compliant.has_value());
}

TEST_CASE("a nonconforming design is regenerated until the budget runs out") {
  Fixture f = drive("shift_register", transcript("bard_six_takes.yaml"));
  CHECK(f.result.outcome.terminal == TerminalClass::FAIL);
  CHECK(f.result.outcome.reason == "spec_gate");
  CHECK(f.result.tool_invocations == 0);
  CHECK(f.result.outcome.user_messages == 1);
  int superseded = 0;
  for (const auto& m : f.result.conversation.messages) superseded += m.superseded;
  CHECK(superseded == 5);
}

TEST_CASE("a testbench that never finishes is caught and fixed") {
  ToolchainConfig tools;
  tools.sim_timeout = std::chrono::milliseconds(1500);
  Fixture f = drive("shift_register", transcript("no_finish.yaml"), tools);
  CHECK(f.result.outcome.terminal == TerminalClass::TF);
  CHECK(f.result.outcome.user_messages == 3);
  CHECK(f.result.conversation.messages[4].content.find("$finish") != std::string::npos);
}

TEST_CASE("replay inputs reproduce the conversation") {
  Fixture first = drive("shift_register", transcript("shf_escalation.yaml"));
  ReplayInputs in = replay_inputs(first.result.conversation, first.result.outcome.to_json());
  Fixture again = drive("shift_register", in.transcript);
  CHECK(again.result.outcome.to_json() == first.result.outcome.to_json());
  REQUIRE(again.result.conversation.messages.size() == first.result.conversation.messages.size());
  for (std::size_t i = 0; i < first.result.conversation.messages.size(); ++i)
    CHECK(again.result.conversation.messages[i].content == first.result.conversation.messages[i].content);
}

TEST_CASE("run_conversation wants a fresh session") {
  Conversation conv;
  ChatMessage m;
  m.content = "hi";
  conv.messages.push_back(m);
  Session s(std::make_unique<ScriptedBackend>(Transcript{}), conv);
  ToolBridge b;
  ScriptedFeedbackProvider fb({});
  CHECK_THROWS_AS(run_conversation(builtin_benchmark("abro"), s, b, fb, RunOptions{}), PreconditionError);
}

TEST_CASE("module merging and reply code") {
  std::string base = "module a(input x); endmodule\nmodule b(input y); endmodule\n";
  std::string merged = merge_modules(base, "module b(input z); endmodule\nmodule c; endmodule\n");
  CHECK(merged.find("input z") != std::string::npos);
  CHECK(merged.find("input y") == std::string::npos);
  CHECK(merged.find("module a") < merged.find("module b"));
  CHECK(merged.find("module c") != std::string::npos);
  CHECK(merge_modules("", "module q; endmodule\n") == "module q; endmodule\n");

  std::string code = reply_code({"Here:\n```verilog\nmodule m(input a);\n  wire w;\n", "```verilog\n  wire w;\nendmodule\n```\n"});
  CHECK(code.find("module m") != std::string::npos);
  CHECK(code.find("endmodule") != std::string::npos);
  CHECK(reply_code({"no code at all"}).empty());
}

TEST_CASE("interactive feedback provider") {
  std::istringstream in("check the reset polarity\n.\n/abort wrote_hdl\n");
  std::ostringstream out;
  InteractiveFeedbackProvider p(in, out);
  EscalationRequest req;
  req.benchmark_id = "abro";
  req.latest.feedback_text = "Error: o stuck low";
  OperatorAction a = p.on_escalation(req);
  CHECK(a.kind == OperatorAction::Kind::Feedback);
  CHECK(a.text == "check the reset polarity");
  CHECK(out.str().find("Error: o stuck low") != std::string::npos);
  OperatorAction b = p.on_escalation(req);
  CHECK(b.kind == OperatorAction::Kind::Abort);
  CHECK(b.abort_reason == AbortReason::WroteHdl);
}
