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

#include "hwloop/loop_engine.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include "hwloop/errors.hpp"
#include "text.hpp"

namespace hwloop {

namespace {

constexpr const char* kReasonMessageCap = "message_limit";
constexpr const char* kReasonSpecGate = "spec_gate";
constexpr const char* kReasonAhf = "feedback_exhausted";
constexpr const char* kReasonContinuations = "continuation_limit";
constexpr const char* kReasonWroteHdl = "operator_abort:wrote_hdl";
constexpr const char* kReasonAbort = "operator_abort:other";

FeedbackLevel next_level(FeedbackLevel l) {
  switch (l) {
    case FeedbackLevel::None: return FeedbackLevel::TF;
    case FeedbackLevel::TF: return FeedbackLevel::SHF;
    case FeedbackLevel::SHF: return FeedbackLevel::MHF;
    default: return FeedbackLevel::AHF;
  }
}

bool human_level(FeedbackLevel l) {
  return l == FeedbackLevel::SHF || l == FeedbackLevel::MHF || l == FeedbackLevel::AHF;
}

TerminalClass as_terminal(FeedbackLevel l) {
  switch (l) {
    case FeedbackLevel::None: return TerminalClass::NFN;
    case FeedbackLevel::TF: return TerminalClass::TF;
    case FeedbackLevel::SHF: return TerminalClass::SHF;
    case FeedbackLevel::MHF: return TerminalClass::MHF;
    case FeedbackLevel::AHF: return TerminalClass::AHF;
  }
  return TerminalClass::FAIL;
}

[[noreturn]] void protocol(const LoopState& s, const LoopEvent& e) {
  throw ProtocolError("event " + event_name(e) + " not accepted in phase " + to_string(s.phase) +
                      (s.awaiting_human ? " (awaiting human feedback)" : ""));
}

}  // namespace

void LoopLimits::validate() const {
  if (max_regenerations < 1 || max_user_messages < 1 || identical_error_threshold < 1 ||
      per_human_level_attempts < 1 || max_uncounted_continuations < 1 || feedback_line_limit < 1)
    throw ConfigError("loop limits must all be at least 1");
}

std::string to_string(LoopPhase p) {
  switch (p) {
    case LoopPhase::AwaitDesign: return "await_design";
    case LoopPhase::SpecGate: return "spec_gate";
    case LoopPhase::AwaitTestbench: return "await_testbench";
    case LoopPhase::BuildAndSim: return "build_and_sim";
    case LoopPhase::Feedback: return "feedback";
    case LoopPhase::Terminal: return "terminal";
  }
  return "?";
}

std::string to_string(TerminalClass t) {
  switch (t) {
    case TerminalClass::NFN: return "NFN";
    case TerminalClass::TF: return "TF";
    case TerminalClass::SHF: return "SHF";
    case TerminalClass::MHF: return "MHF";
    case TerminalClass::AHF: return "AHF";
    case TerminalClass::FAIL: return "FAIL";
  }
  return "?";
}

TerminalClass terminal_from_string(const std::string& s) {
  for (auto t : {TerminalClass::NFN, TerminalClass::TF, TerminalClass::SHF, TerminalClass::MHF, TerminalClass::AHF,
                 TerminalClass::FAIL})
    if (to_string(t) == s) return t;
  throw ConfigError("unknown outcome '" + s + "'");
}

std::string to_string(LoopAction a) {
  switch (a) {
    case LoopAction::None: return "none";
    case LoopAction::SendContinuation: return "send_continuation";
    case LoopAction::Regenerate: return "regenerate";
    case LoopAction::CheckSpec: return "check_spec";
    case LoopAction::SendTestbenchPrompt: return "send_testbench_prompt";
    case LoopAction::Build: return "build";
    case LoopAction::SendFix: return "send_fix";
    case LoopAction::RequestHuman: return "request_human";
    case LoopAction::SendHumanFeedback: return "send_human_feedback";
  }
  return "?";
}

std::string event_name(const LoopEvent& e) {
  static const char* names[] = {"assistant_reply", "spec_check", "tool_verdict", "human_feedback", "operator_abort"};
  return names[e.index()];
}

LoopState step(const LoopState& state, const LoopEvent& event, const LoopLimits& limits) {
  if (state.terminal()) throw ProtocolError("event " + event_name(event) + " after the conversation ended");
  LoopState s = state;

  auto fail = [&](const std::string& reason) {
    s.phase = LoopPhase::Terminal;
    s.result = TerminalClass::FAIL;
    s.reason = reason;
    s.next = LoopAction::None;
    s.awaiting_human = false;
    return s;
  };
  // Sending one more user message; false when that would exceed the cap.
  auto send = [&](LoopAction action) {
    if (s.user_message_count + 1 > limits.max_user_messages) return false;
    ++s.user_message_count;
    s.next = action;
    return true;
  };

  if (const auto* abort = std::get_if<OperatorAbortEvent>(&event))
    return fail(abort->reason == AbortReason::WroteHdl ? kReasonWroteHdl : kReasonAbort);

  if (const auto* reply = std::get_if<AssistantReplyEvent>(&event)) {
    bool accepts = s.phase == LoopPhase::AwaitDesign || s.phase == LoopPhase::AwaitTestbench ||
                   (s.phase == LoopPhase::Feedback && !s.awaiting_human);
    if (!accepts) protocol(state, event);
    if (reply->truncated) {
      if (limits.count_continuations) {
        if (!send(LoopAction::SendContinuation)) return fail(kReasonMessageCap);
      } else {
        if (s.uncounted_continuations >= limits.max_uncounted_continuations) return fail(kReasonContinuations);
        ++s.uncounted_continuations;
        s.next = LoopAction::SendContinuation;
      }
      return s;
    }
    if (s.phase == LoopPhase::AwaitDesign) {
      s.phase = LoopPhase::SpecGate;
      s.next = LoopAction::CheckSpec;
      return s;
    }
    if (reply->design_update) s.working_design = *reply->design_update;
    if (reply->testbench_update) s.working_testbench = *reply->testbench_update;
    s.phase = LoopPhase::BuildAndSim;
    s.next = LoopAction::Build;
    return s;
  }

  if (const auto* check = std::get_if<SpecCheckEvent>(&event)) {
    if (s.phase != LoopPhase::SpecGate) protocol(state, event);
    if (check->conforms) {
      s.working_design = check->design_source;
      if (!send(LoopAction::SendTestbenchPrompt)) return fail(kReasonMessageCap);
      s.phase = LoopPhase::AwaitTestbench;
      return s;
    }
    ++s.regen_count;
    if (s.regen_count > limits.max_regenerations) return fail(kReasonSpecGate);
    s.phase = LoopPhase::AwaitDesign;
    s.next = LoopAction::Regenerate;
    return s;
  }

  if (const auto* verdict = std::get_if<ToolVerdictEvent>(&event)) {
    if (s.phase != LoopPhase::BuildAndSim) protocol(state, event);
    if (verdict->passed) {
      s.phase = LoopPhase::Terminal;
      s.result = as_terminal(s.feedback_level);
      s.next = LoopAction::None;
      return s;
    }
    s.fingerprint_history.push_back(verdict->fingerprint);
    const auto& h = s.fingerprint_history;
    if (s.feedback_level == FeedbackLevel::None) s.feedback_level = FeedbackLevel::TF;
    bool request_human = false;
    if (s.feedback_level == FeedbackLevel::TF) {
      int trailing = 0;
      for (auto it = h.rbegin(); it != h.rend() && *it == h.back(); ++it) ++trailing;
      if (trailing >= limits.identical_error_threshold) {
        s.feedback_level = FeedbackLevel::SHF;
        s.level_streak = 0;
        request_human = true;
      }
    } else {
      bool same = s.level_streak > 0 && h.size() >= 2 && h[h.size() - 2] == h.back();
      s.level_streak = same ? s.level_streak + 1 : 1;
      if (s.level_streak >= limits.per_human_level_attempts) {
        if (s.feedback_level == FeedbackLevel::AHF) return fail(kReasonAhf);
        s.feedback_level = next_level(s.feedback_level);
        s.level_streak = 0;
      }
      request_human = true;
    }
    s.phase = LoopPhase::Feedback;
    if (request_human) {
      s.awaiting_human = true;
      s.next = LoopAction::RequestHuman;
      return s;
    }
    if (!send(LoopAction::SendFix)) return fail(kReasonMessageCap);
    return s;
  }

  const auto& human = std::get<HumanFeedbackEvent>(event);
  if (s.phase != LoopPhase::Feedback || !s.awaiting_human || human.level != s.feedback_level)
    protocol(state, event);
  if (!send(LoopAction::SendHumanFeedback)) return fail(kReasonMessageCap);
  s.awaiting_human = false;
  return s;
}

// ---------------------------------------------------------------------------

json Outcome::to_json() const {
  json j = {{"benchmark_id", benchmark_id},
            {"trial_label", trial_label},
            {"terminal", to_string(terminal)},
            {"compliant", compliant ? json(*compliant ? "yes" : "no") : json(nullptr)},
            {"user_messages", user_messages},
            {"reason", reason},
            {"compliance_evidence", compliance_evidence}};
  if (skipped_env) j["skipped_env"] = true;
  return j;
}

Outcome Outcome::from_json(const json& j) {
  Outcome o;
  o.benchmark_id = j.at("benchmark_id").get<std::string>();
  o.trial_label = j.at("trial_label").get<std::string>();
  o.terminal = terminal_from_string(j.at("terminal").get<std::string>());
  if (!j.at("compliant").is_null()) o.compliant = j["compliant"].get<std::string>() == "yes";
  o.user_messages = j.at("user_messages").get<int>();
  o.reason = j.value("reason", "");
  o.skipped_env = j.value("skipped_env", false);
  o.compliance_evidence = j.value("compliance_evidence", std::vector<std::string>{});
  return o;
}

ScriptedFeedbackProvider::ScriptedFeedbackProvider(std::vector<ScriptedFeedback> entries)
    : entries_(std::move(entries)) {}

OperatorAction ScriptedFeedbackProvider::on_escalation(const EscalationRequest& request) {
  if (next_ >= entries_.size())
    throw ReplayUnderrun("no scripted feedback left for the " + to_string(request.level) + " request");
  const ScriptedFeedback& f = entries_[next_++];
  OperatorAction a;
  if (f.abort_reason) {
    a.kind = OperatorAction::Kind::Abort;
    a.abort_reason = *f.abort_reason == "wrote_hdl" ? AbortReason::WroteHdl : AbortReason::Other;
    return a;
  }
  if (f.level != request.level)
    throw ProtocolError("scripted feedback is " + to_string(f.level) + " but the engine asked for " +
                        to_string(request.level));
  a.text = f.text;
  return a;
}

InteractiveFeedbackProvider::InteractiveFeedbackProvider(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

OperatorAction InteractiveFeedbackProvider::on_escalation(const EscalationRequest& request) {
  out_ << "==== " << to_string(request.level) << " feedback requested for " << request.benchmark_id << " ====\n";
  if (!request.latest.feedback_text.empty()) out_ << request.latest.feedback_text << "\n";
  if (!request.latest.note.empty()) out_ << request.latest.note << "\n";
  out_ << "==== type feedback; end with a line containing only '.'; '/abort wrote_hdl' or '/abort' to stop ====\n";
  out_.flush();
  OperatorAction a;
  std::string line;
  bool any = false;
  while (std::getline(in_, line)) {
    any = true;
    std::string t = text::trim(line);
    if (a.text.empty() && t.rfind("/abort", 0) == 0) {
      a.kind = OperatorAction::Kind::Abort;
      a.abort_reason = text::contains(t, "wrote_hdl") ? AbortReason::WroteHdl : AbortReason::Other;
      return a;
    }
    if (t == ".") break;
    if (!a.text.empty()) a.text += "\n";
    a.text += line;
  }
  if (!any) {
    a.kind = OperatorAction::Kind::Abort;
    a.abort_reason = AbortReason::Other;
  }
  return a;
}

// ---------------------------------------------------------------------------

namespace {

struct ModuleText {
  std::string name;
  std::string text;
  bool has_ports = false;
};

struct SplitSource {
  std::string preamble;
  std::vector<ModuleText> modules;
};

SplitSource split_source(const std::string& source) {
  SplitSource out;
  auto spans = module_spans(source);
  if (spans.empty()) return out;
  out.preamble = source.substr(0, spans.front().begin);
  std::vector<InterfaceDesc> ifaces;
  try {
    ifaces = parse_module_interface(source);
  } catch (const Error&) {
  }
  for (const auto& s : spans) {
    ModuleText m{s.name, source.substr(s.begin, s.end - s.begin), false};
    if (!m.text.empty() && m.text.back() != '\n') m.text += "\n";
    for (const auto& i : ifaces)
      if (i.module_name == s.name) m.has_ports = !i.ports.empty();
    out.modules.push_back(std::move(m));
  }
  // Keep only compiler directives from the preamble; prose never reaches it
  // because extraction already stripped it.
  return out;
}

std::string join_source(const SplitSource& s) {
  std::string out = s.preamble;
  for (const auto& m : s.modules) out += m.text;
  return out;
}

bool has_module(const SplitSource& s, const std::string& name) {
  return std::any_of(s.modules.begin(), s.modules.end(), [&](const ModuleText& m) { return m.name == name; });
}

void replace_or_append(SplitSource& target, const ModuleText& m) {
  for (auto& t : target.modules)
    if (t.name == m.name) {
      t = m;
      return;
    }
  target.modules.push_back(m);
}

std::string message_code(const std::string& reply) {
  std::string out;
  for (const auto& b : extract_code_blocks(reply)) out += b.text;
  return out;
}

}  // namespace

std::string reply_code(const std::vector<std::string>& replies) {
  if (replies.size() == 1) return message_code(replies.front());
  std::vector<CodeBlock> parts;
  for (std::size_t i = 0; i < replies.size(); ++i) {
    CodeBlock b;
    b.text = message_code(replies[i]);
    b.origin_message_index = static_cast<int>(i);
    if (!text::trim(b.text).empty()) parts.push_back(std::move(b));
  }
  if (parts.empty()) return {};
  return assemble_design(parts);
}

std::string merge_modules(const std::string& base, const std::string& update) {
  SplitSource b = split_source(base);
  SplitSource u = split_source(update);
  if (b.modules.empty()) return update;
  for (const auto& m : u.modules) replace_or_append(b, m);
  if (text::trim(b.preamble).empty()) b.preamble = u.preamble;
  return join_source(b);
}

int count_user_messages(const Conversation& conversation) { return conversation.count_user_messages(); }

ReplayInputs replay_inputs(const Conversation& conversation, const std::optional<json>& outcome) {
  ReplayInputs in;
  int position = -1;
  for (const auto& m : conversation.messages) {
    if (m.role == Role::User) {
      ++position;
      in.transcript.replies.emplace_back();
      if (m.phase == MessagePhase::HumanFeedback)
        in.feedback.push_back({m.feedback_level.value_or(FeedbackLevel::SHF), m.content, std::nullopt});
    } else if (position >= 0) {
      in.transcript.replies[static_cast<std::size_t>(position)].push_back(m.content);
    }
  }
  if (outcome) {
    std::string reason = outcome->value("reason", "");
    if (reason == kReasonWroteHdl) in.feedback.push_back({FeedbackLevel::SHF, "", std::string("wrote_hdl")});
    else if (reason == kReasonAbort) in.feedback.push_back({FeedbackLevel::SHF, "", std::string("other")});
  }
  in.transcript.feedback = in.feedback;
  in.transcript.source = "log:" + conversation.id;
  return in;
}

// ---------------------------------------------------------------------------

namespace {

class Driver {
 public:
  Driver(const BenchmarkSpec& spec, Session& session, ToolBridge& bridge, FeedbackProvider& feedback,
         const RunOptions& options)
      : spec_(spec), session_(session), bridge_(bridge), feedback_(feedback), opt_(options) {}

  ConversationResult run() {
    opt_.limits.validate();
    int tools_before = bridge_.invocations();
    session_.add_metadata({{"benchmark_id", spec_.id},
                           {"backend", session_.backend().describe()},
                           {"limits",
                            {{"max_regenerations", opt_.limits.max_regenerations},
                             {"max_user_messages", opt_.limits.max_user_messages},
                             {"identical_error_threshold", opt_.limits.identical_error_threshold},
                             {"per_human_level_attempts", opt_.limits.per_human_level_attempts},
                             {"count_continuations", opt_.limits.count_continuations},
                             {"feedback_line_limit", opt_.limits.feedback_line_limit}}}});
    emit("state", state_json());

    send_prompt(MessagePhase::Design, render_design_prompt(spec_), std::nullopt);
    chain_ = {last_reply_};
    LoopEvent pending = reply_event();

    while (!state_.terminal()) {
      state_ = step(state_, pending, opt_.limits);
      emit("state", state_json());
      switch (state_.next) {
        case LoopAction::None:
          break;
        case LoopAction::SendContinuation:
          send_prompt(MessagePhase::Continuation, render_fixed_prompt(PromptKind::Continue), std::nullopt);
          chain_.push_back(last_reply_);
          pending = reply_event();
          break;
        case LoopAction::CheckSpec:
          pending = spec_check();
          break;
        case LoopAction::Regenerate:
          if (!feedback_.approve_regeneration(last_spec_summary_)) {
            pending = OperatorAbortEvent{AbortReason::Other};
            break;
          }
          last_reply_ = session_.regenerate().content;
          emit_message(session_.conversation().messages.size() - 1);
          chain_.back() = last_reply_;
          pending = reply_event();
          break;
        case LoopAction::SendTestbenchPrompt:
          send_prompt(MessagePhase::Testbench, render_fixed_prompt(PromptKind::Testbench), std::nullopt);
          chain_ = {last_reply_};
          pending = reply_event();
          break;
        case LoopAction::Build:
          pending = build();
          break;
        case LoopAction::SendFix: {
          std::string body = render_fixed_prompt(PromptKind::Fix) + "\n\n" + last_verdict_.feedback_text;
          if (!last_verdict_.note.empty())
            body += (last_verdict_.feedback_text.empty() ? "" : "\n") + last_verdict_.note;
          send_prompt(MessagePhase::ToolFeedback, body, FeedbackLevel::TF);
          chain_ = {last_reply_};
          pending = reply_event();
          break;
        }
        case LoopAction::RequestHuman: {
          EscalationRequest req{spec_.id, state_.feedback_level, state_.fingerprint_history, last_verdict_};
          json hist = json::array();
          for (const auto& f : req.history) hist.push_back(f.str());
          emit("escalation", {{"level", to_string(req.level)},
                              {"fingerprints", hist},
                              {"feedback_text", last_verdict_.feedback_text},
                              {"raw_output", last_verdict_.raw_output},
                              {"note", last_verdict_.note}});
          OperatorAction a = feedback_.on_escalation(req);
          if (a.kind == OperatorAction::Kind::Abort) pending = OperatorAbortEvent{a.abort_reason};
          else pending = HumanFeedbackEvent{a.text, state_.feedback_level};
          break;
        }
        case LoopAction::SendHumanFeedback:
          send_prompt(MessagePhase::HumanFeedback, std::get<HumanFeedbackEvent>(pending).text, state_.feedback_level);
          chain_ = {last_reply_};
          pending = reply_event();
          break;
      }
    }

    ConversationResult r;
    r.final_state = state_;
    r.design = state_.working_design;
    r.testbench = state_.working_testbench;
    r.outcome.benchmark_id = spec_.id;
    r.outcome.trial_label = session_.conversation().trial_label;
    r.outcome.terminal = *state_.result;
    r.outcome.user_messages = state_.user_message_count;
    r.outcome.reason = state_.reason;
    if (r.outcome.terminal != TerminalClass::FAIL && opt_.compliance) {
      ComplianceVerdict c = opt_.compliance(state_.working_design);
      r.outcome.compliant = c.compliant;
      r.outcome.compliance_evidence = c.evidence;
    }
    session_.record_outcome(r.outcome.to_json());
    emit("terminal", r.outcome.to_json());
    r.conversation = session_.conversation();
    r.tool_invocations = bridge_.invocations() - tools_before;
    return r;
  }

 private:
  void emit(const std::string& type, json data) {
    if (!opt_.events) return;
    opt_.events({{"v", kEventSchemaVersion}, {"seq", seq_++}, {"type", type}, {"data", std::move(data)}});
  }

  json state_json() const {
    return {{"phase", to_string(state_.phase)},
            {"feedback_level", to_string(state_.feedback_level)},
            {"user_messages", state_.user_message_count},
            {"regenerations", state_.regen_count},
            {"awaiting_human", state_.awaiting_human},
            {"next", to_string(state_.next)},
            {"result", state_.result ? json(to_string(*state_.result)) : json(nullptr)},
            {"reason", state_.reason}};
  }

  void emit_message(std::size_t index) {
    const ChatMessage& m = session_.conversation().messages[index];
    emit("message", {{"index", index},
                     {"role", to_string(m.role)},
                     {"phase", to_string(m.phase)},
                     {"feedback_level", m.feedback_level ? json(to_string(*m.feedback_level)) : json(nullptr)},
                     {"attempt", m.attempt},
                     {"content", m.content}});
  }

  void send_prompt(MessagePhase phase, std::string content, std::optional<FeedbackLevel> level) {
    ChatMessage m;
    m.phase = phase;
    m.content = std::move(content);
    m.feedback_level = level;
    last_reply_ = session_.send(std::move(m)).content;
    std::size_t n = session_.conversation().messages.size();
    emit_message(n - 2);
    emit_message(n - 1);
  }

  LoopEvent reply_event() {
    AssistantReplyEvent e;
    e.text = last_reply_;
    e.truncated = session_.last_reply_length_limited() || detect_truncation(last_reply_);
    if (e.truncated || state_.phase == LoopPhase::AwaitDesign) return e;
    std::string code;
    try {
      code = reply_code(chain_);
    } catch (const AssemblyError&) {
      return e;
    }
    SplitSource update = split_source(code);
    SplitSource design = split_source(state_.working_design);
    SplitSource tb = split_source(state_.working_testbench);
    bool design_changed = false, tb_changed = false;
    for (const auto& m : update.modules) {
      if (has_module(design, m.name)) {
        replace_or_append(design, m);
        design_changed = true;
      } else if (has_module(tb, m.name)) {
        replace_or_append(tb, m);
        tb_changed = true;
      } else if (!m.has_ports) {
        // A new top-level testbench replaces the previous one.
        tb.modules.erase(std::remove_if(tb.modules.begin(), tb.modules.end(),
                                        [](const ModuleText& t) { return !t.has_ports; }),
                         tb.modules.end());
        tb.modules.push_back(m);
        tb_changed = true;
      } else {
        design.modules.push_back(m);
        design_changed = true;
      }
    }
    if (tb_changed && text::trim(tb.preamble).empty()) tb.preamble = update.preamble;
    if (design_changed) e.design_update = join_source(design);
    if (tb_changed) e.testbench_update = join_source(tb);
    return e;
  }

  SpecCheckEvent spec_check() {
    SpecCheckEvent e;
    std::string code;
    try {
      code = reply_code(chain_);
    } catch (const AssemblyError& ex) {
      e.summary = std::string("design could not be assembled: ") + ex.what();
      return finish_spec(e);
    }
    if (text::trim(code).empty()) {
      e.summary = "reply contained no Verilog module";
      return finish_spec(e);
    }
    auto lint = lint_verilog2001(code);
    if (!lint.empty()) {
      json w = json::array();
      for (const auto& l : lint) w.push_back({{"line", l.line}, {"token", l.token}, {"message", l.message}});
      emit("lint", {{"warnings", w}});
    }
    std::vector<InterfaceDesc> mods;
    try {
      mods = parse_module_interface(code);
    } catch (const Error& ex) {
      e.summary = std::string("module header could not be parsed: ") + ex.what();
      return finish_spec(e);
    }
    const InterfaceDesc* m = select_module(mods, spec_.id, spec_.interface);
    ConformanceReport rep = check_interface(*m, spec_.interface);
    e.conforms = rep.conforms;
    e.summary = rep.summary();
    // Port-less modules are testbenches the model volunteered; they are not
    // part of the design.
    SplitSource s = split_source(code);
    SplitSource kept{s.preamble, {}};
    for (const auto& mt : s.modules)
      if (mt.has_ports || mt.name == m->module_name) kept.modules.push_back(mt);
    e.design_source = join_source(kept);
    return finish_spec(e);
  }

  SpecCheckEvent finish_spec(SpecCheckEvent e) {
    last_spec_summary_ = e.summary;
    emit("spec_check", {{"conforms", e.conforms}, {"summary", e.summary}});
    return e;
  }

  ToolVerdictEvent build() {
    ToolVerdict v;
    if (text::trim(state_.working_testbench).empty()) {
      v.phase = ToolPhase::Compile;
      v.passed = false;
      v.note = "No testbench module was found in the reply.";
      v.fingerprint = {ToolPhase::Compile, {"no-testbench"}};
    } else {
      Workdir wd(opt_.work_base, opt_.keep_workdirs);
      std::vector<SourceText> sources = {{"design.v", state_.working_design}, {"testbench.v", state_.working_testbench}};
      try {
        v = bridge_.build_and_run(sources, wd.path());
      } catch (const TimeoutError& ex) {
        v = ToolVerdict{};
        v.phase = ToolPhase::Compile;
        v.note = ex.what();
        v.fingerprint = {ToolPhase::Compile, {"compile-timeout"}};
      }
      session_.add_metadata({{"toolchain", bridge_.toolchain().origin}});
    }
    last_verdict_ = v;
    int idx = session_.last_assistant_index();
    session_.attach(idx, v);
    emit("verdict", {{"message_index", idx},
                     {"phase", to_string(v.phase)},
                     {"passed", v.passed},
                     {"fingerprint", v.fingerprint.str()},
                     {"feedback_text", v.feedback_text},
                     {"raw_output", v.raw_output},
                     {"note", v.note},
                     {"command_lines", v.command_lines}});
    return ToolVerdictEvent{v.passed, v.fingerprint};
  }

  const BenchmarkSpec& spec_;
  Session& session_;
  ToolBridge& bridge_;
  FeedbackProvider& feedback_;
  const RunOptions& opt_;
  LoopState state_;
  std::string last_reply_;
  std::vector<std::string> chain_;
  ToolVerdict last_verdict_;
  std::string last_spec_summary_;
  long seq_ = 0;
};

}  // namespace

ConversationResult run_conversation(const BenchmarkSpec& spec, Session& session, ToolBridge& bridge,
                                    FeedbackProvider& feedback, const RunOptions& options) {
  if (!session.conversation().messages.empty()) throw PreconditionError("run_conversation needs a fresh session");
  return Driver(spec, session, bridge, feedback, options).run();
}

}  // namespace hwloop
