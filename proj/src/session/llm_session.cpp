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

#include "hwloop/llm_session.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <ctime>
#include <iostream>
#include <sstream>
#include <thread>

#include "hwloop/errors.hpp"
#include "text.hpp"

namespace hwloop {

namespace {

template <typename E, std::size_t N>
E lookup(const std::array<std::pair<E, const char*>, N>& table, const std::string& s, const char* what) {
  for (const auto& [e, name] : table)
    if (s == name) return e;
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

template <typename E, std::size_t N>
std::string name_of(const std::array<std::pair<E, const char*>, N>& table, E e) {
  for (const auto& [v, name] : table)
    if (v == e) return name;
  return "?";
}

constexpr std::array<std::pair<Role, const char*>, 2> kRoles{{{Role::User, "user"}, {Role::Assistant, "assistant"}}};
constexpr std::array<std::pair<MessagePhase, const char*>, 5> kPhases{{{MessagePhase::Design, "design"},
                                                                       {MessagePhase::Testbench, "testbench"},
                                                                       {MessagePhase::ToolFeedback, "tool_feedback"},
                                                                       {MessagePhase::HumanFeedback, "human_feedback"},
                                                                       {MessagePhase::Continuation, "continuation"}}};
constexpr std::array<std::pair<FeedbackLevel, const char*>, 5> kLevels{{{FeedbackLevel::None, "none"},
                                                                        {FeedbackLevel::TF, "TF"},
                                                                        {FeedbackLevel::SHF, "SHF"},
                                                                        {FeedbackLevel::MHF, "MHF"},
                                                                        {FeedbackLevel::AHF, "AHF"}}};

std::string iso_time(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json message_to_json(int index, const ChatMessage& m) {
  json j = {{"type", "message"},
            {"index", index},
            {"role", to_string(m.role)},
            {"phase", to_string(m.phase)},
            {"timestamp", m.timestamp},
            {"attempt", m.attempt},
            {"content", m.content}};
  j["feedback_level"] = m.feedback_level ? json(to_string(*m.feedback_level)) : json(nullptr);
  if (!m.meta.empty()) j["meta"] = m.meta;
  return j;
}

}  // namespace

std::string to_string(Role r) { return name_of(kRoles, r); }
std::string to_string(MessagePhase p) { return name_of(kPhases, p); }
std::string to_string(FeedbackLevel l) { return name_of(kLevels, l); }
Role role_from_string(const std::string& s) { return lookup(kRoles, s, "role"); }
MessagePhase phase_from_string(const std::string& s) { return lookup(kPhases, s, "phase"); }
FeedbackLevel level_from_string(const std::string& s) { return lookup(kLevels, s, "feedback level"); }

json verdict_to_json(const ToolVerdict& v) {
  return {{"phase", to_string(v.phase)},
          {"passed", v.passed},
          {"feedback_text", v.feedback_text},
          {"note", v.note},
          {"fingerprint", {{"phase", to_string(v.fingerprint.phase)}, {"keys", v.fingerprint.keys}}},
          {"raw_output", v.raw_output},
          {"command_lines", v.command_lines},
          {"truncated", v.truncated}};
}

ToolVerdict verdict_from_json(const json& j) {
  auto phase = [](const std::string& s) {
    if (s == "compile") return ToolPhase::Compile;
    if (s == "simulate") return ToolPhase::Simulate;
    throw ConfigError("unknown tool phase '" + s + "'");
  };
  ToolVerdict v;
  v.phase = phase(j.at("phase").get<std::string>());
  v.passed = j.at("passed").get<bool>();
  v.feedback_text = j.value("feedback_text", "");
  v.note = j.value("note", "");
  v.fingerprint.phase = phase(j.at("fingerprint").at("phase").get<std::string>());
  v.fingerprint.keys = j.at("fingerprint").at("keys").get<std::vector<std::string>>();
  v.raw_output = j.value("raw_output", "");
  v.command_lines = j.value("command_lines", std::vector<std::string>{});
  v.truncated = j.value("truncated", false);
  return v;
}

std::vector<ChatMessage> Conversation::context() const {
  std::vector<ChatMessage> out;
  for (const auto& m : messages)
    if (!m.superseded) out.push_back(m);
  return out;
}

int Conversation::count_user_messages() const {
  int n = 0;
  for (const auto& m : messages)
    if (m.role == Role::User) ++n;
  return n;
}

bool operator==(const Conversation& a, const Conversation& b) {
  if (a.id != b.id || a.benchmark_id != b.benchmark_id || a.trial_label != b.trial_label ||
      a.messages != b.messages || a.metadata != b.metadata || a.attachments.size() != b.attachments.size())
    return false;
  for (const auto& [k, v] : a.attachments) {
    auto it = b.attachments.find(k);
    if (it == b.attachments.end() || verdict_to_json(v) != verdict_to_json(it->second)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

ConversationLog::ConversationLog(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw EnvironmentError("cannot open conversation log " + path.string());
}

void ConversationLog::write(const json& record) {
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << record.dump() << '\n';
  out_.flush();
}

void ConversationLog::header(const Conversation& c) {
  write({{"type", "conversation"},
         {"version", 1},
         {"id", c.id},
         {"benchmark_id", c.benchmark_id},
         {"trial_label", c.trial_label},
         {"metadata", c.metadata}});
}

void ConversationLog::message(int index, const ChatMessage& m) { write(message_to_json(index, m)); }
void ConversationLog::supersede(int index) { write({{"type", "supersede"}, {"index", index}}); }
void ConversationLog::verdict(int index, const ToolVerdict& v) {
  write({{"type", "verdict"}, {"index", index}, {"verdict", verdict_to_json(v)}});
}
void ConversationLog::metadata(const json& patch) { write({{"type", "metadata"}, {"patch", patch}}); }
void ConversationLog::outcome(const json& o) { write({{"type", "outcome"}, {"outcome", o}}); }

LoadedLog parse_conversation_log(const std::string& text) {
  LoadedLog out;
  std::size_t record = 0;
  bool have_header = false;
  for (const auto& line : text::split_lines(text)) {
    if (text::trim(line).empty()) continue;
    ++record;
    try {
      json j = json::parse(line);
      std::string type = j.at("type").get<std::string>();
      Conversation& c = out.conversation;
      if (type == "conversation") {
        if (have_header) throw RecordError("second conversation header", record);
        if (j.at("version").get<int>() != 1) throw RecordError("unsupported log version", record);
        c.id = j.at("id").get<std::string>();
        c.benchmark_id = j.at("benchmark_id").get<std::string>();
        c.trial_label = j.at("trial_label").get<std::string>();
        c.metadata = j.value("metadata", json::object());
        have_header = true;
        continue;
      }
      if (!have_header) throw RecordError("log does not start with a conversation header", record);
      if (type == "message") {
        int index = j.at("index").get<int>();
        if (index != static_cast<int>(c.messages.size()))
          throw RecordError("message index " + std::to_string(index) + " out of sequence", record);
        ChatMessage m;
        m.role = role_from_string(j.at("role").get<std::string>());
        m.phase = phase_from_string(j.at("phase").get<std::string>());
        m.content = j.at("content").get<std::string>();
        m.timestamp = j.value("timestamp", "");
        m.attempt = j.value("attempt", 1);
        if (j.contains("feedback_level") && !j["feedback_level"].is_null())
          m.feedback_level = level_from_string(j["feedback_level"].get<std::string>());
        m.meta = j.value("meta", json::object());
        c.messages.push_back(std::move(m));
      } else if (type == "supersede") {
        int index = j.at("index").get<int>();
        if (index < 0 || index >= static_cast<int>(c.messages.size()) ||
            c.messages[static_cast<std::size_t>(index)].role != Role::Assistant)
          throw RecordError("supersede names no assistant message", record);
        c.messages[static_cast<std::size_t>(index)].superseded = true;
      } else if (type == "verdict") {
        int index = j.at("index").get<int>();
        if (index < 0 || index >= static_cast<int>(c.messages.size()))
          throw RecordError("verdict attached to unknown message", record);
        c.attachments[index] = verdict_from_json(j.at("verdict"));
      } else if (type == "metadata") {
        c.metadata.merge_patch(j.at("patch"));
      } else if (type == "outcome") {
        out.outcome = j.at("outcome");
      } else {
        throw RecordError("unknown record type '" + type + "'", record);
      }
    } catch (const RecordError&) {
      throw;
    } catch (const std::exception& e) {
      throw RecordError(std::string("malformed record: ") + e.what(), record);
    }
  }
  if (!have_header) throw RecordError("empty log", record + 1);
  return out;
}

LoadedLog load_conversation_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_conversation_log(ss.str());
}

// ---------------------------------------------------------------------------

Transcript parse_transcript(const std::string& document, const std::string& source) {
  Transcript t;
  t.source = source;
  YAML::Node root;
  try {
    root = YAML::Load(document);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg, e.mark.line + 1);
  }
  auto fail = [&](const YAML::Node& n, const std::string& field, const std::string& msg) {
    int line = n.IsDefined() ? n.Mark().line + 1 : 0;
    throw ConfigError(source + ": line " + std::to_string(line) + ": field '" + field + "': " + msg, line, field);
  };
  if (!root || root.IsNull()) return t;
  if (!root.IsMap()) fail(root, "replies", "transcript must be a mapping");
  YAML::Node replies = root["replies"];
  if (replies) {
    if (!replies.IsSequence()) fail(replies, "replies", "expected a list");
    for (const auto& r : replies) {
      std::vector<std::string> takes;
      if (r.IsScalar()) {
        takes.push_back(r.as<std::string>());
      } else if (r.IsMap() && r["takes"]) {
        if (!r["takes"].IsSequence()) fail(r, "takes", "expected a list");
        for (const auto& tk : r["takes"]) takes.push_back(tk.as<std::string>());
      } else if (r.IsMap() && r["reply"]) {
        takes.push_back(r["reply"].as<std::string>());
      } else {
        fail(r, "takes", "each reply needs 'takes' or 'reply'");
      }
      if (takes.empty()) fail(r, "takes", "at least one take required");
      t.replies.push_back(std::move(takes));
    }
  }
  YAML::Node feedback = root["feedback"];
  if (feedback) {
    if (!feedback.IsSequence()) fail(feedback, "feedback", "expected a list");
    for (const auto& f : feedback) {
      ScriptedFeedback sf;
      if (f["abort"]) {
        sf.abort_reason = f["abort"].as<std::string>();
        if (*sf.abort_reason != "wrote_hdl" && *sf.abort_reason != "other")
          fail(f, "abort", "expected wrote_hdl or other");
      } else {
        if (!f["text"]) fail(f, "text", "feedback entry needs 'text' or 'abort'");
        sf.text = f["text"].as<std::string>();
      }
      if (f["level"]) {
        try {
          sf.level = level_from_string(f["level"].as<std::string>());
        } catch (const ConfigError&) {
          fail(f["level"], "level", "expected SHF, MHF or AHF");
        }
      }
      t.feedback.push_back(std::move(sf));
    }
  }
  return t;
}

Transcript load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read transcript " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_transcript(ss.str(), path.string());
}

ScriptedBackend::ScriptedBackend(Transcript transcript) : transcript_(std::move(transcript)) {}

Completion ScriptedBackend::complete(const CompletionRequest& request) {
  int pos = request.prompt_position;
  if (pos < 0 || pos >= static_cast<int>(transcript_.replies.size()))
    throw ReplayUnderrun("transcript " + transcript_.source + " has no reply for prompt " + std::to_string(pos + 1));
  std::size_t& take = next_take_[pos];
  const auto& takes = transcript_.replies[static_cast<std::size_t>(pos)];
  if (take >= takes.size())
    throw ReplayUnderrun("transcript " + transcript_.source + " has no take " + std::to_string(take + 1) +
                         " for prompt " + std::to_string(pos + 1));
  Completion c;
  c.content = takes[take++];
  return c;
}

json ScriptedBackend::describe() const { return {{"kind", "scripted"}, {"transcript", transcript_.source}}; }

InteractiveBackend::InteractiveBackend(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

Completion InteractiveBackend::complete(const CompletionRequest& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << "==== prompt " << request.prompt_position + 1 << (request.regenerate ? " (regenerate)" : "") << " ====\n"
       << request.context.back().content << "\n==== paste the reply; end with a line containing only '.' ====\n";
  out_.flush();
  Completion c;
  std::string line;
  bool got_any = false;
  while (std::getline(in_, line)) {
    got_any = true;
    if (line == ".") return c;
    c.content += line + "\n";
  }
  if (!got_any) throw TransportError("operator input closed", false);
  return c;
}

json InteractiveBackend::describe() const { return {{"kind", "interactive"}}; }

// ---------------------------------------------------------------------------

RemoteBackend::RemoteBackend(RemoteConfig config, HttpTransport transport,
                             std::function<void(std::chrono::milliseconds)> sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleeper)) {
  if (config_.api_key) {
    key_ = *config_.api_key;
  } else if (const char* k = std::getenv(config_.api_key_env.c_str())) {
    key_ = k;
  }
  if (key_.empty()) throw AuthError("no API credential: set " + config_.api_key_env);
  if (!transport_) transport_ = default_http_transport(config_.timeout);
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Completion RemoteBackend::complete(const CompletionRequest& request) {
  json messages = json::array();
  for (const auto& m : request.context) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  json body = {{"model", config_.model},
               {"messages", messages},
               {"temperature", config_.temperature},
               {"top_p", config_.top_p},
               {"max_tokens", config_.max_tokens}};
  HttpRequest req{config_.endpoint,
                  {{"Authorization", "Bearer " + key_}, {"Content-Type", "application/json"}},
                  body.dump()};
  auto backoff = config_.initial_backoff;
  std::string last_error;
  json attempts = json::array();
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    bool retriable = true;
    try {
      HttpResponse res = transport_(req);
      if (res.status == 200) {
        json j = json::parse(res.body);
        const json& choice = j.at("choices").at(0);
        Completion c;
        c.content = choice.at("message").at("content").get<std::string>();
        std::string finish = choice.value("finish_reason", "");
        c.length_limited = finish == "length";
        attempts.push_back({{"attempt", attempt}, {"status", 200}});
        c.meta = {{"attempts", attempt},
                  {"attempt_log", attempts},
                  {"finish_reason", finish},
                  {"model", j.value("model", config_.model)},
                  {"temperature", config_.temperature},
                  {"top_p", config_.top_p}};
        return c;
      }
      attempts.push_back({{"attempt", attempt}, {"status", res.status}});
      if (res.status == 401 || res.status == 403) throw AuthError("endpoint rejected credential (HTTP " + std::to_string(res.status) + ")");
      last_error = "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200);
      retriable = res.status == 429 || res.status >= 500;
    } catch (const AuthError&) {
      throw;
    } catch (const TransportError& e) {
      attempts.push_back({{"attempt", attempt}, {"error", e.what()}});
      last_error = e.what();
      retriable = e.retriable;
    } catch (const json::exception& e) {
      throw TransportError(std::string("malformed completion response: ") + e.what(), false);
    }
    if (!retriable) throw TransportError(last_error, false);
    if (attempt < config_.max_attempts) {
      sleep_(backoff);
      backoff = std::min(backoff * 2, config_.max_backoff);
    }
  }
  throw TransportError("giving up after " + std::to_string(config_.max_attempts) + " attempts: " + last_error, true);
}

json RemoteBackend::describe() const {
  return {{"kind", "remote"},
          {"endpoint", config_.endpoint},
          {"model", config_.model},
          {"temperature", config_.temperature},
          {"top_p", config_.top_p},
          {"max_tokens", config_.max_tokens}};
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendConfig::Kind::Remote:
      return std::make_unique<RemoteBackend>(config.remote);
    case BackendConfig::Kind::Scripted:
      return std::make_unique<ScriptedBackend>(load_transcript(config.transcript));
    case BackendConfig::Kind::Interactive:
      return std::make_unique<InteractiveBackend>(std::cin, std::cerr);
  }
  throw ConfigError("unknown backend kind");
}

// ---------------------------------------------------------------------------

Session::Clock system_clock() {
  return [](std::size_t) { return iso_time(std::time(nullptr)); };
}

Session::Clock deterministic_clock() {
  return [](std::size_t index) { return iso_time(static_cast<std::time_t>(index)); };
}

Session::Session(std::unique_ptr<ChatBackend> backend, Conversation conversation,
                 std::shared_ptr<ConversationLog> log, Clock clock)
    : backend_(std::move(backend)), conversation_(std::move(conversation)), log_(std::move(log)),
      clock_(std::move(clock)) {
  if (!clock_) clock_ = backend_->deterministic() ? deterministic_clock() : system_clock();
  if (log_) {
    log_->header(conversation_);
    for (std::size_t i = 0; i < conversation_.messages.size(); ++i) {
      log_->message(static_cast<int>(i), conversation_.messages[i]);
      if (conversation_.messages[i].superseded) log_->supersede(static_cast<int>(i));
    }
    for (const auto& [i, v] : conversation_.attachments) log_->verdict(i, v);
  }
}

void Session::append(const ChatMessage& m) {
  conversation_.messages.push_back(m);
  if (log_) log_->message(static_cast<int>(conversation_.messages.size() - 1), m);
}

int Session::last_assistant_index() const {
  for (int i = static_cast<int>(conversation_.messages.size()) - 1; i >= 0; --i) {
    const auto& m = conversation_.messages[static_cast<std::size_t>(i)];
    if (m.role == Role::Assistant && !m.superseded) return i;
  }
  return -1;
}

ChatMessage Session::send(ChatMessage prompt) {
  auto ctx = conversation_.context();
  if (!ctx.empty() && ctx.back().role != Role::Assistant)
    throw PreconditionError("send: the last message is not an assistant reply");
  prompt.role = Role::User;
  prompt.timestamp = clock_(conversation_.messages.size());
  ctx.push_back(prompt);
  CompletionRequest req{ctx, conversation_.count_user_messages(), false};
  Completion c = backend_->complete(req);
  ChatMessage reply;
  reply.role = Role::Assistant;
  reply.content = std::move(c.content);
  reply.phase = prompt.phase;
  reply.feedback_level = prompt.feedback_level;
  reply.timestamp = clock_(conversation_.messages.size() + 1);
  reply.meta = std::move(c.meta);
  last_length_limited_ = c.length_limited;
  append(prompt);
  append(reply);
  return reply;
}

ChatMessage Session::regenerate() {
  int last = last_assistant_index();
  auto ctx = conversation_.context();
  if (last < 0 || ctx.size() < 2 || ctx.back().role != Role::Assistant)
    throw PreconditionError("regenerate: no exchange to regenerate");
  ctx.pop_back();
  CompletionRequest req{ctx, conversation_.count_user_messages() - 1, true};
  Completion c = backend_->complete(req);
  ChatMessage& old = conversation_.messages[static_cast<std::size_t>(last)];
  old.superseded = true;
  if (log_) log_->supersede(last);
  ChatMessage reply;
  reply.role = Role::Assistant;
  reply.content = std::move(c.content);
  reply.phase = old.phase;
  reply.feedback_level = old.feedback_level;
  reply.attempt = old.attempt + 1;
  reply.timestamp = clock_(conversation_.messages.size());
  reply.meta = std::move(c.meta);
  last_length_limited_ = c.length_limited;
  append(reply);
  return reply;
}

void Session::attach(int message_index, const ToolVerdict& verdict) {
  conversation_.attachments[message_index] = verdict;
  if (log_) log_->verdict(message_index, verdict);
}

void Session::add_metadata(const json& patch) {
  conversation_.metadata.merge_patch(patch);
  if (log_) log_->metadata(patch);
}

void Session::record_outcome(const json& outcome) {
  if (log_) log_->outcome(outcome);
}

std::unique_ptr<Session> open_session(const BackendConfig& config, Conversation conversation,
                                      std::shared_ptr<ConversationLog> log) {
  auto backend = make_backend(config);
  conversation.metadata["backend"] = backend->describe();
  return std::make_unique<Session>(std::move(backend), std::move(conversation), std::move(log));
}

}  // namespace hwloop
