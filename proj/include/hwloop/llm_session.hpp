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
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hwloop/tool_bridge.hpp"
#include "json.hpp"

namespace hwloop {

using json = nlohmann::json;

enum class Role { User, Assistant };
enum class MessagePhase { Design, Testbench, ToolFeedback, HumanFeedback, Continuation };
enum class FeedbackLevel { None, TF, SHF, MHF, AHF };

std::string to_string(Role r);
std::string to_string(MessagePhase p);
std::string to_string(FeedbackLevel l);
Role role_from_string(const std::string& s);
MessagePhase phase_from_string(const std::string& s);
FeedbackLevel level_from_string(const std::string& s);

struct ChatMessage {
  Role role = Role::User;
  std::string content;
  MessagePhase phase = MessagePhase::Design;
  std::string timestamp;
  std::optional<FeedbackLevel> feedback_level;
  bool superseded = false;  // replaced by a regeneration; kept, never sent again
  int attempt = 1;          // assistant take number for this prompt
  json meta = json::object();

  bool operator==(const ChatMessage&) const = default;
};

json verdict_to_json(const ToolVerdict& v);
ToolVerdict verdict_from_json(const json& j);

struct Conversation {
  std::string id;
  std::string benchmark_id;
  std::string trial_label;
  std::vector<ChatMessage> messages;
  std::map<int, ToolVerdict> attachments;  // message index -> verdict
  json metadata = json::object();

  /// Messages that are still part of the context sent to the model.
  std::vector<ChatMessage> context() const;
  int count_user_messages() const;
};

bool operator==(const Conversation& a, const Conversation& b);

/// Append-only newline-delimited record file. Each call writes and flushes
/// one record.
class ConversationLog {
 public:
  explicit ConversationLog(const std::filesystem::path& path);
  const std::filesystem::path& path() const { return path_; }

  void header(const Conversation& c);
  void message(int index, const ChatMessage& m);
  void supersede(int index);
  void verdict(int index, const ToolVerdict& v);
  void metadata(const json& patch);
  void outcome(const json& o);

 private:
  void write(const json& record);
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

struct LoadedLog {
  Conversation conversation;
  std::optional<json> outcome;
};

/// Throws RecordError naming the offending record.
LoadedLog load_conversation_log(const std::filesystem::path& path);
LoadedLog parse_conversation_log(const std::string& text);

// ---------------------------------------------------------------------------
// Backends

struct CompletionRequest {
  std::vector<ChatMessage> context;  // ends with the user message being answered
  int prompt_position = 0;           // 0-based index of that user message
  bool regenerate = false;
};

struct Completion {
  std::string content;
  bool length_limited = false;  // backend reported it stopped at its output limit
  json meta = json::object();
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Completion complete(const CompletionRequest& request) = 0;
  virtual json describe() const = 0;
  virtual bool deterministic() const { return false; }
};

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Throws TransportError on connection failure.
using HttpTransport = std::function<HttpResponse(const HttpRequest&)>;
HttpTransport default_http_transport(std::chrono::milliseconds timeout);

struct RemoteConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4";
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<std::string> api_key;  // overrides the environment
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 4096;
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::milliseconds timeout{120000};
};

class RemoteBackend : public ChatBackend {
 public:
  // Throws AuthError when no credential is available.
  RemoteBackend(RemoteConfig config, HttpTransport transport = {},
                std::function<void(std::chrono::milliseconds)> sleeper = {});
  Completion complete(const CompletionRequest& request) override;
  json describe() const override;

 private:
  RemoteConfig config_;
  std::string key_;
  HttpTransport transport_;
  std::function<void(std::chrono::milliseconds)> sleep_;
};

struct ScriptedFeedback {
  FeedbackLevel level = FeedbackLevel::SHF;
  std::string text;
  std::optional<std::string> abort_reason;  // wrote_hdl or other
};

struct Transcript {
  std::vector<std::vector<std::string>> replies;  // per user-prompt position, takes in order
  std::vector<ScriptedFeedback> feedback;
  std::string source;
};

/// YAML transcript: `replies: [{takes: [...]}, ...]`, optional `feedback`.
Transcript load_transcript(const std::filesystem::path& path);
Transcript parse_transcript(const std::string& document, const std::string& source = "<string>");

class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(Transcript transcript);
  Completion complete(const CompletionRequest& request) override;
  json describe() const override;
  bool deterministic() const override { return true; }

 private:
  Transcript transcript_;
  std::map<int, std::size_t> next_take_;
};

/// Operator pastes each reply; a line holding only "." ends it.
class InteractiveBackend : public ChatBackend {
 public:
  InteractiveBackend(std::istream& in, std::ostream& out);
  Completion complete(const CompletionRequest& request) override;
  json describe() const override;

 private:
  std::istream& in_;
  std::ostream& out_;
  std::mutex mutex_;
};

struct BackendConfig {
  enum class Kind { Remote, Scripted, Interactive } kind = Kind::Scripted;
  RemoteConfig remote;
  std::filesystem::path transcript;
};

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config);

// ---------------------------------------------------------------------------

class Session {
 public:
  using Clock = std::function<std::string(std::size_t message_index)>;

  Session(std::unique_ptr<ChatBackend> backend, Conversation conversation,
          std::shared_ptr<ConversationLog> log = nullptr, Clock clock = {});

  /// Appends `prompt` and the reply, persisting both before returning.
  ChatMessage send(ChatMessage prompt);
  /// Re-asks the last user message; the previous reply is marked superseded.
  ChatMessage regenerate();

  void attach(int message_index, const ToolVerdict& verdict);
  void add_metadata(const json& patch);
  void record_outcome(const json& outcome);

  const Conversation& conversation() const { return conversation_; }
  ChatBackend& backend() { return *backend_; }
  int last_assistant_index() const;
  bool last_reply_length_limited() const { return last_length_limited_; }

 private:
  void append(const ChatMessage& m);

  std::unique_ptr<ChatBackend> backend_;
  Conversation conversation_;
  std::shared_ptr<ConversationLog> log_;
  Clock clock_;
  bool last_length_limited_ = false;
};

/// Wall-clock ISO-8601 timestamps, or epoch-plus-index for scripted runs.
Session::Clock system_clock();
Session::Clock deterministic_clock();

std::unique_ptr<Session> open_session(const BackendConfig& config, Conversation conversation,
                                      std::shared_ptr<ConversationLog> log = nullptr);

}  // namespace hwloop
