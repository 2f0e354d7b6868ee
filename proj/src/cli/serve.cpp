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

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <condition_variable>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include "commands.hpp"
#include "hwloop/errors.hpp"
#include "text.hpp"

#ifndef HWLOOP_UI_DIR
#define HWLOOP_UI_DIR "assets/ui"
#endif

namespace hwloop::cli {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
namespace fs = std::filesystem;

fs::path default_ui_assets() { return HWLOOP_UI_DIR; }

namespace {

json channel_record(const std::string& type, json data) {
  return {{"v", kEventSchemaVersion}, {"seq", 0}, {"type", type}, {"data", std::move(data)}};
}

// Operator input handed from the socket side to the engine thread.
class OperatorChannel {
 public:
  void push(const json& m) {
    std::lock_guard<std::mutex> lock(mu_);
    if (m.at("type") == "regenerate_approval") approvals_.push_back(m);
    else actions_.push_back(m);
    cv_.notify_all();
  }
  void close() {
    std::lock_guard<std::mutex> lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }
  void reset() {
    std::lock_guard<std::mutex> lock(mu_);
    actions_.clear();
    approvals_.clear();
    closed_ = false;
  }
  json next_action() { return take(actions_); }
  json next_approval() { return take(approvals_); }

 private:
  json take(std::deque<json>& q) {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !q.empty(); });
    if (q.empty()) throw ProtocolError("operator channel closed");
    json m = q.front();
    q.pop_front();
    return m;
  }
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<json> actions_, approvals_;
  bool closed_ = false;
};

class ChannelFeedback : public FeedbackProvider {
 public:
  ChannelFeedback(OperatorChannel& ch, bool confirm) : ch_(ch), confirm_(confirm) {}
  OperatorAction on_escalation(const EscalationRequest&) override {
    json m = ch_.next_action();
    OperatorAction a;
    const json data = m.value("data", json::object());
    if (m.at("type") == "abort") {
      a.kind = OperatorAction::Kind::Abort;
      a.abort_reason = data.value("reason", "other") == "wrote_hdl" ? AbortReason::WroteHdl : AbortReason::Other;
    } else {
      a.text = data.value("text", "");
    }
    return a;
  }
  bool approve_regeneration(const std::string&) override {
    if (!confirm_) return true;
    return ch_.next_approval().value("data", json::object()).value("approve", false);
  }

 private:
  OperatorChannel& ch_;
  bool confirm_;
};

class Hub;

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}
  void start(http::request<http::string_body> req);
  void send(std::string message) {
    queue_.push_back(std::move(message));
    if (queue_.size() == 1) write();
  }

 private:
  void read();
  void write();

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  Hub& hub_;
};

// Lives on the io thread; the engine thread reaches it only through post().
class Hub {
 public:
  Hub(net::io_context& ioc, const ServeConfig& config) : ioc_(ioc), config_(config) {}
  ~Hub() { shutdown(); }

  void join(const std::shared_ptr<WsSession>& s) {
    clients_.insert(s);
    if (history_.empty() && !running_) {
      s->send(channel_record("idle", json::object()).dump());
      return;
    }
    for (const auto& e : history_) s->send(e);
  }
  void leave(const std::shared_ptr<WsSession>& s) { clients_.erase(s); }

  void on_message(const std::shared_ptr<WsSession>& from, const std::string& raw) {
    json m;
    try {
      m = json::parse(raw);
    } catch (const json::exception&) {
      return reject(from, "message is not JSON");
    }
    if (!m.is_object() || m.value("v", 0) != kEventSchemaVersion)
      return reject(from, "unsupported schema version");
    std::string type = m.value("type", "");
    if (type == "start") {
      if (running_) return reject(from, "a conversation is already running");
      try {
        start(m.value("data", json::object()));
      } catch (const std::exception& e) {
        reject(from, e.what());
      }
    } else if (type == "feedback" || type == "abort" || type == "regenerate_approval") {
      if (!running_) return reject(from, "no conversation is running");
      channel_.push(m);
    } else {
      reject(from, "unknown message type '" + type + "'");
    }
  }

  void shutdown() {
    channel_.close();
    if (engine_.joinable()) engine_.join();
  }

 private:
  void reject(const std::shared_ptr<WsSession>& to, const std::string& why) {
    to->send(channel_record("error", {{"message", why}}).dump());
  }

  void broadcast(const std::string& event) {
    history_.push_back(event);
    for (const auto& c : clients_) c->send(event);
  }

  void start(const json& data) {
    const BenchmarkSpec* spec = config_.suite.empty() ? nullptr : &config_.suite.front();
    if (data.contains("benchmark")) {
      spec = nullptr;
      for (const auto& b : config_.suite)
        if (b.id == data["benchmark"].get<std::string>()) spec = &b;
    }
    if (!spec) throw NotFoundError("unknown benchmark");
    std::unique_ptr<ChatBackend> backend;
    if (data.contains("transcript"))
      backend = std::make_unique<ScriptedBackend>(parse_transcript(data["transcript"].get<std::string>(), "channel"));
    else
      backend = make_backend(config_.backend);

    if (engine_.joinable()) engine_.join();
    history_.clear();
    channel_.reset();
    running_ = true;
    ++runs_;
    std::string trial = data.value("trial", "T1");
    engine_ = std::thread([this, spec, trial, backend = std::move(backend)]() mutable {
      Conversation conv;
      conv.id = spec->id + "-" + trial + "-" + std::to_string(runs_);
      conv.benchmark_id = spec->id;
      conv.trial_label = trial;
      std::shared_ptr<ConversationLog> log;
      if (!config_.run_dir.empty()) {
        fs::create_directories(config_.run_dir / conv.id);
        log = std::make_shared<ConversationLog>(config_.run_dir / conv.id / "conversation.ndjson");
      }
      auto post_event = [this, tag = conv.id](json e) {
        e["conversation"] = tag;
        net::post(ioc_, [this, s = e.dump()] { broadcast(s); });
      };
      try {
        Session session(std::move(backend), conv, log);
        ToolBridge bridge(config_.tools);
        ToolBridge compliance_bridge(config_.tools);
        ChannelFeedback feedback(channel_, config_.confirm_regenerations);
        RunOptions opt;
        opt.limits = config_.limits;
        opt.events = post_event;
        opt.compliance = [&](const std::string& design) {
          ComplianceResult c = check_compliance(design, *spec, compliance_bridge);
          return ComplianceVerdict{c.compliant, c.evidence};
        };
        ConversationResult r = run_conversation(*spec, session, bridge, feedback, opt);
        if (!config_.run_dir.empty()) write_artifacts(config_.run_dir / conv.id, r);
      } catch (const std::exception& e) {
        json err = channel_record("error", {{"message", e.what()}});
        post_event(err);
      }
      net::post(ioc_, [this] { running_ = false; });
    });
  }

  net::io_context& ioc_;
  const ServeConfig& config_;
  std::set<std::shared_ptr<WsSession>> clients_;
  std::vector<std::string> history_;
  OperatorChannel channel_;
  std::thread engine_;
  bool running_ = false;
  int runs_ = 0;
};

void WsSession::start(http::request<http::string_body> req) {
  ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->hub_.join(self);
    self->read();
  });
}

void WsSession::read() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) return self->hub_.leave(self);
    std::string msg = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    self->hub_.on_message(self, msg);
    self->read();
  });
}

void WsSession::write() {
  ws_.text(true);
  ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) return self->hub_.leave(self);
    self->queue_.pop_front();
    if (!self->queue_.empty()) self->write();
  });
}

std::string content_type(const fs::path& p) {
  std::string ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json") return "application/json";
  return "application/octet-stream";
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, Hub& hub, const fs::path& assets)
      : stream_(std::move(socket)), hub_(hub), assets_(assets) {}
  void start() { read(); }

 private:
  void read() {
    req_ = {};
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->handle();
    });
  }

  void handle() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() != "/events") return reply(http::status::not_found, "no such channel\n", "text/plain");
      std::make_shared<WsSession>(stream_.release_socket(), hub_)->start(std::move(req_));
      return;
    }
    if (req_.method() != http::verb::get) return reply(http::status::bad_request, "GET only\n", "text/plain");
    std::string target(req_.target());
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target == "/") target = "/index.html";
    std::string name = target.substr(1);
    if (name.empty() || name.find('/') != std::string::npos || name.find("..") != std::string::npos)
      return reply(http::status::not_found, "not found\n", "text/plain");
    fs::path file = assets_ / name;
    if (!fs::is_regular_file(file)) return reply(http::status::not_found, "not found\n", "text/plain");
    reply(http::status::ok, text::read_file(file), content_type(file));
  }

  void reply(http::status status, std::string body, const std::string& type) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, type);
    res->keep_alive(req_.keep_alive());
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->keep_alive()) self->read();
      else self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Hub& hub_;
  fs::path assets_;
};

void accept_loop(tcp::acceptor& acceptor, Hub& hub, const fs::path& assets) {
  acceptor.async_accept([&](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpSession>(std::move(socket), hub, assets)->start();
    accept_loop(acceptor, hub, assets);
  });
}

void poll_stop(net::steady_timer& timer, net::io_context& ioc, const std::function<bool()>& should_stop) {
  timer.expires_after(std::chrono::milliseconds(100));
  timer.async_wait([&](beast::error_code ec) {
    if (ec) return;
    if (should_stop()) return ioc.stop();
    poll_stop(timer, ioc, should_stop);
  });
}

}  // namespace

void serve(const ServeConfig& config, const std::function<void(unsigned short)>& on_listening,
           const std::function<bool()>& should_stop) {
  net::io_context ioc;
  tcp::acceptor acceptor(ioc);
  beast::error_code ec;
  tcp::endpoint ep(net::ip::make_address(config.host, ec), config.port);
  if (ec) throw ConfigError("bad host '" + config.host + "'");
  acceptor.open(ep.protocol(), ec);
  if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(ep, ec);
  if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw EnvironmentError("cannot listen on " + config.host + ":" + std::to_string(config.port) + ": " + ec.message());

  fs::path assets = config.assets.empty() ? default_ui_assets() : config.assets;
  Hub hub(ioc, config);
  accept_loop(acceptor, hub, assets);
  net::steady_timer timer(ioc);
  if (should_stop) poll_stop(timer, ioc, should_stop);
  if (on_listening) on_listening(acceptor.local_endpoint().port());
  ioc.run();
  hub.shutdown();
}

}  // namespace hwloop::cli
