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

#include <sys/wait.h>

#include <array>
#include <atomic>
#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <cstdio>
#include <thread>

#include "commands.hpp"
#include "hwloop/errors.hpp"
#include "support.hpp"

using namespace hwloop;
using hwloop::testing::build_dir;
using hwloop::testing::fixture;
using hwloop::testing::fixture_text;
using hwloop::testing::TempDir;

namespace {

struct Run {
  int status = -1;
  std::string output;
};

Run hwloop_cli(const std::string& args) {
  std::string cmd = (build_dir() / "hwloop").string() + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) r.output.append(buf.data(), n);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("exit codes") {
  TempDir out;
  std::string transcript = q(fixture("transcripts/sr_tool_feedback.yaml"));
  Run ok = hwloop_cli("run shift_register --transcript " + transcript + " --out " + q(out.path));
  CHECK(ok.status == 0);
  CHECK(ok.output.find("shift_register T1: TF compliant 3") != std::string::npos);
  CHECK(std::filesystem::exists(out.path / "shift_register" / "T1" / "conversation.ndjson"));

  Run no_tools = hwloop_cli("run shift_register --compiler /nonexistent/iverilog --runtime /nonexistent/vvp "
                            "--transcript " + transcript + " --out " + q(out.path / "x"));
  CHECK(no_tools.status == 2);
  CHECK(no_tools.output.find("hint:") != std::string::npos);

  CHECK(hwloop_cli("run").status == 1);
  CHECK(hwloop_cli("frobnicate").status == 1);
  CHECK(hwloop_cli("run no_such_benchmark --transcript " + transcript).status == 1);
  CHECK(hwloop_cli("run shift_register --max-messages 0 --transcript " + transcript).status == 1);
}

TEST_CASE("a failing benchmark is a result, not an error") {
  TempDir out;
  Run r = hwloop_cli("run shift_register --transcript " + q(fixture("transcripts/bard_six_takes.yaml")) + " --out " +
                     q(out.path));
  CHECK(r.status == 0);
  CHECK(r.output.find("FAIL") != std::string::npos);
}

TEST_CASE("suite run writes the requested report formats") {
  TempDir out;
  Run r = hwloop_cli("run suite --transcript-dir " + q(fixture("transcripts/golden")) + " --out " + q(out.path) +
                     " --format csv --format markdown");
  CHECK(r.status == 0);
  CHECK(std::filesystem::exists(out.path / "report.csv"));
  CHECK(std::filesystem::exists(out.path / "report.md"));
  CHECK(std::filesystem::exists(out.path / "report.json"));
  auto csv = text::split_lines(text::read_file(out.path / "report.csv"));
  CHECK(csv.size() >= 9);
  for (std::size_t i = 1; i < 9 && i < csv.size(); ++i) CHECK(csv[i].find(",NFN,yes,2,") != std::string::npos);
}

TEST_CASE("replay confirms fixture logs and spots tampering") {
  for (const char* log : {"sr_tool_feedback", "bard_six_takes", "abro_noncompliant", "dice_constant",
                          "shf_escalation", "golden_bin2bcd"}) {
    CAPTURE(log);
    cli::ReplayReport r = cli::replay_log(fixture(std::string("logs/") + log + ".ndjson"), builtin_suite(), {});
    CHECK(r.confirmed);
    CHECK(r.mismatches.empty());
  }
  cli::ReplayReport bard = cli::replay_log(fixture("logs/bard_six_takes.ndjson"), builtin_suite(), {});
  CHECK(bard.tool_invocations == 0);

  cli::ReplayReport t = cli::replay_log(fixture("logs/tampered_sr_tool_feedback.ndjson"), builtin_suite(), {});
  CHECK_FALSE(t.confirmed);
  CHECK(t.mismatches == std::vector<std::string>{"user message 3 differs"});

  Run r = hwloop_cli("replay " + q(fixture("logs/sr_tool_feedback.ndjson")) + " " +
                     q(fixture("logs/tampered_sr_tool_feedback.ndjson")));
  CHECK(r.status == 0);
  CHECK(r.output.find("1/2 confirmed") != std::string::npos);
}

TEST_CASE("wrapper command") {
  TempDir out;
  Run r = hwloop_cli("wrapper --out " + q(out.path));
  CHECK(r.status == 0);
  CHECK(std::filesystem::exists(out.path / "tt_um_hwloop_wrapper.v"));
  CHECK(std::filesystem::exists(out.path / "pinout.txt"));
  std::string validation = text::read_file(out.path / "validation.txt");
  CHECK(validation.find("mismatch") == std::string::npos);

  text::write_file(out.path / "dup.yaml", "select: [5, 6, 7]\nclock: 0\nshared: [1, 2, 3, 3]\n");
  Run dup = hwloop_cli("wrapper --pinmap " + q(out.path / "dup.yaml") + " --out " + q(out.path / "d"));
  CHECK(dup.status == 1);
  CHECK(dup.output.find("assigned twice") != std::string::npos);
}

TEST_CASE("prompt and suite export") {
  Run p = hwloop_cli("prompt shift_register");
  CHECK(p.status == 0);
  CHECK(p.output.find("I am trying to create a Verilog model for a shift register.") == 0);
  TempDir out;
  Run e = hwloop_cli("suite export " + q(out.path));
  CHECK(e.status == 0);
  CHECK(std::filesystem::exists(out.path / "suite.yaml"));
  CHECK(std::filesystem::exists(out.path / "abro_tb.v"));
}

// ---------------------------------------------------------------------------

namespace {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct Server {
  cli::ServeConfig config;
  std::atomic<bool> stop{false};
  std::atomic<unsigned short> port{0};
  std::thread thread;
  TempDir run;

  Server() {
    config.port = 0;
    config.suite = builtin_suite();
    config.assets = cli::default_ui_assets();
    config.run_dir = run.path;
    thread = std::thread([this] { cli::serve(config, [this](unsigned short p) { port = p; }, [this] { return stop.load(); }); });
    for (int i = 0; i < 500 && port == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    REQUIRE(port != 0);
  }
  ~Server() {
    stop = true;
    thread.join();
  }
};

struct Client {
  net::io_context ioc;
  websocket::stream<tcp::socket> ws{ioc};

  explicit Client(unsigned short port) {
    tcp::resolver resolver(ioc);
    net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", "/events");
  }
  json read() {
    beast::flat_buffer b;
    ws.read(b);
    return json::parse(beast::buffers_to_string(b.data()));
  }
  void send(const json& j) { ws.write(net::buffer(j.dump())); }
  // Reads until a record of `type` arrives.
  json until(const std::string& type, std::vector<json>* seen = nullptr) {
    for (int i = 0; i < 10000; ++i) {
      json e = read();
      if (seen) seen->push_back(e);
      if (e["type"] == type) return e;
    }
    FAIL("no " << type << " record");
    return {};
  }
};

json start(const std::string& transcript_file) {
  return {{"v", 1},
          {"type", "start"},
          {"data", {{"benchmark", "shift_register"}, {"transcript", fixture_text("transcripts/" + transcript_file)}}}};
}

}  // namespace

TEST_CASE("serve streams a scripted conversation") {
  Server server;
  Client c(server.port);
  json idle = c.read();
  CHECK(idle["type"] == "idle");
  CHECK(idle["v"] == 1);

  c.send({{"v", 2}, {"type", "start"}});
  CHECK(c.read()["type"] == "error");
  c.send({{"v", 1}, {"type", "feedback"}, {"data", {{"text", "x"}}}});
  CHECK(c.read()["type"] == "error");

  c.send(start("sr_tool_feedback.yaml"));
  std::vector<json> seen;
  json terminal = c.until("terminal", &seen);
  CHECK(terminal["data"]["terminal"] == "TF");
  long expected_seq = 0;
  std::vector<std::string> types;
  for (const auto& e : seen) {
    CHECK(e["seq"] == expected_seq++);
    CHECK(e.contains("conversation"));
    types.push_back(e["type"]);
  }
  CHECK(types.front() == "state");
  CHECK(std::count(types.begin(), types.end(), "verdict") == 2);
  CHECK(std::count(types.begin(), types.end(), "message") == 6);

  // A late joiner gets the history.
  Client late(server.port);
  CHECK(late.read()["seq"] == 0);
}

TEST_CASE("serve relays operator feedback and aborts") {
  Server server;
  Client c(server.port);
  c.read();
  c.send(start("shf_escalation.yaml"));
  json esc = c.until("escalation");
  CHECK(esc["data"]["level"] == "SHF");
  c.send({{"v", 1}, {"type", "abort"}, {"data", {{"reason", "wrote_hdl"}}}});
  json terminal = c.until("terminal");
  CHECK(terminal["data"]["terminal"] == "FAIL");
  CHECK(terminal["data"]["reason"] == "operator_abort:wrote_hdl");

  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  c.send(start("shf_escalation.yaml"));
  c.until("escalation");
  c.send({{"v", 1}, {"type", "feedback"}, {"data", {{"text", "There is a syntax error in the shift assignment.\n"}}}});
  terminal = c.until("terminal");
  CHECK(terminal["data"]["terminal"] == "SHF");
}

TEST_CASE("serve hands out the UI assets") {
  Server server;
  namespace http = beast::http;
  auto get = [&](const std::string& target) {
    net::io_context ioc;
    tcp::socket sock(ioc);
    tcp::resolver resolver(ioc);
    net::connect(sock, resolver.resolve("127.0.0.1", std::to_string(server.port)));
    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "127.0.0.1");
    http::write(sock, req);
    beast::flat_buffer b;
    http::response<http::string_body> res;
    http::read(sock, b, res);
    return res;
  };
  auto index = get("/");
  CHECK(index.result_int() == 200);
  CHECK(index.body().find("app.js") != std::string::npos);
  CHECK(get("/app.js").body().find("/events") != std::string::npos);
  CHECK(get("/../CMakeLists.txt").result_int() >= 400);
  CHECK(get("/missing.css").result_int() == 404);
}

TEST_CASE("serve reports a busy port") {
  net::io_context ioc;
  tcp::acceptor taken(ioc, tcp::endpoint(net::ip::make_address("127.0.0.1"), 0));
  cli::ServeConfig cfg;
  cfg.port = taken.local_endpoint().port();
  cfg.suite = builtin_suite();
  CHECK_THROWS_AS(cli::serve(cfg, {}, [] { return true; }), EnvironmentError);
}
