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

#include "hwloop/evalkit.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "hwloop/errors.hpp"
#include "text.hpp"

namespace hwloop {

namespace {

std::string today() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
  return buf;
}

}  // namespace

std::string bind_golden_testbench(const std::string& golden_tb, const std::string& golden_module,
                                  const std::string& found_module, const std::map<std::string, std::string>& binding) {
  std::regex inst("\\b" + golden_module + "\\b(\\s*(?:#\\s*\\([^;]*?\\))?\\s+[A-Za-z_][A-Za-z0-9_$]*\\s*)\\(");
  std::smatch m;
  if (!std::regex_search(golden_tb, m, inst))
    throw NotFoundError("golden testbench has no instance of " + golden_module);
  std::size_t begin = static_cast<std::size_t>(m.position(0));
  std::size_t open = begin + static_cast<std::size_t>(m.length(0)) - 1;
  int depth = 0;
  std::size_t close = open;
  for (; close < golden_tb.size(); ++close) {
    if (golden_tb[close] == '(') ++depth;
    else if (golden_tb[close] == ')' && --depth == 0) break;
  }
  if (close >= golden_tb.size()) throw NotFoundError("unterminated instance of " + golden_module);
  std::string ports = golden_tb.substr(open, close - open);
  static const std::regex named(R"(\.\s*([A-Za-z_][A-Za-z0-9_$]*)\s*\()");
  std::string rebound;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(ports.begin(), ports.end(), named); it != std::sregex_iterator(); ++it) {
    auto b = binding.find((*it)[1]);
    std::string name = b != binding.end() ? b->second : (*it)[1].str();
    rebound += ports.substr(last, static_cast<std::size_t>(it->position(0)) - last) + "." + name + "(";
    last = static_cast<std::size_t>(it->position(0) + it->length(0));
  }
  rebound += ports.substr(last);
  return golden_tb.substr(0, begin) + found_module + m[1].str() + rebound + golden_tb.substr(close);
}

ComplianceResult check_compliance(const std::string& design, const BenchmarkSpec& spec, ToolBridge& bridge,
                                  const std::filesystem::path& work_base) {
  ComplianceResult r;
  std::vector<InterfaceDesc> mods;
  try {
    mods = parse_module_interface(design);
  } catch (const Error& e) {
    r.binding_failure = true;
    r.evidence.push_back(std::string("design interface could not be parsed: ") + e.what());
    return r;
  }
  const InterfaceDesc* found = select_module(mods, spec.id, spec.interface);
  ConformanceReport rep = check_interface(*found, spec.interface);
  if (!rep.conforms) {
    r.binding_failure = true;
    r.evidence.push_back("golden testbench cannot bind: " + rep.summary());
    return r;
  }
  std::string tb;
  try {
    tb = bind_golden_testbench(spec.golden_testbench_source, spec.id, found->module_name, rep.binding);
  } catch (const NotFoundError& e) {
    r.binding_failure = true;
    r.evidence.push_back(e.what());
    return r;
  }
  Workdir wd(work_base);
  ToolVerdict v = bridge.build_and_run({{"design.v", design}, {"golden_tb.v", tb}}, wd.path());
  r.compliant = v.passed;
  if (!v.passed) {
    for (const auto& line : text::split_lines(v.feedback_text))
      if (!text::trim(line).empty()) r.evidence.push_back(line);
    if (!v.note.empty()) r.evidence.push_back(v.note);
  }
  return r;
}

// ---------------------------------------------------------------------------

std::string trial_label(int n) { return "T" + std::to_string(n); }

std::string report_model(const json& metadata) {
  if (metadata.contains("backend") && metadata["backend"].is_object()) {
    const json& b = metadata["backend"];
    if (b.contains("model")) return b["model"].get<std::string>();
    if (b.contains("kind")) return b["kind"].get<std::string>();
  }
  return "unknown";
}

std::map<std::string, Totals> compute_totals(const std::vector<Outcome>& rows, const std::string& model) {
  std::map<std::string, Totals> out;
  Totals& t = out[model];
  for (auto c : {TerminalClass::NFN, TerminalClass::TF, TerminalClass::SHF, TerminalClass::MHF, TerminalClass::AHF,
                 TerminalClass::FAIL})
    t.by_terminal[to_string(c)] = 0;
  t.by_terminal["skipped-env"] = 0;
  for (const auto& r : rows) {
    if (r.skipped_env) {
      ++t.by_terminal["skipped-env"];
      continue;
    }
    ++t.by_terminal[to_string(r.terminal)];
    if (r.compliant) {
      ++t.judged;
      if (*r.compliant) ++t.compliant;
    }
  }
  return out;
}

json SuiteReport::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) rows_j.push_back(r.to_json());
  json totals_j = json::object();
  for (const auto& [model, t] : totals)
    totals_j[model] = {{"by_terminal", t.by_terminal}, {"compliant", t.compliant}, {"judged", t.judged}};
  return {{"metadata", metadata}, {"rows", rows_j}, {"totals", totals_j}};
}

SuiteReport SuiteReport::from_json(const json& j) {
  SuiteReport r;
  r.metadata = j.value("metadata", json::object());
  for (const auto& row : j.at("rows")) r.rows.push_back(Outcome::from_json(row));
  const json totals = j.value("totals", json::object());
  for (const auto& [model, t] : totals.items()) {
    Totals tt;
    tt.by_terminal = t.at("by_terminal").get<std::map<std::string, int>>();
    tt.compliant = t.at("compliant").get<int>();
    tt.judged = t.at("judged").get<int>();
    r.totals[model] = tt;
  }
  return r;
}

SuiteReport run_suite(const std::vector<BenchmarkSpec>& suite, const TrialFactory& factory,
                      const SuiteRunConfig& config) {
  if (config.trials < 0) throw ConfigError("trials must be non-negative");
  config.limits.validate();
  SuiteReport report;
  report.metadata = {{"backend", config.backend_description},
                     {"trials", config.trials},
                     {"benchmarks", json::array()},
                     {"titles", json::object()},
                     {"date", today()},
                     {"limits",
                      {{"max_regenerations", config.limits.max_regenerations},
                       {"max_user_messages", config.limits.max_user_messages},
                       {"identical_error_threshold", config.limits.identical_error_threshold},
                       {"per_human_level_attempts", config.limits.per_human_level_attempts},
                       {"count_continuations", config.limits.count_continuations},
                       {"feedback_line_limit", config.limits.feedback_line_limit}}}};
  for (const auto& b : suite) {
    report.metadata["benchmarks"].push_back(b.id);
    report.metadata["titles"][b.id] = b.title;
  }
  try {
    report.metadata["toolchain"] = discover_toolchain(config.tools).origin;
  } catch (const EnvironmentError&) {
    report.metadata["toolchain"] = "unavailable";
  }

  struct Job {
    const BenchmarkSpec* spec;
    std::string label;
  };
  std::vector<Job> jobs;
  for (const auto& b : suite)
    for (int t = 1; t <= config.trials; ++t) jobs.push_back({&b, trial_label(t)});
  std::vector<Outcome> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex, event_mutex;
  std::exception_ptr first_error;

  auto run_one = [&](const Job& job) -> Outcome {
    std::filesystem::path dir;
    if (!config.run_dir.empty()) {
      dir = config.run_dir / job.spec->id / job.label;
      if (std::filesystem::exists(dir / "outcome.json")) return Outcome::from_json(json::parse(text::read_file(dir / "outcome.json")));
      std::filesystem::create_directories(dir);
    }
    Outcome o;
    o.benchmark_id = job.spec->id;
    o.trial_label = job.label;
    TrialInputs in = factory(*job.spec, job.label);
    Conversation conv;
    conv.id = job.spec->id + "-" + job.label;
    conv.benchmark_id = job.spec->id;
    conv.trial_label = job.label;
    std::shared_ptr<ConversationLog> log;
    if (!dir.empty()) log = std::make_shared<ConversationLog>(dir / "conversation.ndjson");
    Session session(std::move(in.backend), conv, log);
    ToolBridge bridge(config.tools);
    ToolBridge compliance_bridge(config.tools);
    RunOptions opt;
    opt.limits = config.limits;
    opt.work_base = config.work_base;
    if (config.events) {
      std::string tag = conv.id;
      opt.events = [&, tag](const json& e) {
        json tagged = e;
        tagged["conversation"] = tag;
        std::lock_guard<std::mutex> lock(event_mutex);
        config.events(tagged);
      };
    }
    const BenchmarkSpec& spec = *job.spec;
    opt.compliance = [&](const std::string& design) {
      ComplianceResult c = check_compliance(design, spec, compliance_bridge, config.work_base);
      return ComplianceVerdict{c.compliant, c.evidence};
    };
    try {
      ConversationResult r = run_conversation(spec, session, bridge, *in.feedback, opt);
      o = r.outcome;
      if (!dir.empty()) {
        text::write_file(dir / "design.v", r.design);
        text::write_file(dir / "testbench.v", r.testbench);
      }
    } catch (const EnvironmentError& e) {
      o.skipped_env = true;
      o.terminal = TerminalClass::FAIL;
      o.compliant.reset();
      o.user_messages = session.conversation().count_user_messages();
      o.reason = std::string("environment: ") + e.what();
    }
    if (!dir.empty()) text::write_file(dir / "outcome.json", o.to_json().dump(2) + "\n");
    return o;
  };

  auto worker = [&] {
    while (true) {
      std::size_t i = next++;
      if (i >= jobs.size()) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      try {
        rows[i] = run_one(jobs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  int n = std::max(1, std::min<int>(config.parallel, static_cast<int>(jobs.size())));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  report.rows = std::move(rows);
  report.totals = compute_totals(report.rows, report_model(report.metadata));
  return report;
}

// ---------------------------------------------------------------------------

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "table-text" || s == "text" || s == "table") return ReportFormat::TableText;
  if (s == "delimited" || s == "csv") return ReportFormat::Delimited;
  if (s == "document" || s == "markdown" || s == "md") return ReportFormat::Document;
  throw ConfigError("unknown report format '" + s + "' (table-text, delimited, document)");
}

std::string report_extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::TableText: return ".txt";
    case ReportFormat::Delimited: return ".csv";
    case ReportFormat::Document: return ".md";
  }
  return ".txt";
}

namespace {

struct Cells {
  std::string benchmark, trial, outcome, compliant, messages;
};

Cells cells(const SuiteReport& report, const Outcome& o) {
  Cells c;
  c.benchmark = o.benchmark_id;
  if (report.metadata.contains("titles") && report.metadata["titles"].contains(o.benchmark_id))
    c.benchmark = report.metadata["titles"][o.benchmark_id].get<std::string>();
  c.trial = o.trial_label;
  c.outcome = o.skipped_env ? "skipped-env" : to_string(o.terminal);
  c.compliant = o.compliant ? (*o.compliant ? "yes" : "no") : "-";
  c.messages = std::to_string(o.user_messages);
  return c;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  return "\"" + text::replace_all(s, "\"", "\"\"") + "\"";
}

std::string totals_lines(const SuiteReport& report, const std::string& prefix) {
  std::string out;
  for (const auto& [model, t] : report.totals) {
    out += prefix + model + ":";
    for (auto name : {"NFN", "TF", "SHF", "MHF", "AHF", "FAIL", "skipped-env"}) {
      auto it = t.by_terminal.find(name);
      out += " " + std::string(name) + "=" + std::to_string(it == t.by_terminal.end() ? 0 : it->second);
    }
    out += " compliant=" + std::to_string(t.compliant) + "/" + std::to_string(t.judged) + "\n";
  }
  return out;
}

}  // namespace

std::string render_report(const SuiteReport& report, ReportFormat format) {
  const std::vector<std::string> header = {"Benchmark", "Test Set", "Outcome", "Compliant", "# Messages"};
  std::vector<std::vector<std::string>> table;
  for (const auto& o : report.rows) {
    Cells c = cells(report, o);
    table.push_back({c.benchmark, c.trial, c.outcome, c.compliant, c.messages});
  }
  std::string out;
  switch (format) {
    case ReportFormat::TableText: {
      std::vector<std::size_t> w(header.size());
      for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
      for (const auto& row : table)
        for (std::size_t i = 0; i < row.size(); ++i) w[i] = std::max(w[i], row[i].size());
      auto line = [&](const std::vector<std::string>& row) {
        std::string l;
        for (std::size_t i = 0; i < row.size(); ++i) {
          l += row[i];
          if (i + 1 < row.size()) l += std::string(w[i] - row[i].size() + 2, ' ');
        }
        return l + "\n";
      };
      out += line(header);
      std::size_t total = 0;
      for (auto x : w) total += x + 2;
      out += std::string(total - 2, '-') + "\n";
      for (const auto& row : table) out += line(row);
      if (!table.empty()) out += "\n" + totals_lines(report, "");
      break;
    }
    case ReportFormat::Delimited: {
      out += "benchmark,test_set,outcome,compliant,messages,reason\n";
      for (const auto& o : report.rows) {
        Cells c = cells(report, o);
        out += csv_field(o.benchmark_id) + "," + csv_field(c.trial) + "," + c.outcome + "," + c.compliant + "," +
               c.messages + "," + csv_field(o.reason) + "\n";
      }
      break;
    }
    case ReportFormat::Document: {
      out += "# Benchmark challenge results\n\n";
      const json& md = report.metadata;
      out += "- Model: " + report_model(md) + "\n";
      if (md.contains("backend")) out += "- Backend: `" + md["backend"].dump() + "`\n";
      if (md.contains("date")) out += "- Date: " + md["date"].get<std::string>() + "\n";
      if (md.contains("toolchain")) out += "- Toolchain: " + md["toolchain"].get<std::string>() + "\n";
      if (md.contains("trials")) out += "- Trials: " + md["trials"].dump() + "\n";
      out += "\n| " + text::join(header, " | ") + " |\n|---|---|---|---|---|\n";
      for (const auto& row : table) out += "| " + text::join(row, " | ") + " |\n";
      if (!table.empty()) out += "\n" + totals_lines(report, "- ");
      break;
    }
  }
  return out;
}

}  // namespace hwloop
