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

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <atomic>
#include <csignal>
#include <iostream>

#include "commands.hpp"
#include "hwloop/errors.hpp"
#include "text.hpp"

namespace fs = std::filesystem;
using namespace hwloop;
using namespace hwloop::cli;

namespace {

std::atomic<bool> g_stop{false};

struct Common {
  std::string suite;
  std::string compiler;
  std::string runtime;
};

std::vector<BenchmarkSpec> load_suite_opt(const Common& c) {
  return c.suite.empty() ? builtin_suite() : load_suite_file(c.suite);
}

ToolchainConfig tools_opt(const Common& c) {
  ToolchainConfig t;
  if (!c.compiler.empty()) t.compiler = c.compiler;
  if (!c.runtime.empty()) t.runtime = c.runtime;
  return t;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--suite", c.suite, "Suite YAML (default: built-in suite)")->check(CLI::ExistingFile);
  app->add_option("--compiler", c.compiler, "Verilog compiler (iverilog-compatible)");
  app->add_option("--runtime", c.runtime, "Simulation runtime (vvp-compatible)");
}

const BenchmarkSpec& find_benchmark(const std::vector<BenchmarkSpec>& suite, const std::string& id) {
  for (const auto& b : suite)
    if (b.id == id) return b;
  throw NotFoundError("unknown benchmark '" + id + "'");
}

std::string remediation() {
  return "install Icarus Verilog (iverilog, vvp), set HWLOOP_IVERILOG/HWLOOP_VVP, pass --compiler/--runtime, "
         "or keep the bundled hwlsim-compile/hwlsim-run next to the hwloop binary";
}

struct RunArgs {
  Common common;
  std::string target;
  std::string backend = "scripted";
  std::string transcript;
  std::string transcript_dir;
  std::string model = "gpt-4";
  std::string endpoint;
  int trials = 1;
  int parallel = 1;
  std::string out;
  std::vector<std::string> formats{"table"};
  bool exclude_continuations = false;
  int max_messages = 25;
  int max_regenerations = 5;
  bool interactive_feedback = false;
};

BackendConfig backend_config(const RunArgs& a, const fs::path& transcript) {
  BackendConfig bc;
  if (a.backend == "scripted") {
    bc.kind = BackendConfig::Kind::Scripted;
    bc.transcript = transcript;
  } else if (a.backend == "remote") {
    bc.kind = BackendConfig::Kind::Remote;
    bc.remote.model = a.model;
    if (!a.endpoint.empty()) bc.remote.endpoint = a.endpoint;
  } else if (a.backend == "interactive") {
    bc.kind = BackendConfig::Kind::Interactive;
  } else {
    throw ConfigError("unknown backend '" + a.backend + "'");
  }
  return bc;
}

LoopLimits limits_of(const RunArgs& a) {
  LoopLimits l;
  l.max_user_messages = a.max_messages;
  l.max_regenerations = a.max_regenerations;
  l.count_continuations = !a.exclude_continuations;
  l.validate();
  return l;
}

TrialInputs trial_inputs(const RunArgs& a, const fs::path& transcript) {
  TrialInputs in;
  if (a.backend == "scripted") {
    Transcript t = load_transcript(transcript);
    in.feedback = std::make_unique<ScriptedFeedbackProvider>(t.feedback);
    in.backend = std::make_unique<ScriptedBackend>(std::move(t));
  } else {
    in.backend = make_backend(backend_config(a, transcript));
    in.feedback = std::make_unique<InteractiveFeedbackProvider>(std::cin, std::cout);
  }
  if (a.interactive_feedback) in.feedback = std::make_unique<InteractiveFeedbackProvider>(std::cin, std::cout);
  return in;
}

int cmd_run(const RunArgs& a) {
  auto suite = load_suite_opt(a.common);
  ToolchainConfig tools = tools_opt(a.common);
  LoopLimits limits = limits_of(a);
  if (a.trials < 1) throw ConfigError("--trials must be at least 1");
  discover_toolchain(tools);  // fail fast: EnvironmentError

  if (a.target != "suite") {
    const BenchmarkSpec& spec = find_benchmark(suite, a.target);
    fs::path transcript = a.transcript;
    if (a.backend == "scripted" && transcript.empty()) {
      if (a.transcript_dir.empty()) throw ConfigError("scripted backend needs --transcript or --transcript-dir");
      transcript = find_transcript(a.transcript_dir, spec.id, "T1");
    }
    TrialInputs in = trial_inputs(a, transcript);
    Conversation conv;
    conv.benchmark_id = spec.id;
    conv.trial_label = "T1";
    conv.id = spec.id + "-T1";
    std::shared_ptr<ConversationLog> log;
    fs::path dir = a.out.empty() ? fs::path() : fs::path(a.out) / spec.id / "T1";
    if (!dir.empty()) {
      fs::create_directories(dir);
      log = std::make_shared<ConversationLog>(dir / "conversation.ndjson");
    }
    Session session(std::move(in.backend), conv, log);
    ToolBridge bridge(tools);
    ToolBridge compliance_bridge(tools);
    RunOptions opt;
    opt.limits = limits;
    opt.compliance = [&](const std::string& design) {
      ComplianceResult c = check_compliance(design, spec, compliance_bridge);
      return ComplianceVerdict{c.compliant, c.evidence};
    };
    ConversationResult r = run_conversation(spec, session, bridge, *in.feedback, opt);
    if (!dir.empty()) write_artifacts(dir, r);
    const Outcome& o = r.outcome;
    std::cout << o.benchmark_id << " " << o.trial_label << ": " << to_string(o.terminal) << " "
              << (o.compliant ? (*o.compliant ? "compliant" : "non-compliant") : "-") << " " << o.user_messages
              << (o.reason.empty() ? "" : " (" + o.reason + ")") << "\n";
    return kCompleted;
  }

  SuiteRunConfig cfg;
  cfg.trials = a.trials;
  cfg.parallel = a.parallel;
  cfg.limits = limits;
  cfg.tools = tools;
  if (!a.out.empty()) cfg.run_dir = a.out;
  cfg.backend_description = {{"kind", a.backend}};
  if (a.backend == "remote") cfg.backend_description["model"] = a.model;
  if (a.backend != "scripted" && a.parallel > 1)
    throw ConfigError("--parallel needs the scripted backend (interactive input is serial)");
  if (a.backend == "scripted" && a.transcript_dir.empty())
    throw ConfigError("scripted suite runs need --transcript-dir");
  TrialFactory factory = [&](const BenchmarkSpec& spec, const std::string& label) {
    fs::path t = a.backend == "scripted" ? find_transcript(a.transcript_dir, spec.id, label) : fs::path();
    return trial_inputs(a, t);
  };
  SuiteReport report = run_suite(suite, factory, cfg);
  for (const auto& f : a.formats) {
    ReportFormat fmt = report_format_from_string(f);
    std::string text = render_report(report, fmt);
    if (!a.out.empty()) text::write_file(fs::path(a.out) / ("report" + report_extension(fmt)), text);
    if (fmt == ReportFormat::TableText || a.out.empty()) std::cout << text;
  }
  if (!a.out.empty()) text::write_file(fs::path(a.out) / "report.json", report.to_json().dump(2) + "\n");
  for (const auto& row : report.rows)
    if (row.skipped_env) {
      std::cerr << "environment: " << row.benchmark_id << " " << row.trial_label << " skipped: " << row.reason << "\n";
      return kEnvironment;
    }
  return kCompleted;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hwloop: LLM-in-the-loop Verilog design and test harness"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one benchmark or the whole suite");
  run_cmd->add_option("target", run.target, "Benchmark id or 'suite'")->required();
  add_common(run_cmd, run.common);
  run_cmd->add_option("--backend", run.backend, "scripted | remote | interactive")
      ->check(CLI::IsMember({"scripted", "remote", "interactive"}));
  run_cmd->add_option("--transcript", run.transcript, "Scripted transcript YAML")->check(CLI::ExistingFile);
  run_cmd->add_option("--transcript-dir", run.transcript_dir, "Directory of <id>[.<trial>].yaml transcripts")
      ->check(CLI::ExistingDirectory);
  run_cmd->add_option("--model", run.model, "Remote model name");
  run_cmd->add_option("--endpoint", run.endpoint, "Remote chat-completions URL");
  run_cmd->add_option("--trials", run.trials, "Trials per benchmark");
  run_cmd->add_option("--parallel", run.parallel, "Concurrent conversations");
  run_cmd->add_option("--out", run.out, "Run directory");
  run_cmd->add_option("--format", run.formats, "table | csv | markdown (repeatable)");
  run_cmd->add_flag("--exclude-continuations", run.exclude_continuations,
                    "Do not count 'continue' prompts as user messages");
  run_cmd->add_option("--max-messages", run.max_messages, "User-message cap");
  run_cmd->add_option("--max-regenerations", run.max_regenerations, "Spec-gate regeneration cap");
  run_cmd->add_flag("--interactive-feedback", run.interactive_feedback, "Ask the terminal for human feedback");

  Common replay_common;
  std::vector<std::string> logs;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run logged conversations and confirm their outcomes");
  replay_cmd->add_option("logs", logs, "conversation.ndjson files")->required()->check(CLI::ExistingFile);
  add_common(replay_cmd, replay_common);

  Common wrap_common;
  std::string pinmap_path, wrap_out = "wrapper";
  bool no_validate = false;
  std::vector<std::string> only;
  auto* wrap_cmd = app.add_subcommand("wrapper", "Generate the multiplexed top-level wrapper");
  add_common(wrap_cmd, wrap_common);
  wrap_cmd->add_option("--pinmap", pinmap_path, "Pin map YAML")->check(CLI::ExistingFile);
  wrap_cmd->add_option("--out", wrap_out, "Output directory");
  wrap_cmd->add_option("--benchmarks", only, "Subset of benchmark ids, in select order")->delimiter(',');
  wrap_cmd->add_flag("--no-validate", no_validate, "Skip the differential simulation");

  Common serve_common;
  ServeConfig serve_cfg;
  std::string serve_transcript, serve_backend = "scripted", serve_model = "gpt-4", serve_run_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the steering UI and its event channel");
  add_common(serve_cmd, serve_common);
  serve_cmd->add_option("--host", serve_cfg.host);
  serve_cmd->add_option("--port", serve_cfg.port);
  serve_cmd->add_option("--assets", serve_cfg.assets, "UI asset directory");
  serve_cmd->add_option("--backend", serve_backend)->check(CLI::IsMember({"scripted", "remote"}));
  serve_cmd->add_option("--transcript", serve_transcript)->check(CLI::ExistingFile);
  serve_cmd->add_option("--model", serve_model);
  serve_cmd->add_option("--out", serve_run_dir, "Conversation log directory");
  serve_cmd->add_flag("--confirm-regenerations", serve_cfg.confirm_regenerations);

  auto* suite_cmd = app.add_subcommand("suite", "Suite utilities");
  suite_cmd->require_subcommand(1);
  std::string export_dir;
  auto* export_cmd = suite_cmd->add_subcommand("export", "Write the built-in suite and golden files");
  export_cmd->add_option("dir", export_dir)->required();

  Common prompt_common;
  std::string prompt_id, prompt_kind = "design";
  auto* prompt_cmd = app.add_subcommand("prompt", "Print a rendered prompt");
  prompt_cmd->add_option("benchmark", prompt_id)->required();
  prompt_cmd->add_option("--kind", prompt_kind)->check(CLI::IsMember({"design", "testbench", "fix", "continue"}));
  add_common(prompt_cmd, prompt_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kCompleted : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);

    if (*replay_cmd) {
      auto suite = load_suite_opt(replay_common);
      ToolchainConfig tools = tools_opt(replay_common);
      discover_toolchain(tools);
      int refuted = 0;
      for (const auto& l : logs) {
        ReplayReport r = replay_log(l, suite, tools);
        std::cout << l << ": " << (r.confirmed ? "confirmed" : "MISMATCH");
        for (const auto& m : r.mismatches) std::cout << "; " << m;
        std::cout << "\n";
        if (!r.confirmed) {
          std::cout << "  recorded:   " << r.recorded << "\n  reproduced: " << r.reproduced << "\n";
          ++refuted;
        }
      }
      // A refuted log is a result, not a harness failure.
      std::cout << (logs.size() - refuted) << "/" << logs.size() << " confirmed\n";
      return kCompleted;
    }

    if (*wrap_cmd) {
      auto suite = load_suite_opt(wrap_common);
      if (!only.empty()) {
        std::vector<BenchmarkSpec> picked;
        for (const auto& id : only) picked.push_back(find_benchmark(suite, id));
        suite = picked;
      }
      PinMap pm = pinmap_path.empty() ? default_pinmap() : load_pinmap(pinmap_path);
      WrapperCommandResult r = wrapper_command(suite, pm, wrap_out, !no_validate, tools_opt(wrap_common));
      std::cout << r.artifacts.pinout;
      std::cout << "wrote " << (fs::path(wrap_out) / (r.artifacts.top + ".v")).string() << "\n";
      if (r.validation) {
        std::cout << r.validation->summary() << "validation " << (r.validation->passed ? "passed" : "FAILED") << "\n";
      } else {
        std::cout << "validation skipped: " << r.skipped_reason << "\n";
      }
      return kCompleted;
    }

    if (*serve_cmd) {
      serve_cfg.suite = load_suite_opt(serve_common);
      serve_cfg.tools = tools_opt(serve_common);
      serve_cfg.backend.kind = serve_backend == "remote" ? BackendConfig::Kind::Remote : BackendConfig::Kind::Scripted;
      serve_cfg.backend.transcript = serve_transcript;
      serve_cfg.backend.remote.model = serve_model;
      serve_cfg.run_dir = serve_run_dir;
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      serve(
          serve_cfg,
          [&](unsigned short port) {
            std::cout << "listening on http://" << serve_cfg.host << ":" << port << "/ (events at /events)" << std::endl;
          },
          [] { return g_stop.load(); });
      return kCompleted;
    }

    if (*export_cmd) {
      export_builtin_suite(export_dir);
      std::cout << "wrote " << (fs::path(export_dir) / "suite.yaml").string() << "\n";
      return kCompleted;
    }

    if (*prompt_cmd) {
      auto suite = load_suite_opt(prompt_common);
      const BenchmarkSpec& spec = find_benchmark(suite, prompt_id);
      if (prompt_kind == "design") std::cout << render_design_prompt(spec) << "\n";
      else if (prompt_kind == "testbench") std::cout << render_fixed_prompt(PromptKind::Testbench) << "\n";
      else if (prompt_kind == "fix") std::cout << render_fixed_prompt(PromptKind::Fix) << "\n";
      else std::cout << render_fixed_prompt(PromptKind::Continue) << "\n";
      return kCompleted;
    }
  } catch (const EnvironmentError& e) {
    std::cerr << "environment: " << e.what() << "\n  hint: " << remediation() << "\n";
    return kEnvironment;
  } catch (const TransportError& e) {
    std::cerr << "environment: " << e.what() << "\n";
    return kEnvironment;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const YAML::Exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
