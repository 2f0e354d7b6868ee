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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hwloop/bench_spec.hpp"
#include "hwloop/loop_engine.hpp"

namespace hwloop {

struct ComplianceResult {
  bool compliant = false;
  std::vector<std::string> evidence;
  bool binding_failure = false;
};

/// Rewrites the golden testbench's instance of the benchmark so it binds to
/// `found` (module name and named port connections).
std::string bind_golden_testbench(const std::string& golden_tb, const std::string& golden_module,
                                  const std::string& found_module, const std::map<std::string, std::string>& binding);

/// Runs the benchmark's golden testbench against `design`.
ComplianceResult check_compliance(const std::string& design, const BenchmarkSpec& spec, ToolBridge& bridge,
                                  const std::filesystem::path& work_base = std::filesystem::temp_directory_path());

struct TrialInputs {
  std::unique_ptr<ChatBackend> backend;
  std::unique_ptr<FeedbackProvider> feedback;
};
using TrialFactory = std::function<TrialInputs(const BenchmarkSpec& spec, const std::string& trial_label)>;

struct SuiteRunConfig {
  int trials = 1;
  int parallel = 1;
  LoopLimits limits;
  ToolchainConfig tools;
  std::filesystem::path run_dir;  // empty: nothing persisted
  std::filesystem::path work_base = std::filesystem::temp_directory_path();
  json backend_description = json::object();
  EventSink events;  // receives every conversation's events, tagged with "conversation"
};

struct Totals {
  std::map<std::string, int> by_terminal;  // NFN..FAIL plus skipped-env
  int compliant = 0;
  int judged = 0;  // rows with a compliance verdict
  double compliance_rate() const { return judged ? static_cast<double>(compliant) / judged : 0.0; }
  bool operator==(const Totals&) const = default;
};

struct SuiteReport {
  json metadata = json::object();
  std::vector<Outcome> rows;
  std::map<std::string, Totals> totals;  // keyed by model

  json to_json() const;
  static SuiteReport from_json(const json& j);
};

std::string trial_label(int n);  // T1, T2, ...
std::map<std::string, Totals> compute_totals(const std::vector<Outcome>& rows, const std::string& model);
std::string report_model(const json& metadata);

/// Runs every benchmark x trial. Rows with an outcome.json already in
/// run_dir are loaded instead of re-run.
SuiteReport run_suite(const std::vector<BenchmarkSpec>& suite, const TrialFactory& factory,
                      const SuiteRunConfig& config);

enum class ReportFormat { TableText, Delimited, Document };
ReportFormat report_format_from_string(const std::string& s);
std::string report_extension(ReportFormat f);
std::string render_report(const SuiteReport& report, ReportFormat format);

}  // namespace hwloop
