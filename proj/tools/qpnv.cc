// Copyright 2026 The qpnv-sim Authors
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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qpnv/crypto.h"
#include "qpnv/golden.h"
#include "qpnv/report.h"
#include "qpnv/scenario.h"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kExpectationFailed = 1;
constexpr int kConfigError = 2;

int run(const std::string& config_path, const std::string& scenario, std::optional<std::uint64_t> seed,
        std::optional<std::size_t> trials, std::optional<std::size_t> threads, const std::string& out_dir,
        const std::string& level) {
  qpnv::ScenarioConfig config = config_path.empty()
                                    ? qpnv::builtin_scenario(scenario.empty() ? "honest-tenure" : scenario)
                                    : qpnv::load_scenario(config_path);
  if (seed) config.consensus.seed = *seed;
  if (trials) config.trials = *trials;
  if (threads) config.threads = *threads;
  const auto filter = qpnv::log_filter(qpnv::parse_log_level(level));

  fs::create_directories(out_dir);
  const fs::path log_path = fs::path(out_dir) / "events.jsonl";
  std::ofstream log_file(log_path, std::ios::binary);
  if (!log_file) throw qpnv::ConfigError("cannot write " + log_path.string());

  qpnv::EventLog log(/*retain=*/false);
  log.set_filter(filter);
  qpnv::Sha256Stream log_digest;
  log.add_sink([&](const qpnv::Event& e) {
    const std::string line = qpnv::event_to_json(e).dump() + '\n';
    log_file << line;
    log_digest.update(line);
  });
  const qpnv::ScenarioResult result = qpnv::run_scenario(config, log);
  log_file.close();

  const fs::path report_path = fs::path(out_dir) / "report.json";
  std::ofstream(report_path) << qpnv::report_to_json(result.report).dump(2) << '\n';

  std::cout << "scenario " << config.name << " (seed " << config.consensus.seed << "): " << log.size()
            << " events\n";
  std::cout << "  blocks finalized: " << result.report.blocks_ordinary << " ordinary, "
            << result.report.blocks_special << " special\n";
  if (result.report.trials > 0) {
    std::cout << "  detection: " << result.report.detected << "/" << result.report.trials << " (rate "
              << result.report.detection_rate() << ", oracle " << result.report.detection_oracle.value_or(0.0)
              << ")\n";
  }
  for (const auto& e : result.expectations) {
    std::cout << "  [" << (e.ok ? "PASS" : "FAIL") << "] " << e.name << ": " << e.detail << '\n';
  }
  std::cout << "  log: " << log_path.string() << " (sha256 " << qpnv::to_hex(log_digest.digest()) << ")\n";
  std::cout << "  report: " << report_path.string() << '\n';
  return result.ok() ? kOk : kExpectationFailed;
}

int replay(const std::string& log_path, const std::string& report_path) {
  std::ifstream in(log_path);
  if (!in) throw qpnv::ConfigError("cannot open " + log_path);
  const qpnv::EventLog log = qpnv::EventLog::read_jsonl(in);
  const nlohmann::json report = qpnv::report_to_json(qpnv::replay(log));
  if (report_path.empty()) {
    std::cout << report.dump(2) << '\n';
    return kOk;
  }
  std::ifstream original(report_path);
  if (!original) throw qpnv::ConfigError("cannot open " + report_path);
  const nlohmann::json expected = nlohmann::json::parse(original);
  if (expected != report) {
    std::cout << "replayed report differs from " << report_path << '\n';
    std::cout << nlohmann::json::diff(expected, report).dump(2) << '\n';
    return kExpectationFailed;
  }
  std::cout << "replayed report matches " << report_path << '\n';
  return kOk;
}

int verify_example() {
  const qpnv::GoldenVerdict v = qpnv::verify_example(qpnv::worked_example());
  for (const auto& step : v.steps) {
    std::cout << "[" << (step.passed ? "PASS" : "FAIL") << "] " << step.name << ": " << step.detail << '\n';
  }
  if (!v.ok) {
    std::cout << "mismatch at step " << v.failed_step.value_or("?") << '\n';
    return kExpectationFailed;
  }
  std::cout << "worked example reproduced\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator of quantum proof-and-vote consensus"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> threads;
  std::string out_dir = "qpnv-out";
  std::string level = "info";
  bool list = false;
  app.add_option("--config", config_path, "Scenario file (INI)")->check(CLI::ExistingFile);
  app.add_option("--scenario", scenario, "Built-in scenario name");
  app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--trials", trials, "Override the trial count of statistical scenarios");
  app.add_option("--threads", threads, "Worker threads for trials (default: all cores)");
  app.add_option("--out", out_dir, "Directory for events.jsonl and report.json");
  app.add_option("--log-level", level, "debug (every network message) or info")
      ->check(CLI::IsMember({"debug", "info"}));
  app.add_flag("--list", list, "List built-in scenarios");
  app.get_option("--config")->excludes("--scenario");

  auto* replay_cmd = app.add_subcommand("replay", "Recompute the report from an event log");
  std::string log_path;
  std::string report_path;
  replay_cmd->add_option("log", log_path, "events.jsonl to replay")->required();
  replay_cmd->add_option("--report", report_path, "report.json to compare against");

  auto* verify_cmd = app.add_subcommand("verify-example", "Check the built-in worked example step by step");

  CLI11_PARSE(app, argc, argv);
  try {
    if (list) {
      for (const auto& name : qpnv::builtin_scenario_names()) std::cout << name << '\n';
      return kOk;
    }
    if (*replay_cmd) return replay(log_path, report_path);
    if (*verify_cmd) return verify_example();
    return run(config_path, scenario, seed, trials, threads, out_dir, level);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}
