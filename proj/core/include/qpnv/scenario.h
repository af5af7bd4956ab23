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

#ifndef QPNV_SCENARIO_H
#define QPNV_SCENARIO_H

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qpnv/consensus.h"
#include "qpnv/event_log.h"
#include "qpnv/report.h"

namespace qpnv {

/// Malformed or out-of-range configuration (exit status 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ScenarioKind { Consortium, ForgedBallot, PaperExample };

const char* scenario_kind_name(ScenarioKind kind);

struct ScenarioConfig {
  std::string name = "custom";
  ScenarioKind kind = ScenarioKind::Consortium;
  ConsensusConfig consensus;
  /// Independent sessions for forged-ballot runs; trial i uses seed + i.
  std::size_t trials = 10000;
  ForgedState forged;
  /// Worker threads for trials; 0 picks the hardware concurrency.
  std::size_t threads = 0;
  /// [expect] entries in file order.
  std::vector<std::pair<std::string, std::string>> expectations;
};

ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig builtin_scenario(std::string_view name);
std::vector<std::string> builtin_scenario_names();

/// Throws ConfigError when a parameter is out of range or a state the run
/// would prepare exceeds the simulator's dimension guard.
void validate_scenario(const ScenarioConfig& config);

/// Parses "pi", "pi/8", "3*pi/16" or a plain number.
double parse_angle(std::string_view text);

enum class LogLevel { Debug, Info };
LogLevel parse_log_level(std::string_view name);
/// Debug keeps every event; Info drops per-message network traffic.
std::function<bool(std::string_view)> log_filter(LogLevel level);

struct ExpectationResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct ScenarioResult {
  SummaryReport report;
  std::vector<ExpectationResult> expectations;
  bool ok() const;
};

std::vector<ExpectationResult> check_expectations(const ScenarioConfig& config, const SummaryReport& report);

/// Runs the scenario, appending to `log`; the report is built from the
/// appended events whether or not the log retains them.
ScenarioResult run_scenario(const ScenarioConfig& config, EventLog& log);

}  // namespace qpnv

#endif  // QPNV_SCENARIO_H
