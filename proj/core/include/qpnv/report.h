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

#ifndef QPNV_REPORT_H
#define QPNV_REPORT_H

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpnv/event_log.h"

namespace qpnv {

struct TallyRecord {
  std::uint64_t session = 0;
  std::string purpose;
  std::vector<std::size_t> row_sums;
  std::vector<std::size_t> counts;
  bool accepted = false;
  friend bool operator==(const TallyRecord&, const TallyRecord&) = default;
};

struct ElectionRecord {
  std::uint64_t tenure = 0;
  std::vector<std::uint64_t> ranking;
  std::vector<std::uint64_t> elected;
  friend bool operator==(const ElectionRecord&, const ElectionRecord&) = default;
};

/// Everything the summary report states. It is derived from the event log
/// alone, so replaying a log reproduces it exactly.
struct SummaryReport {
  std::string scenario;
  std::uint64_t events = 0;

  std::vector<TallyRecord> tallies;
  std::uint64_t sessions_started = 0;
  std::uint64_t sessions_aborted = 0;

  std::uint64_t blocks_ordinary = 0;
  std::uint64_t blocks_special = 0;
  std::uint64_t blocks_rejected = 0;
  /// Rotation number -> blocks finalized in it (rotations with none are absent).
  std::map<std::uint64_t, std::uint64_t> finalized_by_rotation;
  /// Blocks finalized by a group holding at most half of the voters.
  std::uint64_t minority_finalized = 0;

  std::uint64_t chain_verifications = 0;
  double min_chain_fidelity = 1.0;
  bool chains_ok = true;

  std::uint64_t trials = 0;
  std::uint64_t detected = 0;
  std::optional<double> detection_oracle;

  std::vector<ElectionRecord> elections;
  /// Bookkeeper id -> times chosen as next rotating bookkeeper by an
  /// ordinary block.
  std::map<std::uint64_t, std::uint64_t> selection_counts;

  std::uint64_t random_blocks = 0;
  std::uint64_t random_verified = 0;
  std::uint64_t impersonation_checks = 0;
  std::uint64_t impersonation_flagged = 0;

  std::optional<bool> golden_ok;
  std::string golden_failed_step;

  double detection_rate() const { return trials == 0 ? 0.0 : double(detected) / double(trials); }
  std::uint64_t blocks_finalized() const { return blocks_ordinary + blocks_special; }
  std::uint64_t finalized_between(std::uint64_t first, std::uint64_t last) const;

  friend bool operator==(const SummaryReport&, const SummaryReport&) = default;
};

nlohmann::json report_to_json(const SummaryReport& report);

/// Incremental report construction; usable as an EventLog sink.
class ReportBuilder {
 public:
  void consume(const Event& event);
  const SummaryReport& report() const { return report_; }

 private:
  SummaryReport report_;
  std::set<std::uint64_t> voters_;
  std::map<std::uint64_t, std::uint64_t> issued_;  // request id -> value
  std::uint64_t rotation_ = 0;
  std::set<std::uint64_t> impersonated_rotations_;
};

SummaryReport replay(const EventLog& log);

}  // namespace qpnv

#endif  // QPNV_REPORT_H
