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

#include "qpnv/report.h"

#include <algorithm>

namespace qpnv {

std::uint64_t SummaryReport::finalized_between(std::uint64_t first, std::uint64_t last) const {
  std::uint64_t total = 0;
  for (auto it = finalized_by_rotation.lower_bound(first);
       it != finalized_by_rotation.end() && it->first <= last; ++it) {
    total += it->second;
  }
  return total;
}

void ReportBuilder::consume(const Event& e) {
  SummaryReport& r = report_;
  r.events = e.seq + 1;
  const nlohmann::json& d = e.data;
  const std::string& k = e.kind;

  if (k == "scenario") {
    r.scenario = d.at("name").get<std::string>();
  } else if (k == "admitted") {
    for (const auto& v : d.at("voters")) voters_.insert(v.get<std::uint64_t>());
  } else if (k == "rotation_start" || k == "election_start") {
    rotation_ = d.at("rotation").get<std::uint64_t>();
  } else if (k == "session_start") {
    ++r.sessions_started;
  } else if (k == "session_aborted") {
    ++r.sessions_aborted;
  } else if (k == "session_result") {
    r.tallies.push_back(TallyRecord{d.at("session").get<std::uint64_t>(), d.at("purpose").get<std::string>(),
                                    d.at("R").get<std::vector<std::size_t>>(),
                                    d.at("N").get<std::vector<std::size_t>>(), d.at("accepted").get<bool>()});
  } else if (k == "block_rejected") {
    ++r.blocks_rejected;
  } else if (k == "block_finalized") {
    const nlohmann::json& b = d.at("block");
    const bool special = b.at("kind").get<std::string>() == "special";
    special ? ++r.blocks_special : ++r.blocks_ordinary;
    ++r.finalized_by_rotation[d.at("rotation").get<std::uint64_t>()];
    std::size_t in_group = 0;
    for (const auto& member : d.at("group")) in_group += voters_.count(member.get<std::uint64_t>());
    if (!voters_.empty() && 2 * in_group <= voters_.size()) ++r.minority_finalized;
    if (!special) ++r.selection_counts[b.at("next_bookkeeper").get<std::uint64_t>()];
    ++r.random_blocks;
    auto issued = issued_.find(b.at("random_request").get<std::uint64_t>());
    if (issued != issued_.end() && issued->second == b.at("random").get<std::uint64_t>()) ++r.random_verified;
  } else if (k == "chain_verified") {
    ++r.chain_verifications;
    r.min_chain_fidelity = std::min(r.min_chain_fidelity, d.at("fidelity").get<double>());
    r.chains_ok = r.chains_ok && d.at("ok").get<bool>();
  } else if (k == "trial") {
    ++r.trials;
    if (d.at("detected").get<bool>()) ++r.detected;
  } else if (k == "detection_oracle") {
    r.detection_oracle = d.at("probability").get<double>();
  } else if (k == "election") {
    r.elections.push_back(ElectionRecord{d.at("tenure").get<std::uint64_t>(),
                                         d.at("ranking").get<std::vector<std::uint64_t>>(),
                                         d.at("elected").get<std::vector<std::uint64_t>>()});
  } else if (k == "qrng_issue") {
    issued_[d.at("request").get<std::uint64_t>()] = d.at("value").get<std::uint64_t>();
  } else if (k == "impersonate_qrng") {
    impersonated_rotations_.insert(rotation_);
  } else if (k == "random_verify") {
    if (impersonated_rotations_.count(rotation_)) {
      ++r.impersonation_checks;
      if (!d.at("ok").get<bool>()) ++r.impersonation_flagged;
    }
  } else if (k == "golden_result") {
    r.golden_ok = d.at("ok").get<bool>();
    r.golden_failed_step = d.value("failed_step", "");
  }
}

SummaryReport replay(const EventLog& log) {
  ReportBuilder builder;
  for (const Event& e : log.events()) builder.consume(e);
  return builder.report();
}

nlohmann::json report_to_json(const SummaryReport& r) {
  nlohmann::json tallies = nlohmann::json::array();
  for (const TallyRecord& t : r.tallies) {
    tallies.push_back({{"session", t.session}, {"purpose", t.purpose}, {"R", t.row_sums},
                       {"N", t.counts}, {"accepted", t.accepted}});
  }
  nlohmann::json elections = nlohmann::json::array();
  for (const ElectionRecord& e : r.elections) {
    elections.push_back({{"tenure", e.tenure}, {"ranking", e.ranking}, {"elected", e.elected}});
  }
  nlohmann::json by_rotation = nlohmann::json::object();
  for (const auto& [rot, n] : r.finalized_by_rotation) by_rotation[std::to_string(rot)] = n;
  nlohmann::json selection = nlohmann::json::object();
  for (const auto& [id, n] : r.selection_counts) selection[std::to_string(id)] = n;

  nlohmann::json j{
      {"scenario", r.scenario},
      {"events", r.events},
      {"sessions", {{"started", r.sessions_started}, {"aborted", r.sessions_aborted}, {"tallies", tallies}}},
      {"blocks",
       {{"ordinary", r.blocks_ordinary},
        {"special", r.blocks_special},
        {"rejected", r.blocks_rejected},
        {"minority_finalized", r.minority_finalized},
        {"by_rotation", by_rotation}}},
      {"chain",
       {{"verifications", r.chain_verifications}, {"min_fidelity", r.min_chain_fidelity}, {"ok", r.chains_ok}}},
      {"elections", elections},
      {"selection", selection},
      {"random_audit",
       {{"blocks", r.random_blocks},
        {"verified", r.random_verified},
        {"impersonation_checks", r.impersonation_checks},
        {"impersonation_flagged", r.impersonation_flagged}}},
  };
  if (r.trials > 0 || r.detection_oracle) {
    j["detection"] = {{"trials", r.trials}, {"detected", r.detected}, {"rate", r.detection_rate()},
                      {"oracle", r.detection_oracle ? nlohmann::json(*r.detection_oracle) : nlohmann::json(nullptr)}};
  }
  if (r.golden_ok) j["golden"] = {{"ok", *r.golden_ok}, {"failed_step", r.golden_failed_step}};
  return j;
}

}  // namespace qpnv
