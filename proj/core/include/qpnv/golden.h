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

#ifndef QPNV_GOLDEN_H
#define QPNV_GOLDEN_H

#include <optional>
#include <string>
#include <vector>

#include "qpnv/event_log.h"
#include "qpnv/ledger.h"
#include "qpnv/voting.h"

namespace qpnv {

/// A fully forced voting round: measurement outcomes, test selections,
/// votes, and every value the round is expected to produce.
struct ExampleTranscript {
  std::size_t m = 2;
  std::vector<std::vector<std::size_t>> box_outcomes;    // one row per ballot-box copy
  std::vector<std::vector<std::size_t>> index_outcomes;  // one row per index copy
  std::vector<TestChoice> box_tests;                     // one per voter
  std::vector<TestChoice> index_tests;
  std::vector<std::size_t> votes;

  BallotMatrix expected_ballots;
  IndexVector expected_indexes;
  BallotMatrix expected_updated;
  std::vector<std::size_t> expected_row_sums;
  std::size_t expected_approvals = 0;
  bool expected_accepted = false;

  double theta1 = 0.0;
  std::vector<double> expected_thetas;
};

/// The four-voter, binary, delta0 = delta1 = 1 round with votes {0,0,1,0}
/// and the three-block chain that follows it.
ExampleTranscript worked_example();

struct GoldenStep {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct GoldenVerdict {
  bool ok = false;
  std::vector<GoldenStep> steps;
  std::optional<std::string> failed_step;

  BallotMatrix ballots;
  IndexVector indexes;
  BallotMatrix updated;
  std::optional<TallyResult> tally;
  std::optional<ChainVerdict> chain;
};

/// Replays the transcript through a real voting session with a scripted
/// sampler and checks each intermediate value. Stops at the first
/// mismatch, which `failed_step` names. Steps are logged when `log` is set.
GoldenVerdict verify_example(const ExampleTranscript& transcript, EventLog* log = nullptr);

}  // namespace qpnv

#endif  // QPNV_GOLDEN_H
