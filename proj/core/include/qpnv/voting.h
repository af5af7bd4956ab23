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

#ifndef QPNV_VOTING_H
#define QPNV_VOTING_H

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpnv/entropy.h"
#include "qpnv/qusim.h"

namespace qpnv {

// Self-tallying quantum voting.
//
// The bookkeeper prepares n + n*delta0 copies of |X_n> (the ballot boxes)
// and 1 + n*delta1 copies of |S_n> (the ballot indexes) and hands column k
// of each particle matrix to voter k. Each voter in turn sacrifices delta
// rows to a security test in a random basis; the surviving rows give the
// ballot matrix r and the index vector d. Voter k adds its vote to entry
// r[d_k][k] and publishes its column; anyone can then sum the rows.

enum class SessionPhase {
  Setup,
  BoxesDistributed,
  BoxesTested,
  IndexesDistributed,
  IndexesTested,
  Cast,
  Tallied,
  Aborted,
};

const char* phase_name(SessionPhase phase);

class WrongPhaseError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Anonymized ballot matrix: rows x voters, entries in [0, m).
struct BallotMatrix {
  std::size_t m = 2;
  std::vector<std::vector<std::size_t>> entries;

  std::size_t rows() const { return entries.size(); }
  std::size_t cols() const { return entries.empty() ? 0 : entries.front().size(); }
  friend bool operator==(const BallotMatrix&, const BallotMatrix&) = default;
};

using IndexVector = std::vector<std::size_t>;

struct TallyResult {
  std::vector<std::size_t> row_sums;  // R_x
  std::vector<std::size_t> counts;    // N_l for l in [0, m)
  std::size_t electorate = 0;         // acceptance needs N_0 > electorate / 2
  bool accepted = false;

  std::size_t approvals() const { return counts.empty() ? 0 : counts.front(); }
  friend bool operator==(const TallyResult&, const TallyResult&) = default;
};

/// Row sums mod m, per-option counts and the strict-majority decision.
/// `electorate` of 0 means the matrix's column count.
TallyResult tally(const BallotMatrix& published, std::size_t electorate = 0);

struct SelfTallyCheck {
  TallyResult recomputed;
  bool matches = false;
};

SelfTallyCheck self_tally_verify(const BallotMatrix& published, const TallyResult& announced);

/// Rows and per-row bases one tester sacrifices.
struct TestChoice {
  std::vector<std::size_t> rows;
  std::vector<Basis> bases;
};

struct SecurityTestRecord {
  std::size_t tester = 0;
  std::vector<std::size_t> rows;
  std::vector<Basis> bases;
  std::vector<std::vector<std::size_t>> outcomes;  // one vector (per voter) per tested row
  bool passed = true;
  std::optional<std::size_t> failing_row;
};

/// Produces the copies the bookkeeper distributes. Adversarial bookkeepers
/// substitute their own.
class StateFactory {
 public:
  virtual ~StateFactory() = default;
  virtual QuditRegister ballot_box(std::size_t n, std::size_t m) = 0;
  virtual QuditRegister ballot_index(std::size_t n) = 0;
};

class HonestStateFactory final : public StateFactory {
 public:
  QuditRegister ballot_box(std::size_t n, std::size_t m) override { return prepare_x(n, m); }
  QuditRegister ballot_index(std::size_t n) override { return prepare_s(n); }
};

/// Classical description of a forged state: a product computational-basis
/// string. An empty digit list means |0...0>.
struct ForgedState {
  std::vector<std::size_t> digits;

  QuditRegister build(std::size_t n, std::size_t levels) const;
  std::string describe() const;
};

/// Replaces the honest ballot boxes and/or indexes with forged product states.
class ForgingStateFactory final : public StateFactory {
 public:
  ForgingStateFactory(std::optional<ForgedState> boxes, std::optional<ForgedState> indexes)
      : boxes_(std::move(boxes)), indexes_(std::move(indexes)) {}
  QuditRegister ballot_box(std::size_t n, std::size_t m) override;
  QuditRegister ballot_index(std::size_t n) override;

 private:
  std::optional<ForgedState> boxes_;
  std::optional<ForgedState> indexes_;
};

/// How particles and publications travel between session parties. The
/// direct transport moves ownership in the store immediately; the consensus
/// engine routes both through the simulated network.
class SessionTransport {
 public:
  virtual ~SessionTransport() = default;
  virtual void send_particles(NodeId from, NodeId to, std::span<const ParticleHandle> particles) = 0;
  virtual void publish(NodeId from, std::string_view topic, const nlohmann::json& payload) = 0;
};

class DirectTransport final : public SessionTransport {
 public:
  explicit DirectTransport(QuantumStore& store) : store_(store) {}
  void send_particles(NodeId from, NodeId to, std::span<const ParticleHandle> particles) override;
  void publish(NodeId, std::string_view, const nlohmann::json&) override { ++publications_; }
  std::size_t publications() const { return publications_; }

 private:
  QuantumStore& store_;
  std::size_t publications_ = 0;
};

struct SessionConfig {
  std::size_t m = 2;
  std::size_t delta0 = 1;
  std::size_t delta1 = 1;
  /// Size of the full electorate for the N_0 > electorate/2 rule; 0 means
  /// the number of participating voters.
  std::size_t electorate = 0;
};

/// One run of the three-step voting protocol among `voters`, prepared by
/// `bookkeeper`. Owns the registers it creates and releases them on
/// destruction.
class VotingSession {
 public:
  VotingSession(SessionConfig config, std::vector<NodeId> voters, NodeId bookkeeper,
                QuantumStore& store, OutcomeSampler& sampler, Entropy choices,
                SessionTransport& transport);
  ~VotingSession();
  VotingSession(const VotingSession&) = delete;
  VotingSession& operator=(const VotingSession&) = delete;

  void distribute_ballot_boxes(StateFactory& factory);
  /// Voters test in ascending id order. `forced`, when given, fixes each
  /// tester's rows and bases (verification runs only). On failure the phase
  /// becomes Aborted and the returned list ends with the failing record.
  std::vector<SecurityTestRecord> run_box_security_tests(
      const std::vector<TestChoice>* forced = nullptr);
  BallotMatrix measure_ballots();

  void distribute_ballot_indexes(StateFactory& factory);
  std::vector<SecurityTestRecord> run_index_security_tests(
      const std::vector<TestChoice>* forced = nullptr);
  IndexVector measure_indexes();

  void cast_vote(std::size_t voter, std::size_t vote);
  /// Requires every voter to have cast; returns the published r'.
  const BallotMatrix& published_ballots() const;
  TallyResult publish_and_tally();

  SessionPhase phase() const { return phase_; }
  bool aborted() const { return phase_ == SessionPhase::Aborted; }
  std::size_t voter_count() const { return voters_.size(); }
  const std::vector<NodeId>& voters() const { return voters_; }
  const SessionConfig& config() const { return config_; }

  /// Register ids of every ballot-box / index copy in row order.
  const std::vector<RegisterId>& box_rows() const { return box_rows_; }
  const std::vector<RegisterId>& index_rows() const { return index_rows_; }
  /// Rows not yet consumed by security tests.
  const std::vector<std::size_t>& surviving_box_rows() const { return box_alive_; }
  const std::vector<std::size_t>& surviving_index_rows() const { return index_alive_; }
  const BallotMatrix& ballots() const { return ballots_; }
  const IndexVector& indexes() const { return indexes_; }

 private:
  std::vector<RegisterId> distribute(StateFactory& factory, bool boxes, std::size_t copies);
  std::vector<SecurityTestRecord> run_tests(bool boxes, const std::vector<TestChoice>* forced);
  bool row_check(bool boxes, Basis basis, const std::vector<std::size_t>& outcomes) const;
  void require(SessionPhase expected, const char* op) const;

  SessionConfig config_;
  std::vector<NodeId> voters_;
  NodeId bookkeeper_;
  QuantumStore& store_;
  OutcomeSampler& sampler_;
  Entropy choices_;
  SessionTransport& transport_;

  SessionPhase phase_ = SessionPhase::Setup;
  std::vector<RegisterId> box_rows_;
  std::vector<RegisterId> index_rows_;
  std::vector<std::size_t> box_alive_;
  std::vector<std::size_t> index_alive_;
  BallotMatrix ballots_;
  bool ballots_measured_ = false;
  IndexVector indexes_;
  bool indexes_measured_ = false;
  BallotMatrix cast_;
  std::vector<bool> has_cast_;
};

/// Born-rule probability that one security-test row of `state` passes in
/// `basis`: digit sum 0 mod m (boxes) or a permutation (indexes) in the
/// computational basis; all-equal outcomes (boxes) or a permutation
/// (indexes) in the Fourier basis.
double row_pass_probability(const QuditRegister& state, bool boxes, Basis basis);

/// Probability that a full test round over `tested_rows` independent copies
/// of `state` detects tampering, with a fair coin per row for the basis.
double round_detection_probability(const QuditRegister& state, bool boxes, std::size_t tested_rows);

}  // namespace qpnv

#endif  // QPNV_VOTING_H
