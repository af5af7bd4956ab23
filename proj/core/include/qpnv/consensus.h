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

#ifndef QPNV_CONSENSUS_H
#define QPNV_CONSENSUS_H

#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qpnv/crypto.h"
#include "qpnv/entropy.h"
#include "qpnv/event_log.h"
#include "qpnv/ledger.h"
#include "qpnv/net.h"
#include "qpnv/qusim.h"
#include "qpnv/voting.h"

namespace qpnv {

enum class Role : std::uint8_t {
  Voter = 1,
  Bookkeeper = 2,
  BookkeeperCandidate = 4,
  OrdinaryUser = 8,
};

const char* role_name(Role role);
Role parse_role(std::string_view name);

class RoleSet {
 public:
  RoleSet() = default;
  RoleSet(std::initializer_list<Role> roles) {
    for (Role r : roles) add(r);
  }
  bool has(Role r) const { return (bits_ & static_cast<std::uint8_t>(r)) != 0; }
  void add(Role r) { bits_ |= static_cast<std::uint8_t>(r); }
  void remove(Role r) { bits_ &= static_cast<std::uint8_t>(~static_cast<std::uint8_t>(r)); }
  bool empty() const { return bits_ == 0; }
  std::vector<std::string> names() const;
  friend bool operator==(const RoleSet&, const RoleSet&) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct ConsensusNode {
  NodeId id = 0;
  std::string name;
  RoleSet roles;
  bool quantum_capable = false;
  bool can_prepare_entangled = false;
  bool is_qrng = false;
  std::map<NodeId, SymmetricKey> shared_keys;
  /// Highest QRNG request id this node has accepted in a block.
  std::uint64_t last_random_request = 0;
};

/// True when no consensus role is held without the capability it needs.
bool roles_sound(const ConsensusNode& node);

/// Out-of-band key installation standing in for a QKD link. Only nodes on
/// the quantum network can obtain a key.
class QkdOracle {
 public:
  explicit QkdOracle(Entropy stream) : stream_(std::move(stream)) {}
  /// Installs one fresh shared key in both nodes; false when either end is
  /// not quantum capable.
  bool establish(ConsensusNode& a, ConsensusNode& b);

 private:
  Entropy stream_;
};

/// Message plus a keyed tag over it.
struct AuthToken {
  std::string message;
  Digest tag{};
};

AuthToken make_auth_token(const SymmetricKey& key, std::string message);
bool verify_auth_token(const SymmetricKey& key, const AuthToken& token);

/// Identity check against the consortium committee: the applicant tags its
/// identity with the key shared with each member and every member
/// recomputes. Fails when any member lacks a key with the applicant.
bool authenticate_node(const ConsensusNode& applicant, const std::vector<const ConsensusNode*>& committee);
/// Committee-side check of a token the applicant presented.
bool verify_identity(const ConsensusNode& member, NodeId applicant, const AuthToken& token);
std::string identity_message(const ConsensusNode& applicant);

struct TransitionVerdict {
  bool granted = false;
  std::string reason;
};

/// Role transitions of the hybrid network model. Applications (into Voter
/// or BookkeeperCandidate) need authentication and the capability flags;
/// Bookkeeper is reached only by election and left only at tenure end.
/// `authenticated` carries the committee's authentication verdict.
TransitionVerdict apply_role_transition(ConsensusNode& node, Role from, Role to,
                                        bool authenticated, bool by_election = false);

/// Trusted entropy service. Every issued value is kept for audit and bound
/// to a monotonically increasing request id.
class QrngService {
 public:
  struct Issuance {
    std::uint64_t request_id = 0;
    std::uint64_t value = 0;
    NodeId requester = 0;
  };

  QrngService(ConsensusNode& node, Entropy stream) : node_(node), stream_(std::move(stream)) {}

  /// Value uniform in [0, 2^32).
  const Issuance& issue(NodeId requester);
  std::optional<Issuance> lookup(std::uint64_t request_id) const;
  /// Tag over (request id, value) under the key shared with `voter`; empty
  /// when the request id was never issued or no key is shared.
  std::optional<AuthToken> attest(std::uint64_t request_id, NodeId voter) const;
  const std::vector<Issuance>& issued() const { return issued_; }
  NodeId id() const { return node_.id; }
  std::uint64_t next_request_id() const { return issued_.size() + 1; }

 private:
  ConsensusNode& node_;
  Entropy stream_;
  std::vector<Issuance> issued_;
};

std::string random_message(std::uint64_t request_id, std::uint64_t value);

struct RandomCheck {
  bool ok = false;
  std::string reason;
};

/// Voter-side verification of the random value a block carries: the
/// attestation must carry a valid tag under the voter's QRNG key, name the
/// claimed value and request id, and the request id must be fresher than
/// any the voter accepted before.
RandomCheck verify_random(const ConsensusNode& voter, NodeId qrng,
                          const std::optional<AuthToken>& attestation,
                          std::uint64_t claimed_value, std::uint64_t claimed_request_id);

/// bookkeepers[value mod N_B]. With `exclude` set, the draw is over the set
/// without that node (unless it is the only bookkeeper).
NodeId select_next_bookkeeper(std::uint64_t value, const std::vector<NodeId>& bookkeepers,
                              std::optional<NodeId> exclude = std::nullopt);

struct TenureCycle {
  std::uint64_t index = 1;
  std::vector<NodeId> bookkeepers;
  std::size_t rotation_index = 0;
  std::size_t rotations_per_tenure = 4;
  std::vector<NodeId> election_ranking;
};

/// Ranks candidates by recommend count (descending); ties are ordered by
/// `tie_keys` (ascending), one fresh QRNG draw per candidate.
std::vector<NodeId> rank_candidates(const std::vector<NodeId>& candidates,
                                    const std::vector<std::size_t>& recommend_counts,
                                    const std::vector<std::uint64_t>& tie_keys);

struct NodeSpec {
  std::string name;
  RoleSet roles;  // roles the node applies for at start-up
  bool quantum_capable = true;
  bool can_prepare_entangled = true;
  bool is_qrng = false;
};

struct ConsensusConfig {
  std::size_t n_voters = 4;
  std::size_t bookkeepers = 3;  // N_B
  std::size_t rotations_per_tenure = 4;
  std::size_t tenures = 1;
  std::size_t m = 2;
  std::size_t delta0 = 1;
  std::size_t delta1 = 1;
  double theta1 = std::numbers::pi / 8.0;
  HyperedgeLayout layout;
  bool allow_reselect = true;
  std::size_t max_retries = 3;
  std::size_t transactions_per_block = 3;
  std::uint64_t seed = 1;
  /// Empty means the default roster (see default_roster()).
  std::vector<NodeSpec> roster;
  AdversaryPlan adversary;
  /// Scripted block-validation votes, one per voter; empty means voters
  /// vote on their own checks.
  std::vector<std::size_t> votes;
  /// Verify every node's chain after each block (always done at tenure end).
  bool verify_every_block = true;
};

/// Voters V0..V{n-1}, bookkeepers B0..B{N_B-1}, one QRNG and one ordinary
/// user without quantum connectivity that applies (and fails) to vote.
std::vector<NodeSpec> default_roster(std::size_t n_voters, std::size_t bookkeepers);

/// Outcome of one rotation cycle within one partition group.
struct CycleOutcome {
  NodeId proposer = 0;
  std::vector<NodeId> group;
  bool finalized = false;
  std::optional<BlockRecord> block;
  std::optional<TallyResult> tally;
  std::size_t aborts = 0;
  std::string reason;
};

struct ElectionOutcome {
  std::vector<NodeId> candidates;
  std::vector<std::size_t> recommend_counts;
  std::vector<NodeId> ranking;
  std::vector<NodeId> elected;
  bool shortfall = false;
};

/// Deterministic event-driven consortium. Every step is a reaction to
/// messages delivered by the simulated network in one global order, so a
/// (config, seed) pair always produces the same event log.
class Consortium {
 public:
  Consortium(ConsensusConfig config, EventLog& log);
  ~Consortium();
  Consortium(const Consortium&) = delete;
  Consortium& operator=(const Consortium&) = delete;

  /// One rotation cycle (per partition group holding a bookkeeper).
  std::vector<CycleOutcome> run_rotation_cycle();
  /// Election round closing the tenure: candidate sessions, ranking and
  /// the special block.
  ElectionOutcome run_election();
  /// Applies a single adversary action immediately, outside its schedule.
  void inject(const AdversaryAction& action);
  /// Runs config.tenures tenures of rotations_per_tenure cycles each.
  void run();

  const std::vector<ConsensusNode>& nodes() const { return nodes_; }
  ConsensusNode& node(NodeId id);
  const ConsensusNode& node(NodeId id) const;
  const Ledger& ledger(NodeId id) const;
  Ledger& mutable_ledger(NodeId id);
  const std::vector<NodeId>& voters() const { return voter_ids_; }
  NodeId qrng_id() const { return qrng_id_; }
  const QrngService& qrng() const { return *qrng_; }
  const TenureCycle& tenure() const { return tenure_; }
  NodeId rotating_bookkeeper() const { return rotating_; }
  SimNetwork& network() { return *network_; }
  const ConsensusConfig& config() const { return config_; }
  std::uint64_t rotation_count() const { return rotation_; }
  std::uint64_t finalized_blocks() const { return finalized_; }
  /// Minimum verification fidelity over every node's chain.
  ChainVerdict verify_all_chains();

 private:
  class NetworkTransport;

  void setup();
  void log(std::string actor, std::string kind, nlohmann::json data = nlohmann::json::object());
  std::string actor(NodeId id) const;
  void fire_adversary_actions();
  void sync_lagging_ledgers();
  CycleOutcome run_cycle_in_group(NodeId proposer, const std::vector<NodeId>& group,
                                  bool special, const ElectionOutcome* election);
  /// Runs one voting session with retries; empty on repeated abort.
  std::optional<TallyResult> vote(NodeId proposer, const std::vector<NodeId>& participants,
                                  const std::vector<std::size_t>& votes, const std::string& purpose,
                                  std::size_t& aborts);
  bool chain_node(const ConsensusNode& n) const { return !n.is_qrng; }

  ConsensusConfig config_;
  EventLog& log_;
  Entropy root_;
  Entropy tx_stream_;
  Entropy choice_stream_;
  std::vector<ConsensusNode> nodes_;
  std::vector<NodeId> voter_ids_;
  NodeId qrng_id_ = 0;
  ConsensusNode committee_;
  std::unique_ptr<QuantumStore> store_;
  std::unique_ptr<SimNetwork> network_;
  std::unique_ptr<BornSampler> sampler_;
  std::unique_ptr<QrngService> qrng_;
  std::unique_ptr<QkdOracle> qkd_;
  std::map<NodeId, Ledger> ledgers_;
  ThetaSchedule schedule_;
  TenureCycle tenure_;
  NodeId rotating_ = 0;
  std::uint64_t rotation_ = 0;
  std::uint64_t finalized_ = 0;
  std::uint64_t session_counter_ = 0;
};

}  // namespace qpnv

#endif  // QPNV_CONSENSUS_H
