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

#include "qpnv/consensus.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace qpnv {

namespace {

constexpr NodeId kCommitteeId = kBroadcast - 1;

bool contains(const std::vector<NodeId>& v, NodeId id) {
  return std::find(v.begin(), v.end(), id) != v.end();
}

}  // namespace

const char* role_name(Role role) {
  switch (role) {
    case Role::Voter: return "voter";
    case Role::Bookkeeper: return "bookkeeper";
    case Role::BookkeeperCandidate: return "candidate";
    case Role::OrdinaryUser: return "ordinary";
  }
  return "unknown";
}

Role parse_role(std::string_view name) {
  if (name == "voter") return Role::Voter;
  if (name == "bookkeeper") return Role::Bookkeeper;
  if (name == "candidate") return Role::BookkeeperCandidate;
  if (name == "ordinary") return Role::OrdinaryUser;
  throw std::invalid_argument("unknown role '" + std::string(name) + "'");
}

std::vector<std::string> RoleSet::names() const {
  std::vector<std::string> out;
  for (Role r : {Role::Voter, Role::Bookkeeper, Role::BookkeeperCandidate, Role::OrdinaryUser}) {
    if (has(r)) out.emplace_back(role_name(r));
  }
  return out;
}

bool roles_sound(const ConsensusNode& node) {
  const bool consensus_role = node.roles.has(Role::Voter) || node.roles.has(Role::Bookkeeper) ||
                              node.roles.has(Role::BookkeeperCandidate);
  if (consensus_role && !node.quantum_capable) return false;
  if (node.roles.has(Role::BookkeeperCandidate) && !node.can_prepare_entangled) return false;
  if (node.roles.has(Role::Bookkeeper) && !node.can_prepare_entangled) return false;
  return true;
}

bool QkdOracle::establish(ConsensusNode& a, ConsensusNode& b) {
  if (!a.quantum_capable || !b.quantum_capable) return false;
  SymmetricKey key{};
  for (std::size_t i = 0; i < key.size(); i += 8) {
    std::uint64_t word = stream_.next_u64();
    for (std::size_t j = 0; j < 8; ++j) key[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
  }
  a.shared_keys[b.id] = key;
  b.shared_keys[a.id] = key;
  return true;
}

AuthToken make_auth_token(const SymmetricKey& key, std::string message) {
  AuthToken token{std::move(message), {}};
  token.tag = hmac_sha256(key, token.message);
  return token;
}

bool verify_auth_token(const SymmetricKey& key, const AuthToken& token) {
  return tags_equal(hmac_sha256(key, token.message), token.tag);
}

std::string identity_message(const ConsensusNode& applicant) {
  return "identity;id=" + std::to_string(applicant.id) + ";name=" + applicant.name;
}

bool verify_identity(const ConsensusNode& member, NodeId applicant, const AuthToken& token) {
  auto it = member.shared_keys.find(applicant);
  if (it == member.shared_keys.end()) return false;
  return verify_auth_token(it->second, token);
}

bool authenticate_node(const ConsensusNode& applicant,
                       const std::vector<const ConsensusNode*>& committee) {
  if (committee.empty()) return false;
  for (const ConsensusNode* member : committee) {
    auto it = applicant.shared_keys.find(member->id);
    if (it == applicant.shared_keys.end()) return false;
    const AuthToken token = make_auth_token(it->second, identity_message(applicant));
    if (!verify_identity(*member, applicant.id, token)) return false;
  }
  return true;
}

TransitionVerdict apply_role_transition(ConsensusNode& node, Role from, Role to,
                                        bool authenticated, bool by_election) {
  auto deny = [](std::string reason) { return TransitionVerdict{false, std::move(reason)}; };
  if (node.is_qrng) return deny("QRNG devices take no roles");
  if (!node.roles.has(from)) return deny(std::string("node does not hold ") + role_name(from));

  const bool application = (from == Role::OrdinaryUser &&
                            (to == Role::Voter || to == Role::BookkeeperCandidate)) ||
                           (from == Role::Voter && to == Role::BookkeeperCandidate);
  if (application) {
    if (!node.quantum_capable) return deny("not connected to the quantum network");
    if (to == Role::BookkeeperCandidate && !node.can_prepare_entangled) {
      return deny("cannot prepare entangled states");
    }
    if (!authenticated) return deny("authentication failed");
    if (from == Role::OrdinaryUser) node.roles.remove(Role::OrdinaryUser);
    node.roles.add(to);
    return {true, "granted"};
  }
  if (from == Role::BookkeeperCandidate && to == Role::Bookkeeper) {
    if (!by_election) return deny("bookkeepers are chosen by election");
    if (!node.quantum_capable || !node.can_prepare_entangled) {
      return deny("bookkeepers must prepare entangled states");
    }
    node.roles.remove(Role::BookkeeperCandidate);
    node.roles.add(Role::Bookkeeper);
    return {true, "elected"};
  }
  if (from == Role::Bookkeeper && to == Role::BookkeeperCandidate) {
    node.roles.remove(Role::Bookkeeper);
    node.roles.add(Role::BookkeeperCandidate);
    return {true, "tenure ended"};
  }
  if (to == Role::OrdinaryUser && (from == Role::BookkeeperCandidate || from == Role::Voter)) {
    node.roles.remove(from);
    if (!node.roles.has(Role::Voter) && !node.roles.has(Role::Bookkeeper) &&
        !node.roles.has(Role::BookkeeperCandidate)) {
      node.roles.add(Role::OrdinaryUser);
    }
    return {true, from == Role::Voter ? "left" : "withdrew"};
  }
  return deny(std::string("no transition from ") + role_name(from) + " to " + role_name(to));
}

std::string random_message(std::uint64_t request_id, std::uint64_t value) {
  return "qrng;request=" + std::to_string(request_id) + ";value=" + std::to_string(value);
}

const QrngService::Issuance& QrngService::issue(NodeId requester) {
  const std::uint64_t value = stream_.below(std::uint64_t{1} << 32);
  issued_.push_back(Issuance{issued_.size() + 1, value, requester});
  return issued_.back();
}

std::optional<QrngService::Issuance> QrngService::lookup(std::uint64_t request_id) const {
  if (request_id == 0 || request_id > issued_.size()) return std::nullopt;
  return issued_[request_id - 1];
}

std::optional<AuthToken> QrngService::attest(std::uint64_t request_id, NodeId voter) const {
  const auto issuance = lookup(request_id);
  auto key = node_.shared_keys.find(voter);
  if (!issuance || key == node_.shared_keys.end()) return std::nullopt;
  return make_auth_token(key->second, random_message(issuance->request_id, issuance->value));
}

RandomCheck verify_random(const ConsensusNode& voter, NodeId qrng,
                          const std::optional<AuthToken>& attestation,
                          std::uint64_t claimed_value, std::uint64_t claimed_request_id) {
  if (!attestation) return {false, "no attestation"};
  auto key = voter.shared_keys.find(qrng);
  if (key == voter.shared_keys.end()) return {false, "no key shared with QRNG"};
  if (!verify_auth_token(key->second, *attestation)) return {false, "tag mismatch"};
  if (attestation->message != random_message(claimed_request_id, claimed_value)) {
    return {false, "value mismatch"};
  }
  if (claimed_request_id <= voter.last_random_request) return {false, "stale request id"};
  return {true, "verified"};
}

NodeId select_next_bookkeeper(std::uint64_t value, const std::vector<NodeId>& bookkeepers,
                              std::optional<NodeId> exclude) {
  if (bookkeepers.empty()) throw std::invalid_argument("empty bookkeeper set");
  if (exclude && bookkeepers.size() > 1 && contains(bookkeepers, *exclude)) {
    std::vector<NodeId> rest;
    for (NodeId b : bookkeepers) {
      if (b != *exclude) rest.push_back(b);
    }
    return rest[value % rest.size()];
  }
  return bookkeepers[value % bookkeepers.size()];
}

std::vector<NodeId> rank_candidates(const std::vector<NodeId>& candidates,
                                    const std::vector<std::size_t>& recommend_counts,
                                    const std::vector<std::uint64_t>& tie_keys) {
  if (candidates.size() != recommend_counts.size() || candidates.size() != tie_keys.size()) {
    throw std::invalid_argument("ranking inputs differ in length");
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (recommend_counts[a] != recommend_counts[b]) return recommend_counts[a] > recommend_counts[b];
    return tie_keys[a] < tie_keys[b];
  });
  std::vector<NodeId> ranking;
  for (std::size_t i : order) ranking.push_back(candidates[i]);
  return ranking;
}

std::vector<NodeSpec> default_roster(std::size_t n_voters, std::size_t bookkeepers) {
  std::vector<NodeSpec> roster;
  for (std::size_t i = 0; i < n_voters; ++i) {
    roster.push_back(NodeSpec{"V" + std::to_string(i), {Role::Voter}, true, true, false});
  }
  for (std::size_t i = 0; i < bookkeepers; ++i) {
    roster.push_back(NodeSpec{"B" + std::to_string(i), {Role::Bookkeeper}, true, true, false});
  }
  roster.push_back(NodeSpec{"Q0", {}, true, false, true});
  roster.push_back(NodeSpec{"U0", {Role::Voter}, false, false, false});
  return roster;
}

// Routes session particles and publications through the simulated network,
// running it to idle after each step (synchronous rounds).
class Consortium::NetworkTransport final : public SessionTransport {
 public:
  explicit NetworkTransport(Consortium& owner) : owner_(owner) {}

  void send_particles(NodeId from, NodeId to, std::span<const ParticleHandle> particles) override {
    Message m;
    m.sender = from;
    m.receiver = to;
    m.kind = MessageKind::ParticleTransfer;
    m.topic = "particles";
    m.particles.assign(particles.begin(), particles.end());
    owner_.network_->send(std::move(m));
    owner_.network_->run_until_idle();
  }

  void publish(NodeId from, std::string_view topic, const nlohmann::json& payload) override {
    Message m;
    m.sender = from;
    m.receiver = kBroadcast;
    m.kind = MessageKind::Publication;
    m.topic = std::string(topic);
    m.payload = payload;
    owner_.network_->send(std::move(m));
    owner_.network_->run_until_idle();
  }

 private:
  Consortium& owner_;
};

Consortium::Consortium(ConsensusConfig config, EventLog& log)
    : config_(std::move(config)),
      log_(log),
      root_(config_.seed),
      tx_stream_(root_.split("transactions")),
      choice_stream_(root_.split("test-choices")),
      schedule_(config_.theta1) {
  setup();
}

Consortium::~Consortium() = default;

std::string Consortium::actor(NodeId id) const {
  if (id == kCommitteeId) return "committee";
  return id < nodes_.size() ? nodes_[id].name : "n" + std::to_string(id);
}

void Consortium::log(std::string actor_name, std::string kind, nlohmann::json data) {
  log_.append(network_ ? network_->now() : 0, std::move(actor_name), std::move(kind),
              std::move(data));
}

ConsensusNode& Consortium::node(NodeId id) { return nodes_.at(id); }
const ConsensusNode& Consortium::node(NodeId id) const { return nodes_.at(id); }

const Ledger& Consortium::ledger(NodeId id) const { return ledgers_.at(id); }
Ledger& Consortium::mutable_ledger(NodeId id) { return ledgers_.at(id); }

void Consortium::setup() {
  std::vector<NodeSpec> roster =
      config_.roster.empty() ? default_roster(config_.n_voters, config_.bookkeepers) : config_.roster;
  if (config_.m < 2) throw std::invalid_argument("m must be at least 2");

  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    ConsensusNode n;
    n.id = static_cast<NodeId>(i);
    n.name = roster[i].name;
    n.quantum_capable = roster[i].quantum_capable;
    n.can_prepare_entangled = roster[i].can_prepare_entangled;
    n.is_qrng = roster[i].is_qrng;
    if (!n.is_qrng) n.roles.add(Role::OrdinaryUser);
    nodes_.push_back(std::move(n));
    ids.push_back(static_cast<NodeId>(i));
  }
  auto qrng_it = std::find_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_qrng; });
  if (qrng_it == nodes_.end()) throw std::invalid_argument("roster needs a QRNG node");
  qrng_id_ = qrng_it->id;
  config_.adversary.validate(ids);

  store_ = std::make_unique<QuantumStore>();
  network_ = std::make_unique<SimNetwork>(ids, log_, store_.get());
  sampler_ = std::make_unique<BornSampler>(root_.split("measurement"));
  qkd_ = std::make_unique<QkdOracle>(root_.split("qkd"));
  qrng_ = std::make_unique<QrngService>(nodes_[qrng_id_], root_.split("qrng"));

  committee_.id = kCommitteeId;
  committee_.name = "committee";
  committee_.quantum_capable = true;

  nlohmann::json roster_json = nlohmann::json::array();
  for (std::size_t i = 0; i < roster.size(); ++i) {
    roster_json.push_back({{"id", i},
                           {"name", roster[i].name},
                           {"applies", roster[i].roles.names()},
                           {"quantum", roster[i].quantum_capable},
                           {"entangled", roster[i].can_prepare_entangled},
                           {"qrng", roster[i].is_qrng}});
  }
  log("sim", "config",
      {{"seed", config_.seed},
       {"N_B", config_.bookkeepers},
       {"rotations_per_tenure", config_.rotations_per_tenure},
       {"tenures", config_.tenures},
       {"m", config_.m},
       {"delta0", config_.delta0},
       {"delta1", config_.delta1},
       {"theta1", config_.theta1},
       {"layout", HyperedgeLayout::kind_name(config_.layout.kind)},
       {"layout_weight", config_.layout.weight},
       {"roster", roster_json}});

  // Admission: QKD link to the committee, authentication, then the role
  // applications each node asked for.
  for (std::size_t i = 0; i < roster.size(); ++i) {
    ConsensusNode& n = nodes_[i];
    if (n.is_qrng || roster[i].roles.empty()) continue;
    const bool key = qkd_->establish(n, committee_);
    log(n.name, "qkd_key", {{"peer", "committee"}, {"ok", key}});
    const bool auth = authenticate_node(n, {&committee_});
    log(n.name, "auth", {{"node", n.id}, {"ok", auth}});
    for (Role r : {Role::Voter, Role::BookkeeperCandidate, Role::Bookkeeper}) {
      if (!roster[i].roles.has(r)) continue;
      TransitionVerdict v;
      if (r == Role::Bookkeeper) {
        // Genesis bookkeepers are seated by the founding configuration.
        v = apply_role_transition(n, Role::OrdinaryUser, Role::BookkeeperCandidate, auth);
        if (v.granted) v = apply_role_transition(n, Role::BookkeeperCandidate, Role::Bookkeeper, auth, true);
      } else {
        const Role from = n.roles.has(Role::OrdinaryUser) ? Role::OrdinaryUser : Role::Voter;
        v = apply_role_transition(n, from, r, auth);
      }
      log(n.name, "role",
          {{"target", role_name(r)}, {"granted", v.granted}, {"reason", v.reason}, {"roles", n.roles.names()}});
    }
  }

  for (const ConsensusNode& n : nodes_) {
    if (n.roles.has(Role::Voter)) voter_ids_.push_back(n.id);
    if (n.roles.has(Role::Bookkeeper)) tenure_.bookkeepers.push_back(n.id);
  }
  if (voter_ids_.size() < 2) throw std::invalid_argument("need at least two admitted voters");
  if (tenure_.bookkeepers.empty()) throw std::invalid_argument("need at least one bookkeeper");
  for (NodeId v : voter_ids_) {
    const bool ok = qkd_->establish(nodes_[v], nodes_[qrng_id_]);
    log(nodes_[v].name, "qkd_key", {{"peer", nodes_[qrng_id_].name}, {"ok", ok}});
  }
  for (const ConsensusNode& n : nodes_) {
    if (chain_node(n)) ledgers_.emplace(n.id, Ledger(schedule_, config_.layout));
  }
  tenure_.rotations_per_tenure = config_.rotations_per_tenure;
  log("sim", "admitted",
      {{"voters", voter_ids_}, {"bookkeepers", tenure_.bookkeepers}, {"qrng", qrng_id_}});

  const auto& genesis = qrng_->issue(kCommitteeId);
  log(nodes_[qrng_id_].name, "qrng_issue",
      {{"request", genesis.request_id}, {"value", genesis.value}, {"requester", "committee"}});
  rotating_ = select_next_bookkeeper(genesis.value, tenure_.bookkeepers);
  log("committee", "bookkeeper_selected",
      {{"value", genesis.value}, {"next", rotating_}, {"set", tenure_.bookkeepers}, {"request", genesis.request_id}});
}

void Consortium::inject(const AdversaryAction& action) {
  if (action.kind == AdversaryAction::Kind::TamperBlockPhase) {
    log("adversary", "adversary", adversary_to_json(action));
    for (auto& [id, ledger] : ledgers_) {
      if (action.height == 0 || action.height >= ledger.next_height()) {
        log(actor(id), "tamper_skipped", {{"height", action.height}});
        continue;
      }
      ChainState& seg = ledger.segment_of(action.height);
      const std::size_t position =
          static_cast<std::size_t>(action.height - seg.blocks().front().height) + 1;
      seg.tamper_register_phase(position, action.delta);
    }
    return;
  }
  apply_adversary(*network_, action);
}

void Consortium::fire_adversary_actions() {
  bool healed = false;
  for (const AdversaryAction& a : config_.adversary.actions) {
    if (a.kind == AdversaryAction::Kind::Partition && a.at_rotation + a.duration == rotation_) {
      network_->heal();
      healed = true;
    }
    if (a.kind == AdversaryAction::Kind::DropMessages && a.at_rotation + a.duration == rotation_) {
      network_->clear_drop_filters();
      for (const auto* still : config_.adversary.active(rotation_, AdversaryAction::Kind::DropMessages)) {
        network_->add_drop_filter(still->filter);
      }
      log("adversary", "adversary_expired", adversary_to_json(a));
    }
  }
  if (healed) sync_lagging_ledgers();
  for (const AdversaryAction& a : config_.adversary.actions) {
    if (a.at_rotation != rotation_) continue;
    if (a.kind == AdversaryAction::Kind::Partition || a.kind == AdversaryAction::Kind::DropMessages ||
        a.kind == AdversaryAction::Kind::TamperBlockPhase) {
      inject(a);
    } else {
      log("adversary", "adversary", adversary_to_json(a));
    }
  }
}

void Consortium::sync_lagging_ledgers() {
  NodeId longest = ledgers_.begin()->first;
  for (const auto& [id, l] : ledgers_) {
    if (l.size() > ledgers_.at(longest).size()) longest = id;
  }
  const std::vector<BlockRecord> source = ledgers_.at(longest).records();
  for (auto& [id, l] : ledgers_) {
    if (l.size() >= source.size()) continue;
    const std::uint64_t from = l.next_height();
    for (std::size_t i = l.size(); i < source.size(); ++i) {
      QuantumBlock copy{source[i], new_plus_qubit()};
      apply_phase(copy.qubit, 0, source[i].theta);
      l.append_block(std::move(copy));
      nodes_[id].last_random_request =
          std::max(nodes_[id].last_random_request, source[i].random_request_id);
    }
    log(actor(id), "sync", {{"from_height", from}, {"to_height", source.size()}, {"source", actor(longest)}});
  }
}

std::optional<TallyResult> Consortium::vote(NodeId proposer, const std::vector<NodeId>& participants,
                                            const std::vector<std::size_t>& votes,
                                            const std::string& purpose, std::size_t& aborts) {
  std::optional<ForgedState> forged_boxes;
  std::optional<ForgedState> forged_indexes;
  for (const auto* a : config_.adversary.active(rotation_, AdversaryAction::Kind::ForgeBallotState)) {
    forged_boxes = a->forged;
  }
  for (const auto* a : config_.adversary.active(rotation_, AdversaryAction::Kind::ForgeIndexState)) {
    forged_indexes = a->forged;
  }
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    const std::uint64_t session = ++session_counter_;
    log(actor(proposer), "session_start",
        {{"session", session}, {"purpose", purpose}, {"participants", participants}, {"attempt", attempt},
         {"forged_boxes", forged_boxes.has_value()}, {"forged_indexes", forged_indexes.has_value()}});
    HonestStateFactory honest;
    ForgingStateFactory forging(forged_boxes, forged_indexes);
    StateFactory& factory = (forged_boxes || forged_indexes) ? static_cast<StateFactory&>(forging)
                                                             : static_cast<StateFactory&>(honest);
    NetworkTransport transport(*this);
    SessionConfig sc{config_.m, config_.delta0, config_.delta1, voter_ids_.size()};
    VotingSession s(sc, participants, proposer, *store_, *sampler_,
                    choice_stream_.split("session", session), transport);
    try {
      s.distribute_ballot_boxes(factory);
      auto box_tests = s.run_box_security_tests();
      if (!s.aborted()) {
        s.measure_ballots();
        s.distribute_ballot_indexes(factory);
        auto index_tests = s.run_index_security_tests();
        if (s.aborted()) box_tests = std::move(index_tests);
      }
      if (s.aborted()) {
        ++aborts;
        const SecurityTestRecord& failed = box_tests.back();
        log(actor(proposer), "session_aborted",
            {{"session", session}, {"purpose", purpose}, {"bookkeeper", proposer},
             {"stage", s.box_rows().empty() || s.index_rows().empty() ? "ballot_boxes" : "ballot_indexes"},
             {"tester", participants[failed.tester]}, {"row", failed.failing_row.value_or(0)}});
        continue;
      }
      s.measure_indexes();
      for (std::size_t k = 0; k < participants.size(); ++k) s.cast_vote(k, votes.at(k));
      const TallyResult result = s.publish_and_tally();
      for (NodeId v : participants) {
        const SelfTallyCheck check = self_tally_verify(s.published_ballots(), result);
        log(actor(v), "self_tally", {{"session", session}, {"matches", check.matches}});
      }
      log(actor(proposer), "session_result",
          {{"session", session}, {"purpose", purpose}, {"R", result.row_sums}, {"N", result.counts},
           {"electorate", result.electorate}, {"accepted", result.accepted}});
      return result;
    } catch (const OwnershipError& e) {
      ++aborts;
      log(actor(proposer), "session_aborted",
          {{"session", session}, {"purpose", purpose}, {"bookkeeper", proposer}, {"stage", "transfer"},
           {"reason", e.what()}});
    }
  }
  return std::nullopt;
}

CycleOutcome Consortium::run_cycle_in_group(NodeId proposer, const std::vector<NodeId>& group,
                                            bool special, const ElectionOutcome* election) {
  CycleOutcome out;
  out.proposer = proposer;
  out.group = group;
  Ledger& own = ledgers_.at(proposer);
  const std::uint64_t height = own.next_height();
  const std::size_t position = own.next_position();
  auto reject = [&](std::string reason) {
    out.reason = reason;
    log(actor(proposer), "block_rejected", {{"height", height}, {"reason", reason}, {"group", group}});
    return out;
  };

  // Random value for the next rotating bookkeeper.
  const auto impersonations = config_.adversary.active(rotation_, AdversaryAction::Kind::ImpersonateQrng);
  std::uint64_t value = 0;
  std::uint64_t request = 0;
  if (!impersonations.empty()) {
    value = impersonations.back()->value;
    request = qrng_->next_request_id() + 1'000'000;
    log(actor(proposer), "impersonate_qrng", {{"value", value}, {"request", request}});
  } else {
    if (!network_->connected(proposer, qrng_id_)) return reject("qrng_unreachable");
    network_->send(Message{proposer, qrng_id_, MessageKind::ClassicalData, "random_request", {}, {}, 0, 0});
    network_->run_until_idle();
    const auto& issued = qrng_->issue(proposer);
    value = issued.value;
    request = issued.request_id;
    log(nodes_[qrng_id_].name, "qrng_issue",
        {{"request", request}, {"value", value}, {"requester", proposer}});
    network_->send(Message{qrng_id_, proposer, MessageKind::ClassicalData, "random_response",
                           {{"request", request}, {"value", value}}, {}, 0, 0});
    network_->run_until_idle();
  }
  const std::vector<NodeId>& next_set = special ? election->elected : tenure_.bookkeepers;
  const std::optional<NodeId> exclude =
      config_.allow_reselect ? std::nullopt : std::optional<NodeId>(proposer);
  const NodeId next = select_next_bookkeeper(value, next_set, exclude);

  // Assemble and encode.
  std::vector<std::string> txs;
  QuantumBlock block = [&] {
    if (special) {
      return make_special_block(election->ranking, config_.bookkeepers, height, position, schedule_);
    }
    Entropy txs_rng = tx_stream_.split("block", height * 1000 + rotation_);
    for (std::size_t i = 0; i < config_.transactions_per_block; ++i) {
      txs.push_back("tx;height=" + std::to_string(height) + ";i=" + std::to_string(i) +
                    ";nonce=" + std::to_string(txs_rng.next_u64()));
    }
    return encode_block(digest_transactions(txs), height, schedule_, position);
  }();
  BlockRecord& rec = block.record;
  rec.tenure = tenure_.index;
  rec.proposer = proposer;
  rec.next_bookkeeper = next;
  rec.random_value = value;
  rec.random_request_id = request;
  rec.timestamp = network_->now();

  nlohmann::json proposal = block_to_json(rec);
  proposal["transactions"] = txs;
  log(actor(proposer), "proposal",
      {{"height", height}, {"kind", block_kind_name(rec.kind)}, {"rotation", rotation_}, {"group", group}});
  network_->send(Message{proposer, kBroadcast, MessageKind::ClassicalData, "block_proposal", proposal, {}, 0, 0});
  std::vector<NodeId> participants;
  for (const Delivery& d : network_->run_until_idle()) {
    if (d.message->topic == "block_proposal" && contains(voter_ids_, d.receiver)) {
      participants.push_back(d.receiver);
    }
  }
  std::sort(participants.begin(), participants.end());

  if (!impersonations.empty()) {
    // The impersonator cannot produce a QRNG tag; it sends a guessed one.
    Entropy forger = root_.split("forged-tag", rotation_);
    Digest fake{};
    for (auto& b : fake) b = static_cast<std::uint8_t>(forger.below(256));
    network_->send(Message{proposer, kBroadcast, MessageKind::ClassicalData, "random_attestation",
                           {{"request", request}, {"message", random_message(request, value)},
                            {"tag", to_hex(fake)}},
                           {}, 0, 0});
    network_->run_until_idle();
  }

  // Each voter checks the proposal, verifying the random value with the QRNG.
  std::vector<std::size_t> votes;
  for (NodeId v : participants) {
    ConsensusNode& voter = nodes_[v];
    bool tx_ok = true;
    if (special) {
      tx_ok = rec.payload_digest == election_digest(election->ranking, config_.bookkeepers);
    } else {
      tx_ok = std::all_of(txs.begin(), txs.end(), [](const std::string& t) { return !t.empty(); }) &&
              digest_transactions(txs) == rec.payload_digest;
    }
    const bool theta_ok = ledgers_.at(v).next_height() == height && ledgers_.at(v).validate_theta(rec).valid();
    const bool next_ok = select_next_bookkeeper(value, next_set, exclude) == rec.next_bookkeeper;

    std::optional<AuthToken> attestation;
    if (impersonations.empty()) {
      network_->send(Message{v, qrng_id_, MessageKind::ClassicalData, "random_verify_request",
                             {{"request", request}}, {}, 0, 0});
      network_->run_until_idle();
      attestation = qrng_->attest(request, v);
      nlohmann::json reply{{"request", request}};
      if (attestation) {
        reply["message"] = attestation->message;
        reply["tag"] = to_hex(attestation->tag);
      } else {
        reply["unknown"] = true;
      }
      network_->send(Message{qrng_id_, v, MessageKind::ClassicalData, "random_attestation", reply, {}, 0, 0});
      network_->run_until_idle();
    } else {
      // Only the spoofed attestation reaches the voter.
      Entropy forger = root_.split("forged-tag", rotation_);
      Digest fake{};
      for (auto& b : fake) b = static_cast<std::uint8_t>(forger.below(256));
      attestation = AuthToken{random_message(request, value), fake};
    }
    const RandomCheck random = verify_random(voter, qrng_id_, attestation, value, request);
    log(voter.name, "random_verify", {{"request", request}, {"ok", random.ok}, {"reason", random.reason},
                                      {"height", height}});
    const bool ok = tx_ok && theta_ok && next_ok && random.ok;
    log(voter.name, "block_check",
        {{"height", height}, {"transactions", tx_ok}, {"theta", theta_ok}, {"next_bookkeeper", next_ok},
         {"random", random.ok}, {"valid", ok}});
    std::size_t vote_value = ok ? 0 : 1;
    if (!special && !config_.votes.empty()) {
      const auto idx = static_cast<std::size_t>(
          std::find(voter_ids_.begin(), voter_ids_.end(), v) - voter_ids_.begin());
      vote_value = config_.votes.at(idx);
    }
    votes.push_back(vote_value);
  }

  if (participants.size() < 2) return reject("insufficient_voters");
  const auto tally = vote(proposer, participants, votes, special ? "special_block" : "block", out.aborts);
  if (!tally) return reject("voting_aborted");
  out.tally = tally;
  if (!tally->accepted) return reject("tally_rejected");

  rec.vote_summary = *tally;
  network_->send(Message{proposer, kBroadcast, MessageKind::ClassicalData, "block_final", block_to_json(rec), {}, 0, 0});
  std::vector<NodeId> receivers{proposer};
  for (const Delivery& d : network_->run_until_idle()) {
    if (d.message->topic == "block_final") receivers.push_back(d.receiver);
  }
  std::sort(receivers.begin(), receivers.end());
  for (NodeId r : receivers) {
    if (!chain_node(nodes_[r])) continue;
    Ledger& l = ledgers_.at(r);
    if (l.next_height() != height || !l.validate_theta(rec).valid()) {
      log(actor(r), "append_skipped", {{"height", height}, {"local_next", l.next_height()}});
      continue;
    }
    l.append_block(QuantumBlock{rec, block.qubit.clone_known_state()});
    nodes_[r].last_random_request = std::max(nodes_[r].last_random_request, request);
  }
  ++finalized_;
  log(actor(proposer), "block_finalized", {{"block", block_to_json(rec)}, {"group", group}, {"rotation", rotation_}});
  if (config_.verify_every_block) {
    for (NodeId r : receivers) {
      if (!chain_node(nodes_[r])) continue;
      const ChainVerdict v = ledgers_.at(r).verify();
      log(actor(r), "chain_verified", {{"node", r}, {"fidelity", v.fidelity}, {"ok", v.ok}, {"height", height}});
    }
  }
  out.finalized = true;
  out.block = rec;
  return out;
}

std::vector<CycleOutcome> Consortium::run_rotation_cycle() {
  ++rotation_;
  ++tenure_.rotation_index;
  fire_adversary_actions();
  log("sim", "rotation_start",
      {{"rotation", rotation_}, {"tenure", tenure_.index}, {"rotating", rotating_},
       {"partitioned", network_->partitioned()}});

  std::vector<CycleOutcome> outcomes;
  std::optional<NodeId> next_rotating;
  for (const auto& group : network_->groups()) {
    std::optional<NodeId> proposer;
    if (contains(group, rotating_)) {
      proposer = rotating_;
    } else {
      for (NodeId b : tenure_.bookkeepers) {
        if (contains(group, b)) {
          proposer = b;
          break;
        }
      }
      if (proposer) log(actor(*proposer), "fallback_proposer", {{"group", group}});
    }
    if (!proposer) {
      log("sim", "no_proposer", {{"group", group}});
      continue;
    }
    CycleOutcome out = run_cycle_in_group(*proposer, group, false, nullptr);
    if (out.finalized) {
      if (next_rotating) throw std::logic_error("two blocks finalized in one rotation");
      next_rotating = out.block->next_bookkeeper;
    }
    outcomes.push_back(std::move(out));
  }
  if (next_rotating) rotating_ = *next_rotating;
  network_->advance();
  return outcomes;
}

ElectionOutcome Consortium::run_election() {
  ElectionOutcome result;
  ++rotation_;
  fire_adversary_actions();
  log("sim", "election_start", {{"tenure", tenure_.index}, {"rotation", rotation_}, {"rotating", rotating_}});

  for (NodeId b : tenure_.bookkeepers) {
    const TransitionVerdict v = apply_role_transition(nodes_[b], Role::Bookkeeper, Role::BookkeeperCandidate, true);
    log(actor(b), "role", {{"target", "candidate"}, {"granted", v.granted}, {"reason", v.reason},
                           {"roles", nodes_[b].roles.names()}});
  }
  for (const ConsensusNode& n : nodes_) {
    if (n.roles.has(Role::BookkeeperCandidate)) result.candidates.push_back(n.id);
  }
  if (result.candidates.empty()) {
    log("sim", "election_failed", {{"reason", "no candidates"}});
    return result;
  }

  const NodeId proposer = rotating_;
  std::vector<NodeId> participants;
  for (NodeId v : voter_ids_) {
    if (network_->connected(proposer, v)) participants.push_back(v);
  }
  std::vector<std::uint64_t> tie_keys;
  for (NodeId c : result.candidates) {
    std::vector<std::size_t> votes;
    for (std::size_t k = 0; k < participants.size(); ++k) votes.push_back(roles_sound(nodes_[c]) ? 0 : 1);
    std::size_t aborts = 0;
    std::optional<TallyResult> tally;
    if (participants.size() >= 2) {
      tally = vote(proposer, participants, votes, "election:" + nodes_[c].name, aborts);
    }
    result.recommend_counts.push_back(tally ? tally->approvals() : 0);
    const auto& draw = qrng_->issue(proposer);
    log(nodes_[qrng_id_].name, "qrng_issue",
        {{"request", draw.request_id}, {"value", draw.value}, {"requester", proposer}, {"purpose", "tiebreak"}});
    tie_keys.push_back(draw.value);
  }
  result.ranking = rank_candidates(result.candidates, result.recommend_counts, tie_keys);
  const std::size_t seats = std::min(config_.bookkeepers, result.ranking.size());
  result.elected.assign(result.ranking.begin(), result.ranking.begin() + static_cast<std::ptrdiff_t>(seats));
  result.shortfall = result.ranking.size() < config_.bookkeepers;
  if (result.shortfall) {
    log("sim", "election_shortfall", {{"candidates", result.ranking.size()}, {"seats", config_.bookkeepers}});
  }
  for (NodeId e : result.elected) {
    const TransitionVerdict v = apply_role_transition(nodes_[e], Role::BookkeeperCandidate, Role::Bookkeeper, true, true);
    log(actor(e), "role", {{"target", "bookkeeper"}, {"granted", v.granted}, {"reason", v.reason},
                           {"roles", nodes_[e].roles.names()}});
  }
  log("sim", "election",
      {{"tenure", tenure_.index}, {"candidates", result.candidates}, {"recommend", result.recommend_counts},
       {"ranking", result.ranking}, {"elected", result.elected}});

  const auto group = network_->group_of(proposer);
  CycleOutcome special = run_cycle_in_group(proposer, group, true, &result);
  if (!special.finalized) log("sim", "special_block_missing", {{"tenure", tenure_.index}});

  tenure_.election_ranking = result.ranking;
  tenure_.bookkeepers = result.elected;
  tenure_.index += 1;
  tenure_.rotation_index = 0;
  rotating_ = special.finalized ? special.block->next_bookkeeper
                                : select_next_bookkeeper(tie_keys.front(), tenure_.bookkeepers);
  network_->advance();
  return result;
}

ChainVerdict Consortium::verify_all_chains() {
  ChainVerdict total{1.0, true};
  for (const auto& [id, l] : ledgers_) {
    const ChainVerdict v = l.verify();
    log(actor(id), "chain_verified", {{"node", id}, {"fidelity", v.fidelity}, {"ok", v.ok},
                                      {"height", l.next_height() - 1}});
    total.fidelity = std::min(total.fidelity, v.fidelity);
    total.ok = total.ok && v.ok;
  }
  return total;
}

void Consortium::run() {
  for (std::size_t t = 0; t < config_.tenures; ++t) {
    log("sim", "tenure_start", {{"tenure", tenure_.index}, {"bookkeepers", tenure_.bookkeepers}});
    for (std::size_t r = 0; r < config_.rotations_per_tenure; ++r) run_rotation_cycle();
    run_election();
    if (t + 1 == config_.tenures) break;
    // Intermediate tenures check only the segment they closed; the whole
    // chain is verified once at the end.
    for (const auto& [id, l] : ledgers_) {
      const auto& segments = l.segments();
      auto closed = std::find_if(segments.rbegin(), segments.rend(), [](const ChainState& c) {
        return !c.empty() && c.blocks().back().kind == BlockKind::Special;
      });
      if (closed == segments.rend()) continue;
      const ChainVerdict v = closed->verify();
      log(actor(id), "chain_verified", {{"node", id}, {"fidelity", v.fidelity}, {"ok", v.ok},
                                        {"height", closed->blocks().back().height}});
    }
  }
  verify_all_chains();
  log("sim", "run_complete", {{"rotations", rotation_}, {"finalized", finalized_}});
}

}  // namespace qpnv
