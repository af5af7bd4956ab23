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

#include <cmath>
#include <functional>

#include "doctest.h"
#include "oracles.h"
#include "qpnv/consensus.h"

namespace {

qpnv::ConsensusConfig small_config(std::uint64_t seed = 3) {
  qpnv::ConsensusConfig c;
  c.seed = seed;
  c.rotations_per_tenure = 3;
  return c;
}

std::size_t count_where(const qpnv::EventLog& log, const std::string& kind,
                        const std::function<bool(const nlohmann::json&)>& pred) {
  std::size_t n = 0;
  for (const auto& e : log.events()) n += e.kind == kind && pred(e.data);
  return n;
}

qpnv::ConsensusNode make_node(qpnv::NodeId id, bool quantum = true, bool entangled = true) {
  qpnv::ConsensusNode n;
  n.id = id;
  n.name = "N" + std::to_string(id);
  n.roles.add(qpnv::Role::OrdinaryUser);
  n.quantum_capable = quantum;
  n.can_prepare_entangled = entangled;
  return n;
}

}  // namespace

TEST_SUITE("consensus") {
  TEST_CASE("role transitions follow capabilities and authentication") {
    auto n = make_node(1);
    CHECK_FALSE(qpnv::apply_role_transition(n, qpnv::Role::OrdinaryUser, qpnv::Role::Voter, false).granted);
    CHECK(qpnv::apply_role_transition(n, qpnv::Role::OrdinaryUser, qpnv::Role::Voter, true).granted);
    CHECK(n.roles.has(qpnv::Role::Voter));
    CHECK_FALSE(n.roles.has(qpnv::Role::OrdinaryUser));
    CHECK(qpnv::apply_role_transition(n, qpnv::Role::Voter, qpnv::Role::BookkeeperCandidate, true).granted);
    CHECK_FALSE(
        qpnv::apply_role_transition(n, qpnv::Role::BookkeeperCandidate, qpnv::Role::Bookkeeper, true).granted);
    CHECK(qpnv::apply_role_transition(n, qpnv::Role::BookkeeperCandidate, qpnv::Role::Bookkeeper, true, true)
              .granted);
    CHECK(qpnv::roles_sound(n));

    auto classical = make_node(2, false, false);
    const auto v = qpnv::apply_role_transition(classical, qpnv::Role::OrdinaryUser, qpnv::Role::Voter, true);
    CHECK_FALSE(v.granted);
    CHECK(v.reason == "not connected to the quantum network");

    auto measure_only = make_node(3, true, false);
    CHECK_FALSE(qpnv::apply_role_transition(measure_only, qpnv::Role::OrdinaryUser,
                                            qpnv::Role::BookkeeperCandidate, true)
                    .granted);
  }

  TEST_CASE("QKD keys and authentication") {
    qpnv::QkdOracle qkd(qpnv::Entropy(1));
    auto a = make_node(1);
    auto b = make_node(2);
    auto c = make_node(3, false, false);
    CHECK(qkd.establish(a, b));
    CHECK(a.shared_keys.at(2) == b.shared_keys.at(1));
    CHECK_FALSE(qkd.establish(a, c));
    CHECK(qpnv::authenticate_node(a, {&b}));
    CHECK_FALSE(qpnv::authenticate_node(c, {&b}));

    auto token = qpnv::make_auth_token(a.shared_keys.at(2), "hello");
    CHECK(qpnv::verify_auth_token(b.shared_keys.at(1), token));
    token.message = "hellO";
    CHECK_FALSE(qpnv::verify_auth_token(b.shared_keys.at(1), token));
  }

  TEST_CASE("random value verification") {
    qpnv::QkdOracle qkd(qpnv::Entropy(2));
    auto qnode = make_node(9);
    qnode.is_qrng = true;
    auto voter = make_node(1);
    REQUIRE(qkd.establish(voter, qnode));
    qpnv::QrngService qrng(qnode, qpnv::Entropy(3));
    const auto issued = qrng.issue(5);
    CHECK(issued.request_id == 1);
    CHECK(issued.value < (std::uint64_t{1} << 32));
    const auto att = qrng.attest(1, voter.id);

    CHECK(qpnv::verify_random(voter, 9, att, issued.value, 1).ok);
    CHECK(qpnv::verify_random(voter, 9, std::nullopt, issued.value, 1).reason == "no attestation");
    CHECK(qpnv::verify_random(voter, 9, att, issued.value + 1, 1).reason == "value mismatch");
    auto forged = att;
    forged->message = qpnv::random_message(1, issued.value + 1);
    CHECK(qpnv::verify_random(voter, 9, forged, issued.value + 1, 1).reason == "tag mismatch");
    voter.last_random_request = 1;
    CHECK(qpnv::verify_random(voter, 9, att, issued.value, 1).reason == "stale request id");
    CHECK_FALSE(qrng.attest(2, voter.id).has_value());
  }

  TEST_CASE("bookkeeper selection and ranking") {
    const std::vector<qpnv::NodeId> set{4, 5, 6};
    CHECK(qpnv::select_next_bookkeeper(7, set) == 5);
    CHECK(qpnv::select_next_bookkeeper(7, set, 5) == 6);
    CHECK(qpnv::select_next_bookkeeper(7, {4}, 4) == 4);
    CHECK_THROWS_AS(qpnv::select_next_bookkeeper(1, {}), std::invalid_argument);
    CHECK(qpnv::rank_candidates({1, 2, 3}, {2, 4, 2}, {9, 0, 1}) == std::vector<qpnv::NodeId>{2, 3, 1});
    CHECK_THROWS_AS(qpnv::rank_candidates({1}, {1, 2}, {0}), std::invalid_argument);
  }

  TEST_CASE("honest tenure finalizes every rotation and the special block") {
    qpnv::EventLog log;
    qpnv::Consortium sim(small_config(), log);
    CHECK(sim.voters().size() == 4);  // the classical user is refused
    sim.run();
    CHECK(sim.finalized_blocks() == 4);
    for (const auto& n : sim.nodes()) {
      if (n.is_qrng) continue;
      const auto& ledger = sim.ledger(n.id);
      CHECK(ledger.size() == 4);
      const auto v = ledger.verify();
      CHECK(v.ok);
      CHECK(v.fidelity >= 1.0 - qpnv::kChainFidelityTolerance);
      CHECK(ledger.records().back().kind == qpnv::BlockKind::Special);
    }
    CHECK(count_where(log, "self_tally", [](const nlohmann::json& d) { return d.at("matches") == false; }) == 0);
    CHECK(count_where(log, "random_verify", [](const nlohmann::json& d) { return d.at("ok") == false; }) == 0);
  }

  TEST_CASE("impersonated random values are refused") {
    auto cfg = small_config(5);
    qpnv::AdversaryAction a;
    a.kind = qpnv::AdversaryAction::Kind::ImpersonateQrng;
    a.at_rotation = 2;
    a.value = 1;
    cfg.adversary.actions.push_back(a);
    qpnv::EventLog log;
    qpnv::Consortium sim(cfg, log);
    sim.run();
    CHECK(log.count("impersonate_qrng") == 1);
    CHECK(count_where(log, "random_verify", [](const nlohmann::json& d) { return d.at("ok") == false; }) ==
          sim.voters().size());
    CHECK(log.count("block_rejected") >= 1);
    CHECK(sim.verify_all_chains().ok);
  }

  TEST_CASE("tampering with a stored block phase is detected") {
    qpnv::EventLog log;
    qpnv::Consortium sim(small_config(), log);
    sim.run();
    qpnv::AdversaryAction t;
    t.kind = qpnv::AdversaryAction::Kind::TamperBlockPhase;
    t.height = 2;
    t.delta = 0.3;
    sim.inject(t);
    const auto v = sim.verify_all_chains();
    CHECK_FALSE(v.ok);
    CHECK(v.fidelity == doctest::Approx(oracle::single_phase_tamper_fidelity(0.3)).epsilon(1e-9));
  }

  TEST_CASE("forged ballot boxes abort sessions and trigger retries") {
    auto cfg = small_config(8);
    cfg.max_retries = 5;
    qpnv::AdversaryAction f;
    f.kind = qpnv::AdversaryAction::Kind::ForgeBallotState;
    f.at_rotation = 1;
    cfg.adversary.actions.push_back(f);
    qpnv::EventLog log;
    qpnv::Consortium sim(cfg, log);
    const auto first = sim.run_rotation_cycle();
    REQUIRE(first.size() == 1);
    CHECK(first[0].aborts >= 1);
    CHECK(log.count("session_aborted") == first[0].aborts);
    const auto second = sim.run_rotation_cycle();
    CHECK(second[0].aborts == 0);
    CHECK(second[0].finalized);
  }

  TEST_CASE("same seed, same log") {
    qpnv::EventLog a;
    qpnv::EventLog b;
    qpnv::Consortium(small_config(12), a).run();
    qpnv::Consortium(small_config(12), b).run();
    CHECK(a.to_jsonl() == b.to_jsonl());
    qpnv::EventLog c;
    qpnv::Consortium(small_config(13), c).run();
    CHECK(a.to_jsonl() != c.to_jsonl());
  }
}
