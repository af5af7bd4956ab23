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

#include "qpnv/golden.h"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "qpnv/crypto.h"

namespace qpnv {

namespace {

std::string show(const std::vector<std::size_t>& v) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  out << ')';
  return out.str();
}

std::string show(const BallotMatrix& r) {
  std::string out;
  for (const auto& row : r.entries) out += show(row);
  return out;
}

TestChoice computational(std::size_t row) { return TestChoice{{row}, {Basis::Computational}}; }

class NullTransport final : public SessionTransport {
 public:
  explicit NullTransport(QuantumStore& store) : direct_(store) {}
  void send_particles(NodeId from, NodeId to, std::span<const ParticleHandle> particles) override {
    direct_.send_particles(from, to, particles);
  }
  void publish(NodeId, std::string_view, const nlohmann::json&) override {}

 private:
  DirectTransport direct_;
};

}  // namespace

ExampleTranscript worked_example() {
  ExampleTranscript t;
  t.m = 2;
  t.box_outcomes = {{0, 1, 0, 1}, {1, 1, 0, 0}, {1, 0, 0, 1}, {0, 0, 1, 1},
                    {1, 1, 1, 1}, {1, 0, 1, 0}, {0, 1, 1, 0}, {0, 0, 0, 0}};
  t.index_outcomes = {{0, 1, 3, 2}, {1, 2, 3, 0}, {1, 0, 2, 3}, {3, 1, 0, 2}, {0, 3, 2, 1}};
  t.box_tests = {computational(4), computational(5), computational(6), computational(7)};
  t.index_tests = {computational(1), computational(2), computational(3), computational(4)};
  t.votes = {0, 0, 1, 0};

  t.expected_ballots = BallotMatrix{2, {{0, 1, 0, 1}, {1, 1, 0, 0}, {1, 0, 0, 1}, {0, 0, 1, 1}}};
  t.expected_indexes = {0, 1, 3, 2};
  t.expected_updated = BallotMatrix{2, {{0, 1, 0, 1}, {1, 1, 0, 0}, {1, 0, 0, 1}, {0, 0, 0, 1}}};
  t.expected_row_sums = {0, 0, 0, 1};
  t.expected_approvals = 3;
  t.expected_accepted = true;

  t.theta1 = std::numbers::pi / 8.0;
  t.expected_thetas = {std::numbers::pi / 8.0, std::numbers::pi / 16.0, std::numbers::pi / 32.0};
  return t;
}

GoldenVerdict verify_example(const ExampleTranscript& t, EventLog* log) {
  GoldenVerdict verdict;
  std::string current = "setup";
  std::uint64_t clock = 0;

  auto record = [&](const std::string& name, bool passed, std::string detail) {
    verdict.steps.push_back(GoldenStep{name, passed, detail});
    if (log != nullptr) {
      log->append(clock++, "verifier", "golden_step", {{"step", name}, {"passed", passed}, {"detail", detail}});
    }
    if (!passed && !verdict.failed_step) verdict.failed_step = name;
    return passed;
  };
  auto finish = [&]() {
    verdict.ok = !verdict.failed_step.has_value();
    if (log != nullptr) {
      log->append(clock++, "verifier", "golden_result",
                  {{"ok", verdict.ok}, {"failed_step", verdict.failed_step.value_or("")}});
    }
    return verdict;
  };

  const std::size_t n = t.box_tests.size();
  std::vector<NodeId> voters(n);
  std::iota(voters.begin(), voters.end(), NodeId{0});
  const NodeId bookkeeper = static_cast<NodeId>(n);
  const std::size_t delta0 = n == 0 ? 0 : t.box_outcomes.size() / n - 1;
  const std::size_t delta1 = n == 0 ? 0 : (t.index_outcomes.size() - 1) / n;

  try {
    QuantumStore store;
    ScriptedSampler sampler;
    NullTransport transport(store);
    SessionConfig config{t.m, delta0, delta1, 0};
    VotingSession session(config, voters, bookkeeper, store, sampler, Entropy(0), transport);
    HonestStateFactory factory;

    current = "box_distribution";
    session.distribute_ballot_boxes(factory);
    if (!record(current, session.box_rows().size() == t.box_outcomes.size(),
                std::to_string(session.box_rows().size()) + " copies")) {
      return finish();
    }
    for (std::size_t row = 0; row < t.box_outcomes.size(); ++row) {
      for (std::size_t k = 0; k < n; ++k) sampler.script(session.box_rows()[row], k, t.box_outcomes[row][k]);
    }

    current = "box_security_tests";
    const auto box_records = session.run_box_security_tests(&t.box_tests);
    for (const SecurityTestRecord& rec : box_records) {
      const std::size_t sum = std::accumulate(rec.outcomes.front().begin(), rec.outcomes.front().end(),
                                              std::size_t{0});
      const bool match = rec.outcomes.front() == t.box_outcomes[rec.rows.front()];
      if (!record("box_test_V" + std::to_string(rec.tester), rec.passed && match && sum % t.m == 0,
                  "row " + std::to_string(rec.rows.front()) + " " + show(rec.outcomes.front()) +
                      " sum mod " + std::to_string(t.m) + " = " + std::to_string(sum % t.m))) {
        return finish();
      }
    }

    current = "surviving_ballots";
    verdict.ballots = session.measure_ballots();
    if (!record(current, verdict.ballots == t.expected_ballots, show(verdict.ballots))) return finish();

    current = "index_distribution";
    session.distribute_ballot_indexes(factory);
    if (!record(current, session.index_rows().size() == t.index_outcomes.size(),
                std::to_string(session.index_rows().size()) + " copies")) {
      return finish();
    }
    for (std::size_t row = 0; row < t.index_outcomes.size(); ++row) {
      for (std::size_t k = 0; k < n; ++k) {
        sampler.script(session.index_rows()[row], k, t.index_outcomes[row][k]);
      }
    }

    current = "index_security_tests";
    const auto index_records = session.run_index_security_tests(&t.index_tests);
    for (const SecurityTestRecord& rec : index_records) {
      const bool match = rec.outcomes.front() == t.index_outcomes[rec.rows.front()];
      if (!record("index_test_V" + std::to_string(rec.tester),
                  rec.passed && match && is_permutation_of_range(rec.outcomes.front()),
                  "row " + std::to_string(rec.rows.front()) + " " + show(rec.outcomes.front()))) {
        return finish();
      }
    }

    current = "index_vector";
    verdict.indexes = session.measure_indexes();
    if (!record(current, verdict.indexes == t.expected_indexes, show(verdict.indexes))) return finish();

    current = "vote_casting";
    for (std::size_t k = 0; k < n; ++k) session.cast_vote(k, t.votes.at(k));
    verdict.updated = session.published_ballots();
    if (!record(current, verdict.updated == t.expected_updated, show(verdict.updated))) return finish();

    current = "tally";
    const TallyResult result = session.publish_and_tally();
    verdict.tally = result;
    if (!record("tally_row_sums", result.row_sums == t.expected_row_sums, "R = " + show(result.row_sums)) ||
        !record("tally_approvals", result.approvals() == t.expected_approvals,
                "N_0 = " + std::to_string(result.approvals())) ||
        !record("tally_acceptance", result.accepted == t.expected_accepted,
                result.accepted ? "accepted" : "rejected")) {
      return finish();
    }
    current = "self_tally";
    if (!record(current, self_tally_verify(verdict.updated, result).matches, "recomputed from r'")) {
      return finish();
    }

    current = "chain_thetas";
    ThetaSchedule schedule(t.theta1);
    ChainState chain(schedule, HyperedgeLayout{});
    for (std::size_t i = 0; i < t.expected_thetas.size(); ++i) {
      const std::vector<std::string> txs{"example-block-" + std::to_string(i + 1)};
      QuantumBlock block = encode_block(digest_transactions(txs), i + 1, schedule);
      block.record.vote_summary = result;
      const double theta = block.record.theta;
      if (!record("chain_theta_" + std::to_string(i + 1),
                  std::abs(theta - t.expected_thetas[i]) < 1e-15 && chain.validate_theta(block.record).valid(),
                  "theta = " + std::to_string(theta))) {
        return finish();
      }
      chain.append_block(std::move(block));
    }
    current = "chain_fidelity";
    verdict.chain = chain.verify();
    record(current, verdict.chain->ok, "fidelity = " + std::to_string(verdict.chain->fidelity));
  } catch (const std::exception& e) {
    record(current, false, e.what());
  }
  return finish();
}

}  // namespace qpnv
