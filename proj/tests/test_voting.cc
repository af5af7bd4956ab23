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

#include <map>

#include "doctest.h"
#include "oracles.h"
#include "qpnv/voting.h"

namespace {

struct Harness {
  qpnv::QuantumStore store;
  qpnv::BornSampler sampler;
  qpnv::DirectTransport transport{store};
  qpnv::VotingSession session;

  Harness(std::size_t n, std::uint64_t seed, qpnv::SessionConfig config = {})
      : sampler(qpnv::Entropy(seed)),
        session(config, voters(n), 100, store, sampler, qpnv::Entropy(seed).split("choices"), transport) {}

  static std::vector<qpnv::NodeId> voters(std::size_t n) {
    std::vector<qpnv::NodeId> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<qpnv::NodeId>(i + 1));
    return v;
  }
};

qpnv::TallyResult honest_round(Harness& h, qpnv::StateFactory& factory, const std::vector<std::size_t>& votes) {
  h.session.distribute_ballot_boxes(factory);
  h.session.run_box_security_tests();
  h.session.measure_ballots();
  h.session.distribute_ballot_indexes(factory);
  h.session.run_index_security_tests();
  h.session.measure_indexes();
  for (std::size_t k = 0; k < votes.size(); ++k) h.session.cast_vote(k, votes[k]);
  return h.session.publish_and_tally();
}

// Votes expected back from the tally: the multiset of nonzero row sums.
std::map<std::size_t, std::size_t> histogram(const std::vector<std::size_t>& v) {
  std::map<std::size_t, std::size_t> h;
  for (std::size_t x : v) ++h[x];
  return h;
}

}  // namespace

TEST_SUITE("voting") {
  TEST_CASE("honest sessions tally exactly the cast votes") {
    qpnv::HonestStateFactory factory;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      CAPTURE(seed);
      Harness h(4, seed);
      const std::vector<std::size_t> votes{seed % 2, 0, (seed / 2) % 2, 1};
      const auto result = honest_round(h, factory, votes);
      REQUIRE_FALSE(h.session.aborted());
      CHECK(histogram(result.row_sums) == histogram(votes));
      std::size_t zeros = 0;
      for (std::size_t v : votes) zeros += v == 0;
      CHECK(result.approvals() == zeros);
      CHECK(result.accepted == (2 * zeros > 4));
    }
  }

  TEST_CASE("three-option ballots") {
    qpnv::HonestStateFactory factory;
    Harness h(3, 9, qpnv::SessionConfig{3, 1, 1, 0});
    const std::vector<std::size_t> votes{2, 0, 1};
    const auto result = honest_round(h, factory, votes);
    CHECK(histogram(result.row_sums) == histogram(votes));
    CHECK(result.counts == std::vector<std::size_t>{1, 1, 1});
    CHECK_FALSE(result.accepted);
  }

  TEST_CASE("ballot matrix rows satisfy the box constraint") {
    qpnv::HonestStateFactory factory;
    Harness h(4, 3);
    h.session.distribute_ballot_boxes(factory);
    h.session.run_box_security_tests();
    const auto& r = h.session.measure_ballots();
    CHECK(r.rows() == 4);
    for (const auto& row : r.entries) CHECK(oracle::sum_zero_mod(row, 2));
  }

  TEST_CASE("index vector is a permutation") {
    qpnv::HonestStateFactory factory;
    Harness h(4, 8);
    h.session.distribute_ballot_boxes(factory);
    h.session.run_box_security_tests();
    h.session.measure_ballots();
    h.session.distribute_ballot_indexes(factory);
    h.session.run_index_security_tests();
    const auto d = h.session.measure_indexes();
    CHECK(oracle::permutation_sign(d) != 0);
  }

  TEST_CASE("operations out of order raise WrongPhaseError") {
    qpnv::HonestStateFactory factory;
    Harness h(3, 2);
    CHECK_THROWS_AS(h.session.measure_ballots(), qpnv::WrongPhaseError);
    CHECK_THROWS_AS(h.session.cast_vote(0, 0), qpnv::WrongPhaseError);
    h.session.distribute_ballot_boxes(factory);
    CHECK_THROWS_AS(h.session.distribute_ballot_boxes(factory), qpnv::WrongPhaseError);
    CHECK_THROWS_AS(h.session.publish_and_tally(), qpnv::WrongPhaseError);
  }

  TEST_CASE("a voter cannot cast twice") {
    qpnv::HonestStateFactory factory;
    Harness h(3, 4);
    h.session.distribute_ballot_boxes(factory);
    h.session.run_box_security_tests();
    h.session.measure_ballots();
    h.session.distribute_ballot_indexes(factory);
    h.session.run_index_security_tests();
    h.session.measure_indexes();
    h.session.cast_vote(0, 1);
    CHECK_THROWS_AS(h.session.cast_vote(0, 0), std::logic_error);
    CHECK_THROWS_AS(h.session.cast_vote(1, 2), std::invalid_argument);
    CHECK_THROWS_AS(h.session.published_ballots(), qpnv::WrongPhaseError);
  }

  TEST_CASE("forged ballot boxes are caught") {
    qpnv::ForgingStateFactory forger(qpnv::ForgedState{}, std::nullopt);
    std::size_t aborted = 0;
    const std::size_t runs = 400;
    for (std::uint64_t seed = 0; seed < runs; ++seed) {
      Harness h(4, 1000 + seed);
      h.session.distribute_ballot_boxes(forger);
      const auto recs = h.session.run_box_security_tests();
      if (h.session.aborted()) {
        ++aborted;
        REQUIRE_FALSE(recs.empty());
        CHECK_FALSE(recs.back().passed);
        CHECK(recs.back().failing_row.has_value());
      }
    }
    const double want = oracle::box_round_detection(oracle::basis_state({0, 0, 0, 0}, 2), 4);
    CHECK(double(aborted) / runs == doctest::Approx(want).epsilon(0.08));
  }

  TEST_CASE("row pass probabilities match the oracle") {
    for (std::size_t n : {2, 3, 4}) {
      for (std::size_t m : {2, 3}) {
        CAPTURE(n);
        CAPTURE(m);
        const auto honest = qpnv::prepare_x(n, m);
        CHECK(qpnv::row_pass_probability(honest, true, qpnv::Basis::Computational) == doctest::Approx(1.0));
        CHECK(qpnv::row_pass_probability(honest, true, qpnv::Basis::Fourier) == doctest::Approx(1.0));
        std::vector<std::size_t> zeros(n, 0);
        const auto forged = qpnv::ForgedState{zeros}.build(n, m);
        const double oracle_pass = oracle::box_row_pass(oracle::basis_state(zeros, m));
        const double lib_pass = 0.5 * qpnv::row_pass_probability(forged, true, qpnv::Basis::Computational) +
                                0.5 * qpnv::row_pass_probability(forged, true, qpnv::Basis::Fourier);
        CHECK(lib_pass == doctest::Approx(oracle_pass).epsilon(1e-12));
        CHECK(qpnv::round_detection_probability(forged, true, n) ==
              doctest::Approx(oracle::box_round_detection(oracle::basis_state(zeros, m), n)).epsilon(1e-12));
      }
    }
    const auto s = qpnv::prepare_s(3);
    CHECK(qpnv::row_pass_probability(s, false, qpnv::Basis::Computational) == doctest::Approx(1.0));
    CHECK(qpnv::row_pass_probability(s, false, qpnv::Basis::Fourier) == doctest::Approx(1.0));
  }

  TEST_CASE("tally and self-tally verification") {
    qpnv::BallotMatrix r{2, {{0, 1, 0}, {0, 0, 0}, {1, 1, 1}}};
    const auto t = qpnv::tally(r);
    CHECK(t.row_sums == std::vector<std::size_t>{1, 0, 1});
    CHECK(t.approvals() == 1);
    CHECK_FALSE(t.accepted);
    CHECK(qpnv::self_tally_verify(r, t).matches);
    auto lie = t;
    lie.accepted = true;
    lie.counts = {3, 0};
    CHECK_FALSE(qpnv::self_tally_verify(r, lie).matches);
    qpnv::BallotMatrix ragged{2, {{0, 1}, {0}}};
    CHECK_THROWS_AS(qpnv::tally(ragged), std::invalid_argument);
  }

  TEST_CASE("acceptance requires a strict majority of the electorate") {
    qpnv::BallotMatrix two_of_four{2, {{0, 0, 0, 0}, {0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}}};
    CHECK_FALSE(qpnv::tally(two_of_four).accepted);
    qpnv::BallotMatrix three_of_four{2, {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 1, 0, 0}}};
    CHECK(qpnv::tally(three_of_four).accepted);
    CHECK_FALSE(qpnv::tally(three_of_four, 6).accepted);
  }

  TEST_CASE("forced test plans are validated") {
    qpnv::HonestStateFactory factory;
    Harness h(2, 6);
    h.session.distribute_ballot_boxes(factory);
    const std::vector<qpnv::TestChoice> too_few{{{2}, {qpnv::Basis::Computational}}};
    CHECK_THROWS_AS(h.session.run_box_security_tests(&too_few), std::invalid_argument);
    const std::vector<qpnv::TestChoice> reused{{{2}, {qpnv::Basis::Computational}},
                                               {{2}, {qpnv::Basis::Fourier}}};
    CHECK_THROWS_AS(h.session.run_box_security_tests(&reused), std::invalid_argument);
  }
}
