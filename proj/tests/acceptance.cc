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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Reference values come from tests/oracles.h.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "qpnv/consensus.h"
#include "qpnv/crypto.h"
#include "qpnv/golden.h"
#include "qpnv/ledger.h"
#include "qpnv/qusim.h"
#include "qpnv/scenario.h"
#include "qpnv/voting.h"

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool ok = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<std::size_t> all_sites(const qpnv::QuditRegister& r) {
  std::vector<std::size_t> s(r.num_sites());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
  return s;
}

Outcome golden_example() {
  const auto start = Clock::now();
  const auto v = qpnv::verify_example(qpnv::worked_example());
  const double t = seconds_since(start);
  const auto ex = qpnv::worked_example();
  const bool exact = v.ok && v.ballots == ex.expected_ballots && v.indexes == qpnv::IndexVector{0, 1, 3, 2} &&
                     v.updated == ex.expected_updated && v.tally &&
                     v.tally->row_sums == std::vector<std::size_t>{0, 0, 0, 1} && v.tally->approvals() == 3 &&
                     v.tally->accepted;
  std::string detail = v.ok ? "all steps match" : "diverged at " + v.failed_step.value_or("?");
  return {exact && t < 1.0, detail + ", " + fmt("%.3f s", t)};
}

Outcome x_state_laws() {
  const auto start = Clock::now();
  qpnv::BornSampler sampler(qpnv::Entropy(2001));
  std::size_t failures = 0;
  std::size_t runs = 0;
  for (std::size_t n = 2; n <= 6; ++n) {
    for (std::size_t m : {2, 3}) {
      for (int i = 0; i < 1000; ++i) {
        for (auto basis : {qpnv::Basis::Computational, qpnv::Basis::Fourier}) {
          auto reg = qpnv::prepare_x(n, m);
          const auto out = qpnv::measure(reg, all_sites(reg), basis, sampler);
          const bool good = basis == qpnv::Basis::Computational ? oracle::sum_zero_mod(out, m)
                                                                : oracle::all_equal(out);
          failures += !good;
          ++runs;
        }
      }
    }
  }
  const double t = seconds_since(start);
  return {failures == 0 && t < 30.0,
          std::to_string(failures) + " failures in " + std::to_string(runs) + " measurements, " + fmt("%.2f s", t)};
}

Outcome s_state_law() {
  const auto start = Clock::now();
  qpnv::BornSampler sampler(qpnv::Entropy(3001));
  std::size_t failures = 0;
  std::size_t runs = 0;
  for (std::size_t n = 2; n <= 5; ++n) {
    for (int i = 0; i < 1000; ++i) {
      for (auto basis : {qpnv::Basis::Computational, qpnv::Basis::Fourier}) {
        auto reg = qpnv::prepare_s(n);
        const auto out = qpnv::measure(reg, all_sites(reg), basis, sampler);
        failures += oracle::permutation_sign(out) == 0;
        ++runs;
      }
    }
  }
  const double t = seconds_since(start);
  return {failures == 0 && t < 30.0,
          std::to_string(failures) + " failures in " + std::to_string(runs) + " measurements, " + fmt("%.2f s", t)};
}

struct SessionRig {
  qpnv::QuantumStore store;
  qpnv::BornSampler sampler;
  qpnv::DirectTransport transport{store};
  qpnv::HonestStateFactory factory;
  explicit SessionRig(std::uint64_t seed) : sampler(qpnv::Entropy(seed)) {}
};

std::vector<qpnv::NodeId> voter_ids(std::size_t n) {
  std::vector<qpnv::NodeId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<qpnv::NodeId>(i + 1);
  return v;
}

Outcome tally_law() {
  SessionRig rig(4001);
  qpnv::Entropy votes_rng(4002);
  qpnv::Entropy choices(4003);
  std::size_t multiset_failures = 0;
  std::size_t self_tally_failures = 0;
  std::size_t aborts = 0;
  const std::size_t sessions = 2000;
  for (std::size_t i = 0; i < sessions; ++i) {
    const std::size_t n = 3 + i % 3;
    qpnv::VotingSession s(qpnv::SessionConfig{}, voter_ids(n), 100, rig.store, rig.sampler,
                          choices.split("session", i), rig.transport);
    s.distribute_ballot_boxes(rig.factory);
    s.run_box_security_tests();
    s.measure_ballots();
    s.distribute_ballot_indexes(rig.factory);
    s.run_index_security_tests();
    if (s.aborted()) {
      ++aborts;
      continue;
    }
    s.measure_indexes();
    std::vector<std::size_t> votes(n);
    for (std::size_t k = 0; k < n; ++k) {
      votes[k] = votes_rng.below(2);
      s.cast_vote(k, votes[k]);
    }
    const auto result = s.publish_and_tally();
    auto r = result.row_sums;
    std::sort(r.begin(), r.end());
    std::sort(votes.begin(), votes.end());
    multiset_failures += r != votes;
    self_tally_failures += !qpnv::self_tally_verify(s.published_ballots(), result).matches;
  }
  return {multiset_failures == 0 && self_tally_failures == 0 && aborts == 0,
          std::to_string(sessions) + " sessions, " + std::to_string(multiset_failures) + " multiset mismatches, " +
              std::to_string(self_tally_failures) + " self-tally mismatches, " + std::to_string(aborts) +
              " aborts"};
}

Outcome anonymity() {
  SessionRig rig(5001);
  qpnv::Entropy choices(5002);
  std::map<std::vector<std::size_t>, std::size_t> cells;
  const std::size_t sessions = 6000;
  for (std::size_t i = 0; i < sessions; ++i) {
    qpnv::VotingSession s(qpnv::SessionConfig{}, voter_ids(3), 100, rig.store, rig.sampler,
                          choices.split("session", i), rig.transport);
    s.distribute_ballot_boxes(rig.factory);
    s.run_box_security_tests();
    s.measure_ballots();
    s.distribute_ballot_indexes(rig.factory);
    s.run_index_security_tests();
    ++cells[s.measure_indexes()];
  }
  double max_abs = 0.0;
  double max_rel = 0.0;
  for (const auto& [perm, count] : cells) {
    const double f = double(count) / double(sessions);
    max_abs = std::max(max_abs, std::abs(f - 1.0 / 6.0));
    max_rel = std::max(max_rel, std::abs(f * 6.0 - 1.0));
  }
  std::ostringstream counts;
  for (const auto& [perm, count] : cells) counts << count << ' ';
  return {cells.size() == 6 && max_abs <= 0.05,
          "cells " + counts.str() + "max deviation " + fmt("%.4f", max_abs) + " (relative " +
              fmt("%.1f%%", 100 * max_rel) + ")"};
}

Outcome forged_detection() {
  auto config = qpnv::builtin_scenario("forged-ballot");
  config.trials = 10000;
  qpnv::EventLog log(false);
  const auto result = qpnv::run_scenario(config, log);
  const double want = oracle::box_round_detection(oracle::basis_state({0, 0, 0, 0}, 2), 4);
  const double closed_form = 1.0 - std::pow(9.0 / 16.0, 4.0);
  const double fourier_row = 1.0 - oracle::mass_where(oracle::fourier_distribution(oracle::basis_state({0, 0, 0, 0}, 2)),
                                                      4, 2, [](const auto& d) { return oracle::all_equal(d); });
  const double rate = result.report.detection_rate();
  const bool ok = result.report.trials == 10000 && std::abs(rate - want) <= 0.03 &&
                  std::abs(want - closed_form) < 1e-12 && std::abs(fourier_row - (1.0 - std::pow(2.0, 1.0 - 4.0))) < 1e-12;
  return {ok, "rate " + fmt("%.4f", rate) + " vs oracle " + fmt("%.6f", want) + " over " +
                  std::to_string(result.report.trials) + " trials"};
}

Outcome chain_tamper() {
  const auto start = Clock::now();
  const std::vector<double> thetas{kPi / 8, kPi / 16, kPi / 32};
  const qpnv::ThetaSchedule schedule(kPi / 8);
  auto build = [&] {
    qpnv::ChainState chain(schedule, qpnv::HyperedgeLayout{});
    for (std::size_t p = 1; p <= 3; ++p) {
      auto b = qpnv::encode_block("block-" + std::to_string(p), p, schedule);
      qpnv::TallyResult t;
      t.row_sums = {0, 0, 0, 1};
      t.counts = {3, 1};
      t.electorate = 4;
      t.accepted = true;
      b.record.vote_summary = t;
      chain.append_block(std::move(b));
    }
    return chain;
  };
  const auto honest = build();
  const auto reference = oracle::nested_prefix_chain(thetas);
  std::vector<qpnv::Amplitude> got(honest.state().amplitudes().begin(), honest.state().amplitudes().end());
  const double oracle_fid = oracle::overlap_fidelity(reference, got);
  bool ok = honest.verify().ok && honest.verify().fidelity >= 1.0 - 1e-10 && oracle_fid >= 1.0 - 1e-10;
  const double want = oracle::single_phase_tamper_fidelity(kPi / 16);
  double worst = 0.0;
  for (std::size_t pos = 1; pos <= 3; ++pos) {
    auto chain = build();
    chain.tamper_register_phase(pos, kPi / 16);
    const auto v = chain.verify();
    worst = std::max(worst, std::abs(v.fidelity - want));
    ok = ok && !v.ok && std::abs(v.fidelity - want) <= 1e-9;
  }
  const double t = seconds_since(start);
  return {ok && t < 1.0, "honest fidelity " + fmt("%.12f", honest.verify().fidelity) + ", tampered " +
                             fmt("%.12f", want) + " (max error " + fmt("%.1e", worst) + "), " + fmt("%.3f s", t)};
}

Outcome theta_schedule() {
  const qpnv::ThetaSchedule s(kPi / 8);
  std::size_t wrong = 0;
  std::size_t cases = 0;
  auto expect = [&](bool want, double theta, std::size_t pos, double prior) {
    ++cases;
    wrong += qpnv::check_theta(theta, pos, prior, s).valid() != want;
  };
  double prior = 0.0;
  for (std::size_t p = 1; p <= 20; ++p) {
    const double scheduled = (kPi / 8) / std::pow(2.0, double(p - 1));
    expect(true, scheduled, p, prior);
    expect(false, 0.0, p, prior);
    expect(false, kPi / 2, p, prior);
    expect(false, kPi / 2 + 0.1, p, prior);
    expect(false, scheduled * 1.01, p, prior);
    expect(false, scheduled, p, kPi / 2 - scheduled);  // prefix sum reaches pi/2
    prior += scheduled;
  }
  expect(false, kPi / 4, 1, 0.0);
  expect(false, kPi / 3, 1, 0.0);
  // The schedule itself never violates a bound.
  bool schedule_ok = true;
  prior = 0.0;
  for (std::size_t p = 1; p <= 20; ++p) {
    schedule_ok = schedule_ok && qpnv::check_theta(s.theta_at(p), p, prior, s).valid();
    prior += s.theta_at(p);
  }
  bool ctor_rejects = false;
  try {
    qpnv::ThetaSchedule bad(kPi / 4);
  } catch (const qpnv::ScheduleError&) {
    ctor_rejects = true;
  }
  return {wrong == 0 && schedule_ok && ctor_rejects,
          std::to_string(cases) + " cases, " + std::to_string(wrong) + " misclassified"};
}

Outcome honest_tenure() {
  const auto start = Clock::now();
  qpnv::ConsensusConfig c;
  c.n_voters = 4;
  c.bookkeepers = 3;
  c.rotations_per_tenure = 4;
  c.seed = 9001;
  qpnv::EventLog log(false);
  qpnv::Consortium sim(c, log);
  sim.run();
  std::size_t ordinary = 0;
  std::size_t special = 0;
  double min_fid = 1.0;
  bool all_ok = true;
  bool same_length = true;
  std::size_t nodes = 0;
  for (const auto& n : sim.nodes()) {
    if (n.is_qrng) continue;
    ++nodes;
    const auto& l = sim.ledger(n.id);
    const auto v = l.verify();
    min_fid = std::min(min_fid, v.fidelity);
    all_ok = all_ok && v.ok;
    same_length = same_length && l.size() == 5;
    if (ordinary + special == 0) {
      for (const auto& r : l.records()) (r.kind == qpnv::BlockKind::Ordinary ? ordinary : special)++;
    }
  }
  const double t = seconds_since(start);
  return {ordinary == 4 && special == 1 && all_ok && same_length && min_fid >= 1.0 - 1e-10 && t < 10.0,
          std::to_string(ordinary) + " ordinary + " + std::to_string(special) + " special, " +
              std::to_string(nodes) + " chains, min fidelity " + fmt("%.12f", min_fid) + ", " + fmt("%.2f s", t)};
}

Outcome partition_starvation() {
  // Default roster ids: V0..V3 = 0..3, B0..B2 = 4..6, Q0 = 7, U0 = 8.
  qpnv::ConsensusConfig c;
  c.seed = 10001;
  c.rotations_per_tenure = 6;
  qpnv::AdversaryAction split31;
  split31.kind = qpnv::AdversaryAction::Kind::Partition;
  split31.at_rotation = 1;
  split31.duration = 2;
  split31.groups = {{0, 1, 2, 4, 5, 7, 8}, {3, 6}};
  qpnv::AdversaryAction split22 = split31;
  split22.at_rotation = 3;
  split22.groups = {{0, 1, 4, 5, 7, 8}, {2, 3, 6}};
  c.adversary.actions = {split31, split22};
  qpnv::EventLog log(false);
  qpnv::Consortium sim(c, log);

  auto finalized_by = [](const std::vector<qpnv::CycleOutcome>& outs, qpnv::NodeId member) {
    for (const auto& o : outs) {
      if (std::find(o.group.begin(), o.group.end(), member) != o.group.end()) return o.finalized;
    }
    return false;
  };
  bool ok = true;
  std::ostringstream detail;
  for (int r = 1; r <= 6; ++r) {
    const auto outs = sim.run_rotation_cycle();
    const bool side_a = finalized_by(outs, 0);
    const bool side_b = finalized_by(outs, 3);
    detail << "r" << r << ":" << side_a << side_b << ' ';
    if (r <= 2) ok = ok && side_a && !side_b;       // 3+1: only the majority
    else if (r <= 4) ok = ok && !side_a && !side_b;  // 2+2: nobody
    else ok = ok && side_a;                          // healed
  }
  ok = ok && sim.verify_all_chains().ok;
  return {ok, "finalized (majority|minority) " + detail.str()};
}

Outcome qrng_audit() {
  const auto config = qpnv::builtin_scenario("qrng-audit");
  qpnv::EventLog log(false);
  const auto result = qpnv::run_scenario(config, log);
  const auto& r = result.report;
  std::size_t total = 0;
  for (const auto& [node, count] : r.selection_counts) total += count;
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::ostringstream counts;
  for (const auto& [node, count] : r.selection_counts) {
    const double f = double(count) / double(total);
    max_abs = std::max(max_abs, std::abs(f - 1.0 / 3.0));
    max_rel = std::max(max_rel, std::abs(3.0 * f - 1.0));
    counts << count << ' ';
  }
  const bool fair = r.selection_counts.size() == 3 && total >= 9999 && max_abs <= 0.03;
  const bool audit = r.random_blocks > 0 && r.random_verified == r.random_blocks;
  const bool flagged = r.impersonation_checks > 0 && r.impersonation_flagged == r.impersonation_checks;
  return {fair && audit && flagged && r.chains_ok,
          "selections " + counts.str() + "of " + std::to_string(total) + " (max deviation " +
              fmt("%.4f", max_abs) + ", relative " + fmt("%.1f%%", 100 * max_rel) + "), random audit " +
              std::to_string(r.random_verified) + "/" + std::to_string(r.random_blocks) + ", impersonation flagged " +
              std::to_string(r.impersonation_flagged) + "/" + std::to_string(r.impersonation_checks)};
}

std::string scenario_digest(const qpnv::ScenarioConfig& config) {
  qpnv::EventLog log(false);
  log.set_filter(qpnv::log_filter(qpnv::LogLevel::Debug));
  qpnv::Sha256Stream digest;
  log.add_sink([&](const qpnv::Event& e) { digest.update(qpnv::event_to_json(e).dump() + '\n'); });
  qpnv::run_scenario(config, log);
  return qpnv::to_hex(digest.digest());
}

Outcome determinism() {
  std::size_t differing = 0;
  std::ostringstream detail;
  for (const auto& name : qpnv::builtin_scenario_names()) {
    const auto config = qpnv::builtin_scenario(name);
    const auto a = scenario_digest(config);
    const auto b = scenario_digest(config);
    differing += a != b;
    detail << name << '=' << a.substr(0, 12) << (a == b ? "" : "(differs)") << ' ';
  }
  return {differing == 0, detail.str()};
}

}  // namespace

int main() {
  const auto suite_start = Clock::now();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"worked example reproduced exactly", golden_example},
      {"X-state measurement laws", x_state_laws},
      {"S-state measurement law", s_state_law},
      {"anonymized tally law", tally_law},
      {"index-vector anonymity", anonymity},
      {"forged-ballot detection rate", forged_detection},
      {"chain identity and tamper sensitivity", chain_tamper},
      {"theta schedule validation", theta_schedule},
      {"honest tenure shape", honest_tenure},
      {"partition starvation", partition_starvation},
      {"QRNG fairness and audit", qrng_audit},
      {"deterministic event logs", determinism},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.ok;
    std::printf("[%s] criterion %zu: %s: %s (%.2f s)\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  const double total = seconds_since(suite_start);
  const bool budget = total < 300.0;
  all = all && budget;
  std::printf("[%s] criterion 13: acceptance suite runtime: %.1f s (budget 300 s)\n", budget ? "PASS" : "FAIL", total);
  return all ? 0 : 1;
}
