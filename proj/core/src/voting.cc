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

#include "qpnv/voting.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qpnv {

const char* phase_name(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::Setup: return "setup";
    case SessionPhase::BoxesDistributed: return "boxes_distributed";
    case SessionPhase::BoxesTested: return "boxes_tested";
    case SessionPhase::IndexesDistributed: return "indexes_distributed";
    case SessionPhase::IndexesTested: return "indexes_tested";
    case SessionPhase::Cast: return "cast";
    case SessionPhase::Tallied: return "tallied";
    case SessionPhase::Aborted: return "aborted";
  }
  return "unknown";
}

TallyResult tally(const BallotMatrix& published, std::size_t electorate) {
  if (published.m < 2) throw std::invalid_argument("ballot matrix needs m >= 2");
  const std::size_t cols = published.cols();
  TallyResult result;
  result.counts.assign(published.m, 0);
  for (const auto& row : published.entries) {
    if (row.size() != cols) throw std::invalid_argument("ragged ballot matrix");
    std::size_t sum = 0;
    for (std::size_t v : row) {
      if (v >= published.m) throw std::invalid_argument("ballot entry out of range");
      sum += v;
    }
    result.row_sums.push_back(sum % published.m);
    ++result.counts[sum % published.m];
  }
  result.electorate = electorate == 0 ? cols : electorate;
  // Strict majority: N_0 > electorate / 2, evaluated in integers.
  result.accepted = 2 * result.counts[0] > result.electorate;
  return result;
}

SelfTallyCheck self_tally_verify(const BallotMatrix& published, const TallyResult& announced) {
  SelfTallyCheck check;
  check.recomputed = tally(published, announced.electorate);
  check.matches = check.recomputed == announced;
  return check;
}

QuditRegister ForgedState::build(std::size_t n, std::size_t levels) const {
  std::vector<std::size_t> digits = this->digits;
  if (digits.empty()) digits.assign(n, 0);
  if (digits.size() != n) throw std::invalid_argument("forged state needs one digit per particle");
  QuditRegister reg(std::vector<std::size_t>(n, levels));
  auto amps = reg.mutable_amplitudes();
  amps[0] = 0.0;
  amps[reg.index_of(digits)] = 1.0;
  return reg;
}

std::string ForgedState::describe() const {
  if (digits.empty()) return "zeros";
  std::ostringstream out;
  for (std::size_t i = 0; i < digits.size(); ++i) out << (i ? "," : "") << digits[i];
  return out.str();
}

QuditRegister ForgingStateFactory::ballot_box(std::size_t n, std::size_t m) {
  return boxes_ ? boxes_->build(n, m) : prepare_x(n, m);
}

QuditRegister ForgingStateFactory::ballot_index(std::size_t n) {
  return indexes_ ? indexes_->build(n, n) : prepare_s(n);
}

void DirectTransport::send_particles(NodeId from, NodeId to,
                                     std::span<const ParticleHandle> particles) {
  for (const ParticleHandle& p : particles) store_.transfer(p, from, to);
}

VotingSession::VotingSession(SessionConfig config, std::vector<NodeId> voters, NodeId bookkeeper,
                             QuantumStore& store, OutcomeSampler& sampler, Entropy choices,
                             SessionTransport& transport)
    : config_(config),
      voters_(std::move(voters)),
      bookkeeper_(bookkeeper),
      store_(store),
      sampler_(sampler),
      choices_(std::move(choices)),
      transport_(transport) {
  if (voters_.size() < 2) throw std::invalid_argument("a voting session needs at least 2 voters");
  if (config_.m < 2) throw std::invalid_argument("a voting session needs m >= 2");
  if (config_.electorate == 0) config_.electorate = voters_.size();
  if (config_.electorate < voters_.size()) {
    throw std::invalid_argument("electorate smaller than participating voters");
  }
  has_cast_.assign(voters_.size(), false);
}

VotingSession::~VotingSession() {
  for (RegisterId id : box_rows_) store_.release(id);
  for (RegisterId id : index_rows_) store_.release(id);
}

void VotingSession::require(SessionPhase expected, const char* op) const {
  if (phase_ != expected) {
    throw WrongPhaseError(std::string(op) + " requires phase " + phase_name(expected) +
                          ", session is " + phase_name(phase_));
  }
}

std::vector<RegisterId> VotingSession::distribute(StateFactory& factory, bool boxes,
                                                  std::size_t copies) {
  const std::size_t n = voters_.size();
  std::vector<RegisterId> rows;
  rows.reserve(copies);
  for (std::size_t x = 0; x < copies; ++x) {
    QuditRegister copy = boxes ? factory.ballot_box(n, config_.m) : factory.ballot_index(n);
    if (copy.num_sites() != n) throw std::invalid_argument("prepared copy has wrong particle count");
    rows.push_back(store_.adopt(std::move(copy), bookkeeper_));
  }
  // Column k of the particle matrix goes to voter k.
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<ParticleHandle> column;
    column.reserve(copies);
    for (RegisterId id : rows) column.push_back(ParticleHandle{id, k});
    transport_.send_particles(bookkeeper_, voters_[k], column);
  }
  transport_.publish(bookkeeper_, boxes ? "ballot_boxes_distributed" : "ballot_indexes_distributed",
                     {{"copies", copies}, {"voters", n}});
  return rows;
}

void VotingSession::distribute_ballot_boxes(StateFactory& factory) {
  require(SessionPhase::Setup, "distribute_ballot_boxes");
  const std::size_t n = voters_.size();
  box_rows_ = distribute(factory, /*boxes=*/true, n + n * config_.delta0);
  box_alive_.resize(box_rows_.size());
  for (std::size_t x = 0; x < box_alive_.size(); ++x) box_alive_[x] = x;
  phase_ = SessionPhase::BoxesDistributed;
}

void VotingSession::distribute_ballot_indexes(StateFactory& factory) {
  require(SessionPhase::BoxesTested, "distribute_ballot_indexes");
  const std::size_t n = voters_.size();
  index_rows_ = distribute(factory, /*boxes=*/false, 1 + n * config_.delta1);
  index_alive_.resize(index_rows_.size());
  for (std::size_t x = 0; x < index_alive_.size(); ++x) index_alive_[x] = x;
  phase_ = SessionPhase::IndexesDistributed;
}

bool VotingSession::row_check(bool boxes, Basis basis,
                              const std::vector<std::size_t>& outcomes) const {
  if (!boxes) return is_permutation_of_range(outcomes);
  if (basis == Basis::Computational) {
    std::size_t sum = 0;
    for (std::size_t v : outcomes) sum += v;
    return sum % config_.m == 0;
  }
  return std::all_of(outcomes.begin(), outcomes.end(),
                     [&](std::size_t v) { return v == outcomes.front(); });
}

std::vector<SecurityTestRecord> VotingSession::run_tests(bool boxes,
                                                         const std::vector<TestChoice>* forced) {
  const std::size_t n = voters_.size();
  const std::size_t per_tester = boxes ? config_.delta0 : config_.delta1;
  std::vector<RegisterId>& rows = boxes ? box_rows_ : index_rows_;
  std::vector<std::size_t>& alive = boxes ? box_alive_ : index_alive_;
  const char* topic = boxes ? "box_test" : "index_test";
  if (forced != nullptr && forced->size() != n) {
    throw std::invalid_argument("forced test plan needs one entry per voter");
  }

  std::vector<SecurityTestRecord> records;
  for (std::size_t tester = 0; tester < n; ++tester) {
    SecurityTestRecord record;
    record.tester = tester;
    if (forced != nullptr) {
      const TestChoice& choice = (*forced)[tester];
      if (choice.rows.size() != per_tester || choice.bases.size() != per_tester) {
        throw std::invalid_argument("forced test plan has the wrong number of rows");
      }
      for (std::size_t row : choice.rows) {
        if (std::find(alive.begin(), alive.end(), row) == alive.end()) {
          throw std::invalid_argument("forced test row already consumed");
        }
      }
      record.rows = choice.rows;
      record.bases = choice.bases;
    } else {
      // Uniform without replacement from rows no earlier tester consumed,
      // with an independent fair coin for each row's basis.
      std::vector<std::size_t> pool = alive;
      for (std::size_t i = 0; i < per_tester; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(choices_.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        record.rows.push_back(pool[i]);
        record.bases.push_back(choices_.coin() ? Basis::Fourier : Basis::Computational);
      }
    }
    nlohmann::json bases = nlohmann::json::array();
    for (Basis b : record.bases) bases.push_back(basis_name(b));
    transport_.publish(voters_[tester], std::string(topic) + "_choice",
                       {{"tester", tester}, {"rows", record.rows}, {"bases", bases}});

    for (std::size_t i = 0; i < record.rows.size(); ++i) {
      const std::size_t row = record.rows[i];
      std::vector<std::size_t> outcomes(n);
      for (std::size_t k = 0; k < n; ++k) {
        outcomes[k] = store_.measure(ParticleHandle{rows[row], k}, voters_[k], record.bases[i],
                                     sampler_);
      }
      const bool ok = row_check(boxes, record.bases[i], outcomes);
      transport_.publish(voters_[tester], std::string(topic) + "_outcomes",
                         {{"tester", tester},
                          {"row", row},
                          {"basis", basis_name(record.bases[i])},
                          {"outcomes", outcomes},
                          {"passed", ok}});
      record.outcomes.push_back(std::move(outcomes));
      if (!ok) {
        record.passed = false;
        record.failing_row = row;
        break;
      }
    }
    std::erase_if(alive, [&](std::size_t x) {
      return std::find(record.rows.begin(), record.rows.end(), x) != record.rows.end();
    });
    for (std::size_t row : record.rows) store_.release(rows[row]);
    const bool passed = record.passed;
    records.push_back(std::move(record));
    if (!passed) {
      phase_ = SessionPhase::Aborted;
      transport_.publish(voters_[tester], "session_aborted",
                         {{"stage", boxes ? "ballot_boxes" : "ballot_indexes"},
                          {"tester", tester},
                          {"row", *records.back().failing_row}});
      return records;
    }
  }
  return records;
}

std::vector<SecurityTestRecord> VotingSession::run_box_security_tests(
    const std::vector<TestChoice>* forced) {
  require(SessionPhase::BoxesDistributed, "run_box_security_tests");
  auto records = run_tests(/*boxes=*/true, forced);
  if (phase_ != SessionPhase::Aborted) phase_ = SessionPhase::BoxesTested;
  return records;
}

std::vector<SecurityTestRecord> VotingSession::run_index_security_tests(
    const std::vector<TestChoice>* forced) {
  require(SessionPhase::IndexesDistributed, "run_index_security_tests");
  auto records = run_tests(/*boxes=*/false, forced);
  if (phase_ != SessionPhase::Aborted) phase_ = SessionPhase::IndexesTested;
  return records;
}

BallotMatrix VotingSession::measure_ballots() {
  if (phase_ == SessionPhase::Setup || phase_ == SessionPhase::BoxesDistributed ||
      phase_ == SessionPhase::Aborted) {
    throw WrongPhaseError(std::string("measure_ballots requires tested ballot boxes, session is ") +
                          phase_name(phase_));
  }
  const std::size_t n = voters_.size();
  BallotMatrix r;
  r.m = config_.m;
  r.entries.assign(box_alive_.size(), std::vector<std::size_t>(n, 0));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t pos = 0; pos < box_alive_.size(); ++pos) {
      r.entries[pos][k] = store_.measure(ParticleHandle{box_rows_[box_alive_[pos]], k}, voters_[k],
                                         Basis::Computational, sampler_);
    }
  }
  ballots_ = r;
  ballots_measured_ = true;
  return r;
}

IndexVector VotingSession::measure_indexes() {
  require(SessionPhase::IndexesTested, "measure_indexes");
  if (index_alive_.size() != 1) throw std::logic_error("index tests must leave exactly one row");
  const RegisterId row = index_rows_[index_alive_.front()];
  IndexVector d(voters_.size());
  for (std::size_t k = 0; k < voters_.size(); ++k) {
    d[k] = store_.measure(ParticleHandle{row, k}, voters_[k], Basis::Computational, sampler_);
  }
  indexes_ = d;
  indexes_measured_ = true;
  return d;
}

void VotingSession::cast_vote(std::size_t voter, std::size_t vote) {
  require(SessionPhase::IndexesTested, "cast_vote");
  if (!ballots_measured_ || !indexes_measured_) {
    throw WrongPhaseError("cast_vote requires measured ballots and indexes");
  }
  if (voter >= voters_.size()) throw std::out_of_range("unknown voter");
  if (vote >= config_.m) throw std::invalid_argument("vote out of range");
  if (has_cast_[voter]) throw std::logic_error("voter " + std::to_string(voter) + " already cast");
  if (std::none_of(has_cast_.begin(), has_cast_.end(), [](bool b) { return b; })) cast_ = ballots_;
  const std::size_t row = indexes_[voter];
  if (row >= cast_.rows()) throw std::out_of_range("ballot index outside the ballot matrix");
  cast_.entries[row][voter] = (cast_.entries[row][voter] + vote) % config_.m;
  has_cast_[voter] = true;

  std::vector<std::size_t> column(cast_.rows());
  for (std::size_t x = 0; x < cast_.rows(); ++x) column[x] = cast_.entries[x][voter];
  transport_.publish(voters_[voter], "ballot_column", {{"voter", voter}, {"column", column}});
  if (std::all_of(has_cast_.begin(), has_cast_.end(), [](bool b) { return b; })) {
    phase_ = SessionPhase::Cast;
  }
}

const BallotMatrix& VotingSession::published_ballots() const {
  if (phase_ != SessionPhase::Cast && phase_ != SessionPhase::Tallied) {
    throw WrongPhaseError("ballots are published only after every voter cast");
  }
  return cast_;
}

TallyResult VotingSession::publish_and_tally() {
  require(SessionPhase::Cast, "publish_and_tally");
  TallyResult result = tally(cast_, config_.electorate);
  phase_ = SessionPhase::Tallied;
  transport_.publish(bookkeeper_, "tally",
                     {{"R", result.row_sums},
                      {"N", result.counts},
                      {"electorate", result.electorate},
                      {"accepted", result.accepted}});
  return result;
}

double row_pass_probability(const QuditRegister& state, bool boxes, Basis basis) {
  QuditRegister rotated = state.clone_known_state();
  if (basis == Basis::Fourier) {
    for (std::size_t s = 0; s < rotated.num_sites(); ++s) fourier_transform_site(rotated, s, true);
  }
  const std::size_t m = rotated.dims().front();
  double pass = 0.0;
  auto amps = rotated.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    if (p == 0.0) continue;
    const std::vector<std::size_t> digits = rotated.digits_of(i);
    bool ok;
    if (!boxes) {
      ok = is_permutation_of_range(digits);
    } else if (basis == Basis::Computational) {
      std::size_t sum = 0;
      for (std::size_t d : digits) sum += d;
      ok = sum % m == 0;
    } else {
      ok = std::all_of(digits.begin(), digits.end(), [&](std::size_t d) { return d == digits[0]; });
    }
    if (ok) pass += p;
  }
  return std::clamp(pass, 0.0, 1.0);
}

double round_detection_probability(const QuditRegister& state, bool boxes,
                                   std::size_t tested_rows) {
  const double per_row = 0.5 * row_pass_probability(state, boxes, Basis::Computational) +
                         0.5 * row_pass_probability(state, boxes, Basis::Fourier);
  return 1.0 - std::pow(per_row, static_cast<double>(tested_rows));
}

}  // namespace qpnv
