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

#include "qpnv/ledger.h"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "qpnv/crypto.h"

namespace qpnv {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kQuarterPi = std::numbers::pi / 4.0;

nlohmann::json tally_to_json(const TallyResult& t) {
  return {{"R", t.row_sums}, {"N", t.counts}, {"electorate", t.electorate}, {"accepted", t.accepted}};
}

TallyResult tally_from_json(const nlohmann::json& j) {
  TallyResult t;
  t.row_sums = j.at("R").get<std::vector<std::size_t>>();
  t.counts = j.at("N").get<std::vector<std::size_t>>();
  t.electorate = j.at("electorate").get<std::size_t>();
  t.accepted = j.at("accepted").get<bool>();
  return t;
}

}  // namespace

ThetaSchedule::ThetaSchedule(double theta1) : theta1_(theta1) {
  if (!(theta1 > 0.0 && theta1 < kQuarterPi)) {
    throw ScheduleError("first block phase must lie in (0, pi/4)");
  }
}

double ThetaSchedule::theta_at(std::size_t position) const {
  if (position == 0) throw ScheduleError("block positions are 1-based");
  return std::ldexp(theta1_, -static_cast<int>(position - 1));
}

const char* block_kind_name(BlockKind kind) {
  return kind == BlockKind::Special ? "special" : "ordinary";
}

nlohmann::json block_to_json(const BlockRecord& b) {
  nlohmann::json j{{"height", b.height},
                   {"position", b.position},
                   {"tenure", b.tenure},
                   {"digest", b.payload_digest},
                   {"theta", b.theta},
                   {"kind", block_kind_name(b.kind)},
                   {"proposer", b.proposer},
                   {"next_bookkeeper", b.next_bookkeeper},
                   {"random", b.random_value},
                   {"random_request", b.random_request_id},
                   {"elected", b.elected},
                   {"ranking", b.ranking},
                   {"timestamp", b.timestamp}};
  j["tally"] = b.vote_summary ? tally_to_json(*b.vote_summary) : nlohmann::json(nullptr);
  return j;
}

BlockRecord block_from_json(const nlohmann::json& j) {
  BlockRecord b;
  b.height = j.at("height").get<std::uint64_t>();
  b.position = j.at("position").get<std::size_t>();
  b.tenure = j.at("tenure").get<std::uint64_t>();
  b.payload_digest = j.at("digest").get<std::string>();
  b.theta = j.at("theta").get<double>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "special" && kind != "ordinary") throw std::invalid_argument("unknown block kind");
  b.kind = kind == "special" ? BlockKind::Special : BlockKind::Ordinary;
  b.proposer = j.at("proposer").get<NodeId>();
  b.next_bookkeeper = j.at("next_bookkeeper").get<NodeId>();
  b.random_value = j.at("random").get<std::uint64_t>();
  b.random_request_id = j.at("random_request").get<std::uint64_t>();
  b.elected = j.at("elected").get<std::vector<NodeId>>();
  b.ranking = j.at("ranking").get<std::vector<NodeId>>();
  b.timestamp = j.at("timestamp").get<std::uint64_t>();
  if (!j.at("tally").is_null()) b.vote_summary = tally_from_json(j.at("tally"));
  return b;
}

QuantumBlock encode_block(std::string payload_digest, std::uint64_t height,
                          const ThetaSchedule& schedule, std::size_t position) {
  if (height == 0) throw ScheduleError("block heights start at 1");
  if (position == 0) position = static_cast<std::size_t>(height);
  const double theta = schedule.theta_at(position);
  if (!check_theta(theta, position, 0.0, schedule).in_open_interval) {
    throw ScheduleError("scheduled phase left the open interval (0, pi/2)");
  }
  QuantumBlock block{BlockRecord{}, new_plus_qubit()};
  block.record.height = height;
  block.record.position = position;
  block.record.payload_digest = std::move(payload_digest);
  block.record.theta = theta;
  apply_phase(block.qubit, 0, theta);
  return block;
}

std::string election_digest(const std::vector<NodeId>& ranking, std::size_t seats) {
  std::string canonical = "election;seats=" + std::to_string(seats) + ";ranking=";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    canonical += (i ? "," : "") + std::to_string(ranking[i]);
  }
  return to_hex(sha256(canonical));
}

QuantumBlock make_special_block(const std::vector<NodeId>& ranking, std::size_t seats,
                                std::uint64_t height, std::size_t position,
                                const ThetaSchedule& schedule) {
  if (ranking.empty()) throw std::invalid_argument("special block needs a non-empty ranking");
  if (seats == 0) throw std::invalid_argument("special block needs at least one seat");
  QuantumBlock block = encode_block(election_digest(ranking, seats), height, schedule, position);
  block.record.kind = BlockKind::Special;
  block.record.ranking = ranking;
  const std::size_t seated = std::min(seats, ranking.size());
  block.record.elected.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(seated));
  return block;
}

std::vector<WeightedHyperedge> HyperedgeLayout::edges_for(std::size_t position) const {
  if (position < 2 || kind == Kind::None) return {};
  if (kind == Kind::Path) return {WeightedHyperedge{{position - 2, position - 1}, weight}};
  WeightedHyperedge edge{{}, weight};
  for (std::size_t s = 0; s < position; ++s) edge.sites.push_back(s);
  return {edge};
}

std::vector<WeightedHyperedge> HyperedgeLayout::all_edges(std::size_t blocks) const {
  std::vector<WeightedHyperedge> out;
  for (std::size_t p = 1; p <= blocks; ++p) {
    for (auto& e : edges_for(p)) out.push_back(std::move(e));
  }
  return out;
}

HyperedgeLayout::Kind HyperedgeLayout::parse_kind(std::string_view name) {
  if (name == "none") return Kind::None;
  if (name == "nested-prefix") return Kind::NestedPrefix;
  if (name == "path") return Kind::Path;
  throw std::invalid_argument("unknown hyperedge layout '" + std::string(name) + "'");
}

const char* HyperedgeLayout::kind_name(Kind kind) {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::NestedPrefix: return "nested-prefix";
    case Kind::Path: return "path";
  }
  return "unknown";
}

ThetaVerdict check_theta(double theta, std::size_t position, double prior_sum,
                         const ThetaSchedule& schedule) {
  ThetaVerdict v;
  v.in_open_interval = theta > 0.0 && theta < kHalfPi;
  v.first_block_bound = position != 1 || theta < kQuarterPi;
  v.prefix_sum_ok = prior_sum + theta < kHalfPi;
  v.matches_schedule = position >= 1 && std::abs(theta - schedule.theta_at(position)) <= 1e-12;
  return v;
}

QuditRegister expected_chain_state(std::span<const BlockRecord> blocks,
                                   const HyperedgeLayout& layout) {
  const std::size_t n = blocks.size();
  if (n == 0) throw ChainError("expected state of an empty chain");
  if (n > kMaxChainBlocks) throw DimensionGuardError("chain segment exceeds 20 blocks");
  const std::vector<WeightedHyperedge> edges = layout.all_edges(n);
  std::vector<Amplitude> amps(std::size_t{1} << n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(amps.size()));
  for (std::size_t x = 0; x < amps.size(); ++x) {
    // Site 0 (first block) is the most significant bit.
    auto bit = [&](std::size_t site) { return (x >> (n - 1 - site)) & 1U; };
    double phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (bit(i)) phase += blocks[i].theta;
    }
    for (const WeightedHyperedge& e : edges) {
      bool all = true;
      for (std::size_t s : e.sites) all = all && bit(s);
      if (all) phase += std::numbers::pi * e.weight;
    }
    amps[x] = std::polar(scale, phase);
  }
  return QuditRegister(std::vector<std::size_t>(n, 2), std::move(amps));
}

ChainState::ChainState(ThetaSchedule schedule, HyperedgeLayout layout, std::uint64_t first_height)
    : schedule_(schedule), layout_(layout), first_height_(first_height) {}

double ChainState::theta_sum() const {
  double sum = 0.0;
  for (const BlockRecord& b : blocks_) sum += b.theta;
  return sum;
}

ThetaVerdict ChainState::validate_theta(const BlockRecord& block) const {
  return check_theta(block.theta, block.position, theta_sum(), schedule_);
}

void ChainState::append_block(QuantumBlock block) {
  const BlockRecord& rec = block.record;
  if (!rec.vote_summary || !rec.vote_summary->accepted) {
    throw ChainError("block " + std::to_string(rec.height) + " lacks an accepting vote");
  }
  if (rec.height != next_height() || rec.position != blocks_.size() + 1) {
    throw ChainError("block height " + std::to_string(rec.height) + " does not extend chain at " +
                     std::to_string(next_height() - 1));
  }
  if (!validate_theta(rec).valid()) {
    throw ChainError("block " + std::to_string(rec.height) + " fails the phase schedule");
  }
  if (blocks_.size() >= kMaxChainBlocks) throw DimensionGuardError("chain segment is full");
  if (block.qubit.dims() != std::vector<std::size_t>{2}) {
    throw ChainError("block qubit must be a single 2-level site");
  }
  register_ = register_ ? register_->tensor(block.qubit) : std::move(block.qubit);
  for (const WeightedHyperedge& e : layout_.edges_for(rec.position)) {
    apply_weighted_hyperedge(*register_, e);
    applied_edges_.push_back(e);
  }
  blocks_.push_back(std::move(block.record));
}

ChainVerdict ChainState::verify() const {
  if (blocks_.empty()) throw ChainError("cannot verify an empty chain");
  ChainVerdict v;
  v.fidelity = fidelity(*register_, expected_chain_state(blocks_, layout_));
  v.ok = v.fidelity >= 1.0 - kChainFidelityTolerance;
  return v;
}

void ChainState::tamper_register_phase(std::size_t position, double delta) {
  if (position == 0 || position > blocks_.size()) throw std::out_of_range("no block at position");
  apply_phase(*register_, position - 1, delta);
}

void ChainState::tamper_mirror_theta(std::size_t position, double delta) {
  if (position == 0 || position > blocks_.size()) throw std::out_of_range("no block at position");
  blocks_[position - 1].theta += delta;
}

Ledger::Ledger(ThetaSchedule schedule, HyperedgeLayout layout)
    : schedule_(schedule), layout_(layout) {
  segments_.emplace_back(schedule_, layout_, 1);
}

const ChainState& Ledger::open_segment() const { return segments_.back(); }

std::size_t Ledger::next_position() const { return segments_.back().size() + 1; }

ThetaVerdict Ledger::validate_theta(const BlockRecord& block) const {
  return segments_.back().validate_theta(block);
}

void Ledger::append_block(QuantumBlock block) {
  const bool closes = block.record.kind == BlockKind::Special;
  segments_.back().append_block(std::move(block));
  ++next_height_;
  if (closes) segments_.emplace_back(schedule_, layout_, next_height_);
}

ChainVerdict Ledger::verify() const {
  ChainVerdict total{1.0, true};
  for (const ChainState& seg : segments_) {
    if (seg.empty()) continue;
    const ChainVerdict v = seg.verify();
    total.fidelity = std::min(total.fidelity, v.fidelity);
    total.ok = total.ok && v.ok;
  }
  return total;
}

std::vector<BlockRecord> Ledger::records() const {
  std::vector<BlockRecord> out;
  for (const ChainState& seg : segments_) {
    out.insert(out.end(), seg.blocks().begin(), seg.blocks().end());
  }
  return out;
}

ChainState& Ledger::segment_of(std::uint64_t height) {
  for (ChainState& seg : segments_) {
    if (!seg.empty() && height >= seg.blocks().front().height && height <= seg.blocks().back().height) {
      return seg;
    }
  }
  throw std::out_of_range("no block at height " + std::to_string(height));
}

void Ledger::export_records(std::ostream& out) const {
  for (const BlockRecord& b : records()) out << block_to_json(b).dump() << '\n';
}

std::vector<BlockRecord> import_records(std::istream& in) {
  std::vector<BlockRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(block_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

std::vector<QuditRegister> audit_states(std::span<const BlockRecord> records,
                                        const HyperedgeLayout& layout) {
  std::vector<QuditRegister> states;
  std::size_t start = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool last = i + 1 == records.size();
    if (records[i].kind == BlockKind::Special || last) {
      states.push_back(expected_chain_state(records.subspan(start, i + 1 - start), layout));
      start = i + 1;
    }
  }
  return states;
}

}  // namespace qpnv
