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

#ifndef QPNV_LEDGER_H
#define QPNV_LEDGER_H

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpnv/qusim.h"
#include "qpnv/voting.h"

namespace qpnv {

/// Largest number of block qubits one entangled chain segment may hold.
inline constexpr std::size_t kMaxChainBlocks = 20;
/// Fidelity a chain must reach against its analytic state to verify.
inline constexpr double kChainFidelityTolerance = 1e-10;

class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ChainError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Geometric phase schedule: the block at position i of a segment carries
/// theta1 * 2^-(i-1), so every prefix sum stays below 2*theta1 < pi/2.
class ThetaSchedule {
 public:
  /// Throws ScheduleError unless theta1 is in (0, pi/4).
  explicit ThetaSchedule(double theta1);
  double theta1() const { return theta1_; }
  /// `position` is 1-based.
  double theta_at(std::size_t position) const;

 private:
  double theta1_;
};

enum class BlockKind { Ordinary, Special };

const char* block_kind_name(BlockKind kind);

/// Classical part of a block; this is what the ledger persists and exports.
struct BlockRecord {
  std::uint64_t height = 0;    // global, 1-based
  std::size_t position = 0;    // within its entangled segment, 1-based
  std::uint64_t tenure = 0;
  std::string payload_digest;  // hex SHA-256
  double theta = 0.0;
  BlockKind kind = BlockKind::Ordinary;
  NodeId proposer = 0;
  NodeId next_bookkeeper = 0;
  std::uint64_t random_value = 0;
  std::uint64_t random_request_id = 0;
  std::vector<NodeId> elected;  // special blocks: next tenure's bookkeepers
  std::vector<NodeId> ranking;  // special blocks: full candidate ranking
  std::optional<TallyResult> vote_summary;
  std::uint64_t timestamp = 0;

  friend bool operator==(const BlockRecord&, const BlockRecord&) = default;
};

nlohmann::json block_to_json(const BlockRecord& block);
BlockRecord block_from_json(const nlohmann::json& j);

/// A block together with the single qubit its phase is encoded into.
struct QuantumBlock {
  BlockRecord record;
  QuditRegister qubit;
};

/// |+> with the schedule's phase for `position` (defaults to `height`).
QuantumBlock encode_block(std::string payload_digest, std::uint64_t height,
                          const ThetaSchedule& schedule, std::size_t position = 0);

/// Commits the ranked election outcome and the elected set.
QuantumBlock make_special_block(const std::vector<NodeId>& ranking, std::size_t seats,
                                std::uint64_t height, std::size_t position,
                                const ThetaSchedule& schedule);
std::string election_digest(const std::vector<NodeId>& ranking, std::size_t seats);

/// Which entangling hyperedges join block qubits. Sites are 0-based
/// positions within the segment.
struct HyperedgeLayout {
  enum class Kind { None, NestedPrefix, Path };
  Kind kind = Kind::NestedPrefix;
  double weight = 1.0;

  /// Edges applied when the block at 1-based `position` is appended.
  std::vector<WeightedHyperedge> edges_for(std::size_t position) const;
  std::vector<WeightedHyperedge> all_edges(std::size_t blocks) const;
  static Kind parse_kind(std::string_view name);
  static const char* kind_name(Kind kind);
};

/// Breakdown of the phase checks a voter runs on a proposed block.
struct ThetaVerdict {
  bool in_open_interval = false;  // theta in (0, pi/2)
  bool first_block_bound = true;  // position 1 needs theta < pi/4
  bool prefix_sum_ok = false;     // running sum including this block < pi/2
  bool matches_schedule = false;  // equals the schedule within 1e-12
  bool valid() const {
    return in_open_interval && first_block_bound && prefix_sum_ok && matches_schedule;
  }
};

ThetaVerdict check_theta(double theta, std::size_t position, double prior_sum,
                         const ThetaSchedule& schedule);

/// Analytic weighted hypergraph state: amplitude of |x> is
/// 2^{-N/2} exp(i * (sum_i theta_i x_i + pi * sum_e w_e prod_{j in e} x_j)).
QuditRegister expected_chain_state(std::span<const BlockRecord> blocks,
                                   const HyperedgeLayout& layout);

struct ChainVerdict {
  double fidelity = 0.0;
  bool ok = false;
};

/// One entangled segment: the block qubits joined into a single register
/// plus the classical mirror of those blocks.
class ChainState {
 public:
  ChainState(ThetaSchedule schedule, HyperedgeLayout layout, std::uint64_t first_height = 1);

  ThetaVerdict validate_theta(const BlockRecord& block) const;
  /// Requires an accepted vote summary, a valid theta and the next height.
  void append_block(QuantumBlock block);
  ChainVerdict verify() const;

  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  std::uint64_t next_height() const { return first_height_ + blocks_.size(); }
  double theta_sum() const;
  const std::vector<BlockRecord>& blocks() const { return blocks_; }
  const std::vector<WeightedHyperedge>& applied_edges() const { return applied_edges_; }
  const QuditRegister& state() const { return *register_; }
  const ThetaSchedule& schedule() const { return schedule_; }
  const HyperedgeLayout& layout() const { return layout_; }

  /// Adversarial edits. The first changes the quantum register only, the
  /// second the classical mirror only.
  void tamper_register_phase(std::size_t position, double delta);
  void tamper_mirror_theta(std::size_t position, double delta);

 private:
  ThetaSchedule schedule_;
  HyperedgeLayout layout_;
  std::uint64_t first_height_;
  std::vector<BlockRecord> blocks_;
  std::vector<WeightedHyperedge> applied_edges_;
  std::optional<QuditRegister> register_;
};

/// A node's full chain: consecutive entangled segments, each closed by a
/// special block.
class Ledger {
 public:
  Ledger(ThetaSchedule schedule, HyperedgeLayout layout);

  /// Segment the next block joins (a fresh one after a special block).
  const ChainState& open_segment() const;
  ThetaVerdict validate_theta(const BlockRecord& block) const;
  std::size_t next_position() const;
  std::uint64_t next_height() const { return next_height_; }

  void append_block(QuantumBlock block);
  /// Verdict over every segment; fidelity is the minimum.
  ChainVerdict verify() const;

  std::vector<BlockRecord> records() const;
  std::size_t size() const { return next_height_ - 1; }
  const std::vector<ChainState>& segments() const { return segments_; }
  ChainState& segment_of(std::uint64_t height);

  void export_records(std::ostream& out) const;

 private:
  ThetaSchedule schedule_;
  HyperedgeLayout layout_;
  std::vector<ChainState> segments_;
  std::uint64_t next_height_ = 1;
};

std::vector<BlockRecord> import_records(std::istream& in);

/// Rebuilds the analytic state of every segment from exported records.
std::vector<QuditRegister> audit_states(std::span<const BlockRecord> records,
                                        const HyperedgeLayout& layout);

}  // namespace qpnv

#endif  // QPNV_LEDGER_H
