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

#ifndef QPNV_NET_H
#define QPNV_NET_H

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpnv/event_log.h"
#include "qpnv/qusim.h"
#include "qpnv/voting.h"

namespace qpnv {

inline constexpr NodeId kBroadcast = std::numeric_limits<NodeId>::max();

enum class MessageKind { ClassicalData, ParticleTransfer, Publication };

const char* message_kind_name(MessageKind kind);

struct Message {
  NodeId sender = 0;
  NodeId receiver = kBroadcast;
  MessageKind kind = MessageKind::ClassicalData;
  std::string topic;
  nlohmann::json payload = nlohmann::json::object();
  std::vector<ParticleHandle> particles;
  std::uint64_t send_time = 0;
  std::uint64_t id = 0;
};

/// A message as seen by one receiver.
struct Delivery {
  NodeId receiver = 0;
  const Message* message = nullptr;
};

/// Which messages a DropMessages action discards. Empty fields match any.
struct DropFilter {
  std::optional<NodeId> sender;
  std::optional<NodeId> receiver;
  std::string topic;

  bool matches(const Message& m, NodeId receiver) const;
};

/// Deterministic single-scheduler network. Messages are delivered in send
/// order (hence FIFO per link); a copy reaches its receiver only if both ends
/// are in the same partition when it is delivered, and is dropped and logged
/// otherwise. Particle transfers move ownership in the QuantumStore at
/// delivery time, so a dropped particle stays with its sender.
class SimNetwork {
 public:
  SimNetwork(std::vector<NodeId> roster, EventLog& log, QuantumStore* store = nullptr);

  /// Enqueues; a broadcast fans out to every other roster node. Throws
  /// std::invalid_argument on an unknown sender or receiver.
  std::uint64_t send(Message message);
  /// Delivers or drops the next queued copy. Empty when idle.
  std::optional<Delivery> step();
  /// Steps until the queue is empty; returns successful deliveries. The
  /// message pointers stay valid until the next send().
  std::vector<Delivery> run_until_idle();

  /// `groups` must be disjoint and cover the roster.
  void partition(std::vector<std::vector<NodeId>> groups);
  void heal();
  bool partitioned() const { return groups_.size() > 1; }
  bool connected(NodeId a, NodeId b) const;
  const std::vector<std::vector<NodeId>>& groups() const { return groups_; }
  std::vector<NodeId> group_of(NodeId node) const;

  void add_drop_filter(DropFilter filter) { drop_filters_.push_back(std::move(filter)); }
  void clear_drop_filters() { drop_filters_.clear(); }

  std::uint64_t now() const { return clock_; }
  void advance(std::uint64_t ticks = 1) { clock_ += ticks; }
  bool idle() const { return queue_.empty(); }
  const std::vector<NodeId>& roster() const { return roster_; }
  bool knows(NodeId node) const;

  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped() const { return dropped_; }
  EventLog& log() { return log_; }

 private:
  struct Pending {
    std::size_t message_index;
    NodeId receiver;
  };

  std::vector<NodeId> roster_;
  EventLog& log_;
  QuantumStore* store_;
  std::vector<std::vector<NodeId>> groups_;
  std::vector<DropFilter> drop_filters_;
  std::deque<Message> messages_;
  std::deque<Pending> queue_;
  std::uint64_t next_id_ = 1;
  std::uint64_t clock_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
};

/// Scripted adversary behaviour, fired at a given rotation cycle (1-based,
/// counted over the whole run) and active for `duration` cycles.
struct AdversaryAction {
  enum class Kind {
    ForgeBallotState,
    ForgeIndexState,
    ImpersonateQrng,
    TamperBlockPhase,
    DropMessages,
    Partition,
  };
  Kind kind = Kind::ForgeBallotState;
  std::uint64_t at_rotation = 1;
  std::uint64_t duration = 1;
  ForgedState forged;                       // Forge*State
  std::uint64_t value = 0;                  // ImpersonateQrng
  std::uint64_t height = 0;                 // TamperBlockPhase
  double delta = 0.0;                       // TamperBlockPhase
  DropFilter filter;                        // DropMessages
  std::vector<std::vector<NodeId>> groups;  // Partition

  bool active_at(std::uint64_t rotation) const {
    return rotation >= at_rotation && rotation < at_rotation + duration;
  }
  static Kind parse_kind(std::string_view name);
  static const char* kind_name(Kind kind);
};

nlohmann::json adversary_to_json(const AdversaryAction& action);

struct AdversaryPlan {
  std::vector<AdversaryAction> actions;

  std::vector<const AdversaryAction*> active(std::uint64_t rotation,
                                             AdversaryAction::Kind kind) const;
  /// Throws std::invalid_argument on a malformed action.
  void validate(const std::vector<NodeId>& roster) const;
};

/// Applies the network-level actions (Partition, DropMessages) and logs
/// every action. Other kinds are enacted by the consensus engine; this only
/// records them.
void apply_adversary(SimNetwork& network, const AdversaryAction& action);

}  // namespace qpnv

#endif  // QPNV_NET_H
