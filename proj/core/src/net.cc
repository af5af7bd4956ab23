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

#include "qpnv/net.h"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace qpnv {

namespace {

std::string actor_of(NodeId id) { return "n" + std::to_string(id); }

nlohmann::json particles_to_json(const std::vector<ParticleHandle>& particles) {
  nlohmann::json out = nlohmann::json::array();
  for (const ParticleHandle& p : particles) out.push_back({p.register_id, p.site});
  return out;
}

}  // namespace

const char* message_kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::ClassicalData: return "classical";
    case MessageKind::ParticleTransfer: return "particles";
    case MessageKind::Publication: return "publication";
  }
  return "unknown";
}

bool DropFilter::matches(const Message& m, NodeId to) const {
  if (sender && *sender != m.sender) return false;
  if (receiver && *receiver != to) return false;
  if (!topic.empty() && topic != m.topic) return false;
  return true;
}

SimNetwork::SimNetwork(std::vector<NodeId> roster, EventLog& log, QuantumStore* store)
    : roster_(std::move(roster)), log_(log), store_(store) {
  std::set<NodeId> unique(roster_.begin(), roster_.end());
  if (unique.size() != roster_.size()) throw std::invalid_argument("duplicate node in roster");
  if (unique.count(kBroadcast)) throw std::invalid_argument("reserved node id in roster");
  groups_ = {roster_};
}

bool SimNetwork::knows(NodeId node) const {
  return std::find(roster_.begin(), roster_.end(), node) != roster_.end();
}

std::uint64_t SimNetwork::send(Message message) {
  if (!knows(message.sender)) {
    throw std::invalid_argument("unknown sender " + std::to_string(message.sender));
  }
  if (message.receiver != kBroadcast && !knows(message.receiver)) {
    throw std::invalid_argument("unknown receiver " + std::to_string(message.receiver));
  }
  if (message.kind == MessageKind::ParticleTransfer && message.receiver == kBroadcast) {
    throw std::invalid_argument("particles cannot be broadcast");
  }
  if (queue_.empty()) messages_.clear();
  message.id = next_id_++;
  message.send_time = clock_;

  nlohmann::json data{{"id", message.id},
                      {"to", message.receiver == kBroadcast ? nlohmann::json("*")
                                                            : nlohmann::json(message.receiver)},
                      {"channel", message_kind_name(message.kind)},
                      {"topic", message.topic}};
  if (!message.payload.empty()) data["payload"] = message.payload;
  if (!message.particles.empty()) data["particles"] = particles_to_json(message.particles);
  log_.append(clock_, actor_of(message.sender), "send", std::move(data));

  const std::size_t index = messages_.size();
  messages_.push_back(std::move(message));
  const Message& stored = messages_.back();
  if (stored.receiver == kBroadcast) {
    for (NodeId node : roster_) {
      if (node != stored.sender) queue_.push_back(Pending{index, node});
    }
  } else {
    queue_.push_back(Pending{index, stored.receiver});
  }
  return stored.id;
}

std::optional<Delivery> SimNetwork::step() {
  while (!queue_.empty()) {
    const Pending next = queue_.front();
    queue_.pop_front();
    const Message& m = messages_[next.message_index];
    ++clock_;
    const char* reason = nullptr;
    if (!connected(m.sender, next.receiver)) {
      reason = "partition";
    } else if (std::any_of(drop_filters_.begin(), drop_filters_.end(),
                           [&](const DropFilter& f) { return f.matches(m, next.receiver); })) {
      reason = "adversary";
    }
    if (reason != nullptr) {
      ++dropped_;
      log_.append(clock_, actor_of(next.receiver), "drop",
                  {{"id", m.id}, {"from", m.sender}, {"reason", reason}});
      continue;
    }
    if (m.kind == MessageKind::ParticleTransfer && store_ != nullptr) {
      for (const ParticleHandle& p : m.particles) store_->transfer(p, m.sender, next.receiver);
    }
    ++delivered_;
    log_.append(clock_, actor_of(next.receiver), "deliver", {{"id", m.id}, {"from", m.sender}});
    return Delivery{next.receiver, &m};
  }
  return std::nullopt;
}

std::vector<Delivery> SimNetwork::run_until_idle() {
  std::vector<Delivery> out;
  while (auto d = step()) out.push_back(*d);
  return out;
}

void SimNetwork::partition(std::vector<std::vector<NodeId>> groups) {
  std::set<NodeId> seen;
  std::size_t total = 0;
  for (const auto& g : groups) {
    for (NodeId node : g) {
      if (!knows(node)) throw std::invalid_argument("partition names unknown node");
      if (!seen.insert(node).second) throw std::invalid_argument("partition groups overlap");
      ++total;
    }
  }
  if (total != roster_.size()) throw std::invalid_argument("partition groups must cover the roster");
  groups_ = std::move(groups);
  nlohmann::json desc = groups_;
  log_.append(clock_, "network", "partition", {{"groups", desc}});

  // Pending copies that now cross a boundary are dropped immediately.
  std::deque<Pending> kept;
  for (const Pending& p : queue_) {
    const Message& m = messages_[p.message_index];
    if (connected(m.sender, p.receiver)) {
      kept.push_back(p);
    } else {
      ++dropped_;
      log_.append(clock_, actor_of(p.receiver), "drop",
                  {{"id", m.id}, {"from", m.sender}, {"reason", "partition"}});
    }
  }
  queue_ = std::move(kept);
}

void SimNetwork::heal() {
  groups_ = {roster_};
  log_.append(clock_, "network", "heal");
}

bool SimNetwork::connected(NodeId a, NodeId b) const {
  for (const auto& g : groups_) {
    const bool has_a = std::find(g.begin(), g.end(), a) != g.end();
    if (has_a) return std::find(g.begin(), g.end(), b) != g.end();
  }
  return false;
}

std::vector<NodeId> SimNetwork::group_of(NodeId node) const {
  for (const auto& g : groups_) {
    if (std::find(g.begin(), g.end(), node) != g.end()) return g;
  }
  throw std::invalid_argument("unknown node " + std::to_string(node));
}

AdversaryAction::Kind AdversaryAction::parse_kind(std::string_view name) {
  if (name == "forge-ballot-state") return Kind::ForgeBallotState;
  if (name == "forge-index-state") return Kind::ForgeIndexState;
  if (name == "impersonate-qrng") return Kind::ImpersonateQrng;
  if (name == "tamper-block-phase") return Kind::TamperBlockPhase;
  if (name == "drop-messages") return Kind::DropMessages;
  if (name == "partition") return Kind::Partition;
  throw std::invalid_argument("unknown adversary action '" + std::string(name) + "'");
}

const char* AdversaryAction::kind_name(Kind kind) {
  switch (kind) {
    case Kind::ForgeBallotState: return "forge-ballot-state";
    case Kind::ForgeIndexState: return "forge-index-state";
    case Kind::ImpersonateQrng: return "impersonate-qrng";
    case Kind::TamperBlockPhase: return "tamper-block-phase";
    case Kind::DropMessages: return "drop-messages";
    case Kind::Partition: return "partition";
  }
  return "unknown";
}

nlohmann::json adversary_to_json(const AdversaryAction& a) {
  nlohmann::json j{{"action", AdversaryAction::kind_name(a.kind)},
                   {"at_rotation", a.at_rotation},
                   {"duration", a.duration}};
  switch (a.kind) {
    case AdversaryAction::Kind::ForgeBallotState:
    case AdversaryAction::Kind::ForgeIndexState:
      j["forged"] = a.forged.describe();
      break;
    case AdversaryAction::Kind::ImpersonateQrng:
      j["value"] = a.value;
      break;
    case AdversaryAction::Kind::TamperBlockPhase:
      j["height"] = a.height;
      j["delta"] = a.delta;
      break;
    case AdversaryAction::Kind::DropMessages:
      j["sender"] = a.filter.sender ? nlohmann::json(*a.filter.sender) : nlohmann::json(nullptr);
      j["receiver"] =
          a.filter.receiver ? nlohmann::json(*a.filter.receiver) : nlohmann::json(nullptr);
      j["topic"] = a.filter.topic;
      break;
    case AdversaryAction::Kind::Partition:
      j["groups"] = a.groups;
      break;
  }
  return j;
}

std::vector<const AdversaryAction*> AdversaryPlan::active(std::uint64_t rotation,
                                                          AdversaryAction::Kind kind) const {
  std::vector<const AdversaryAction*> out;
  for (const AdversaryAction& a : actions) {
    if (a.kind == kind && a.active_at(rotation)) out.push_back(&a);
  }
  return out;
}

void AdversaryPlan::validate(const std::vector<NodeId>& roster) const {
  auto known = [&](NodeId id) { return std::find(roster.begin(), roster.end(), id) != roster.end(); };
  for (const AdversaryAction& a : actions) {
    if (a.at_rotation == 0) throw std::invalid_argument("adversary actions fire at rotation >= 1");
    if (a.duration == 0) throw std::invalid_argument("adversary action duration must be positive");
    switch (a.kind) {
      case AdversaryAction::Kind::TamperBlockPhase:
        if (a.height == 0) throw std::invalid_argument("tamper-block-phase needs a height >= 1");
        break;
      case AdversaryAction::Kind::DropMessages:
        if ((a.filter.sender && !known(*a.filter.sender)) ||
            (a.filter.receiver && !known(*a.filter.receiver))) {
          throw std::invalid_argument("drop-messages names an unknown node");
        }
        break;
      case AdversaryAction::Kind::Partition: {
        std::set<NodeId> seen;
        std::size_t total = 0;
        for (const auto& g : a.groups) {
          for (NodeId id : g) {
            if (!known(id)) throw std::invalid_argument("partition names an unknown node");
            if (!seen.insert(id).second) throw std::invalid_argument("partition groups overlap");
            ++total;
          }
        }
        if (total != roster.size()) throw std::invalid_argument("partition must cover the roster");
        break;
      }
      default:
        break;
    }
  }
}

void apply_adversary(SimNetwork& network, const AdversaryAction& action) {
  network.log().append(network.now(), "adversary", "adversary", adversary_to_json(action));
  switch (action.kind) {
    case AdversaryAction::Kind::Partition:
      network.partition(action.groups);
      break;
    case AdversaryAction::Kind::DropMessages:
      network.add_drop_filter(action.filter);
      break;
    default:
      break;
  }
}

}  // namespace qpnv
