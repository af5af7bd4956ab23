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

#ifndef QPNV_EVENT_LOG_H
#define QPNV_EVENT_LOG_H

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qpnv {

/// One audit record. Field names are stable: seq, t, actor, kind, data.
struct Event {
  std::uint64_t seq = 0;
  std::uint64_t time = 0;
  std::string actor;
  std::string kind;
  nlohmann::json data = nlohmann::json::object();
};

/// Append-only structured log, serialized as one JSON object per line.
///
/// Sinks see every event as it is appended. A log built with retain=false
/// keeps only per-kind counts, for long runs that stream to a file.
class EventLog {
 public:
  using Sink = std::function<void(const Event&)>;

  explicit EventLog(bool retain = true) : retain_(retain) {}

  void append(std::uint64_t time, std::string actor, std::string kind,
              nlohmann::json data = nlohmann::json::object());
  void add_sink(Sink sink) { sinks_.push_back(std::move(sink)); }
  /// Events whose kind the filter rejects are discarded before they get a
  /// sequence number.
  void set_filter(std::function<bool(std::string_view kind)> filter) { filter_ = std::move(filter); }

  bool retains() const { return retain_; }
  /// Empty unless the log retains events.
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return next_seq_; }
  std::size_t count(const std::string& kind) const;

  void write_jsonl(std::ostream& out) const;
  std::string to_jsonl() const;
  /// Throws std::runtime_error naming the offending line.
  static EventLog read_jsonl(std::istream& in);

 private:
  bool retain_ = true;
  std::uint64_t next_seq_ = 0;
  std::vector<Event> events_;
  std::map<std::string, std::size_t, std::less<>> counts_;
  std::vector<Sink> sinks_;
  std::function<bool(std::string_view)> filter_;
};

nlohmann::json event_to_json(const Event& event);

}  // namespace qpnv

#endif  // QPNV_EVENT_LOG_H
