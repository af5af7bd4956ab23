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

#include "qpnv/event_log.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qpnv {

void EventLog::append(std::uint64_t time, std::string actor, std::string kind,
                      nlohmann::json data) {
  if (filter_ && !filter_(kind)) return;
  Event e{next_seq_++, time, std::move(actor), std::move(kind), std::move(data)};
  ++counts_[e.kind];
  for (const Sink& sink : sinks_) sink(e);
  if (retain_) events_.push_back(std::move(e));
}

std::size_t EventLog::count(const std::string& kind) const {
  auto it = counts_.find(kind);
  return it == counts_.end() ? 0 : it->second;
}

nlohmann::json event_to_json(const Event& event) {
  return nlohmann::json{{"seq", event.seq},
                        {"t", event.time},
                        {"actor", event.actor},
                        {"kind", event.kind},
                        {"data", event.data}};
}

void EventLog::write_jsonl(std::ostream& out) const {
  for (const Event& e : events_) out << event_to_json(e).dump() << '\n';
}

std::string EventLog::to_jsonl() const {
  std::ostringstream out;
  write_jsonl(out);
  return out.str();
}

EventLog EventLog::read_jsonl(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      Event e;
      e.seq = j.at("seq").get<std::uint64_t>();
      e.time = j.at("t").get<std::uint64_t>();
      e.actor = j.at("actor").get<std::string>();
      e.kind = j.at("kind").get<std::string>();
      e.data = j.at("data");
      if (e.seq != log.next_seq_) {
        throw std::runtime_error("sequence gap");
      }
      log.append(e.time, std::move(e.actor), std::move(e.kind), std::move(e.data));
    } catch (const std::exception& ex) {
      throw std::runtime_error("malformed event log line " + std::to_string(line_no) + ": " +
                               ex.what());
    }
  }
  return log;
}

}  // namespace qpnv
