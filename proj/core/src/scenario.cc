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

#include "qpnv/scenario.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qpnv/golden.h"

namespace qpnv {

namespace pt = boost::property_tree;

namespace {

const std::vector<std::string> kExpectationKeys = {
    "blocks_ordinary", "blocks_special", "blocks_finalized", "min_chain_fidelity", "chains_ok",
    "minority_finalized", "detection_tolerance", "selection_tolerance", "random_audit",
    "impersonation_flagged", "golden", "tally_R", "tally_N0", "accepted", "aborts_max"};

std::string trim(std::string s) {
  boost::algorithm::trim(s);
  return s;
}

std::vector<std::string> split_list(const std::string& text, const char* separators) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::algorithm::is_any_of(separators),
                          boost::algorithm::token_compress_on);
  std::vector<std::string> out;
  for (auto& p : parts) {
    std::string t = trim(p);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument("");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = boost::algorithm::to_lower_copy(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::vector<std::size_t> parse_digits(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  const auto parts = split_list(text, ", ");
  if (parts.size() == 1 && parts.front().size() > 1) {
    for (char c : parts.front()) {
      if (c < '0' || c > '9') throw ConfigError(key + ": malformed digit list '" + text + "'");
      out.push_back(static_cast<std::size_t>(c - '0'));
    }
    return out;
  }
  for (const auto& p : parts) out.push_back(parse_count(key, p));
  return out;
}

ScenarioKind parse_kind(const std::string& text) {
  if (text == "consortium") return ScenarioKind::Consortium;
  if (text == "forged-ballot") return ScenarioKind::ForgedBallot;
  if (text == "paper-example") return ScenarioKind::PaperExample;
  throw ConfigError("scenario.kind: unknown kind '" + text + "'");
}

NodeSpec parse_node(const std::string& name, const std::string& flags) {
  NodeSpec spec{name, {}, true, true, false};
  for (const std::string& flag : split_list(flags, ", ")) {
    if (flag == "voter") {
      spec.roles.add(Role::Voter);
    } else if (flag == "bookkeeper") {
      spec.roles.add(Role::Bookkeeper);
    } else if (flag == "candidate") {
      spec.roles.add(Role::BookkeeperCandidate);
    } else if (flag == "qrng") {
      spec.is_qrng = true;
      spec.can_prepare_entangled = false;
    } else if (flag == "classical") {
      spec.quantum_capable = false;
      spec.can_prepare_entangled = false;
    } else if (flag == "no-entangle") {
      spec.can_prepare_entangled = false;
    } else if (flag != "ordinary") {
      throw ConfigError("roster." + name + ": unknown flag '" + flag + "'");
    }
  }
  return spec;
}

// Adversary sections name nodes; they are resolved once the roster is known.
struct PendingAction {
  std::string section;
  std::map<std::string, std::string> keys;
};

AdversaryAction resolve_action(const PendingAction& p, const std::map<std::string, NodeId>& ids) {
  auto node = [&](const std::string& key, const std::string& name) {
    auto it = ids.find(name);
    if (it == ids.end()) throw ConfigError(p.section + "." + key + ": unknown node '" + name + "'");
    return it->second;
  };
  AdversaryAction a;
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = p.keys.find(key);
    return it == p.keys.end() ? nullptr : &it->second;
  };
  const std::string* action = get("action");
  if (action == nullptr) throw ConfigError(p.section + ": missing 'action'");
  try {
    a.kind = AdversaryAction::parse_kind(*action);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(p.section + ": " + e.what());
  }
  for (const auto& [key, value] : p.keys) {
    const std::string full = p.section + "." + key;
    if (key == "action") continue;
    if (key == "at_rotation") {
      a.at_rotation = parse_count(full, value);
    } else if (key == "duration") {
      a.duration = parse_count(full, value);
    } else if (key == "forged") {
      a.forged.digits = value == "zeros" ? std::vector<std::size_t>{} : parse_digits(full, value);
    } else if (key == "value") {
      a.value = parse_count(full, value);
    } else if (key == "height") {
      a.height = parse_count(full, value);
    } else if (key == "delta") {
      try {
        a.delta = parse_angle(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(full + ": " + e.what());
      }
    } else if (key == "sender") {
      a.filter.sender = node(key, value);
    } else if (key == "receiver") {
      a.filter.receiver = node(key, value);
    } else if (key == "topic") {
      a.filter.topic = value;
    } else if (key == "groups") {
      for (const std::string& group : split_list(value, "|")) {
        std::vector<NodeId> members;
        for (const std::string& name : split_list(group, ", ")) members.push_back(node(key, name));
        a.groups.push_back(std::move(members));
      }
    } else {
      throw ConfigError(full + ": unknown key");
    }
  }
  return a;
}

bool parse_range(const std::string& spec, std::uint64_t& first, std::uint64_t& last) {
  const auto dash = spec.find('-');
  try {
    if (dash == std::string::npos) {
      first = last = std::stoull(spec);
    } else {
      first = std::stoull(spec.substr(0, dash));
      last = std::stoull(spec.substr(dash + 1));
    }
  } catch (const std::exception&) {
    return false;
  }
  return first <= last;
}

void check_expectation_key(const std::string& key, const std::string& value) {
  const auto at = key.find('@');
  if (at != std::string::npos) {
    const std::string base = key.substr(0, at);
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    if ((base != "finalized" && base != "finalized_min") || !parse_range(key.substr(at + 1), a, b)) {
      throw ConfigError("expect." + key + ": unknown expectation");
    }
    parse_count("expect." + key, value);
    return;
  }
  if (std::find(kExpectationKeys.begin(), kExpectationKeys.end(), key) == kExpectationKeys.end()) {
    throw ConfigError("expect." + key + ": unknown expectation");
  }
}

ScenarioConfig from_tree(const pt::ptree& tree) {
  ScenarioConfig config;
  std::vector<PendingAction> pending;
  bool have_roster = false;

  for (const auto& [section, body] : tree) {
    if (section == "scenario") {
      for (const auto& [key, node] : body) {
        const std::string v = trim(node.data());
        const std::string full = "scenario." + key;
        if (key == "name") {
          config.name = v;
        } else if (key == "kind") {
          config.kind = parse_kind(v);
        } else if (key == "seed") {
          config.consensus.seed = parse_count(full, v);
        } else if (key == "trials") {
          config.trials = parse_count(full, v);
        } else if (key == "threads") {
          config.threads = parse_count(full, v);
        } else if (key == "forged") {
          config.forged.digits = v == "zeros" ? std::vector<std::size_t>{} : parse_digits(full, v);
        } else {
          throw ConfigError(full + ": unknown key");
        }
      }
    } else if (section == "consortium") {
      ConsensusConfig& c = config.consensus;
      for (const auto& [key, node] : body) {
        const std::string v = trim(node.data());
        const std::string full = "consortium." + key;
        if (key == "n_voters") {
          c.n_voters = parse_count(full, v);
        } else if (key == "bookkeepers") {
          c.bookkeepers = parse_count(full, v);
        } else if (key == "rotations_per_tenure") {
          c.rotations_per_tenure = parse_count(full, v);
        } else if (key == "tenures") {
          c.tenures = parse_count(full, v);
        } else if (key == "m") {
          c.m = parse_count(full, v);
        } else if (key == "delta0") {
          c.delta0 = parse_count(full, v);
        } else if (key == "delta1") {
          c.delta1 = parse_count(full, v);
        } else if (key == "theta1") {
          try {
            c.theta1 = parse_angle(v);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(full + ": " + e.what());
          }
        } else if (key == "layout") {
          try {
            c.layout.kind = HyperedgeLayout::parse_kind(v);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(full + ": " + e.what());
          }
        } else if (key == "layout_weight") {
          c.layout.weight = parse_real(full, v);
        } else if (key == "allow_reselect") {
          c.allow_reselect = parse_bool(full, v);
        } else if (key == "max_retries") {
          c.max_retries = parse_count(full, v);
        } else if (key == "transactions_per_block") {
          c.transactions_per_block = parse_count(full, v);
        } else if (key == "verify_every_block") {
          c.verify_every_block = parse_bool(full, v);
        } else if (key == "votes") {
          c.votes = parse_digits(full, v);
        } else {
          throw ConfigError(full + ": unknown key");
        }
      }
    } else if (section == "roster") {
      have_roster = true;
      for (const auto& [key, node] : body) config.consensus.roster.push_back(parse_node(key, trim(node.data())));
    } else if (section.rfind("adversary", 0) == 0) {
      PendingAction p{section, {}};
      for (const auto& [key, node] : body) p.keys[key] = trim(node.data());
      pending.push_back(std::move(p));
    } else if (section == "expect") {
      for (const auto& [key, node] : body) {
        const std::string v = trim(node.data());
        check_expectation_key(key, v);
        config.expectations.emplace_back(key, v);
      }
    } else {
      throw ConfigError("unknown section [" + section + "]");
    }
  }

  const std::vector<NodeSpec> roster =
      have_roster ? config.consensus.roster
                  : default_roster(config.consensus.n_voters, config.consensus.bookkeepers);
  std::map<std::string, NodeId> ids;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    if (!ids.emplace(roster[i].name, static_cast<NodeId>(i)).second) {
      throw ConfigError("roster: duplicate node '" + roster[i].name + "'");
    }
  }
  if (have_roster) {
    config.consensus.n_voters = static_cast<std::size_t>(
        std::count_if(roster.begin(), roster.end(), [](const NodeSpec& s) { return s.roles.has(Role::Voter); }));
  }
  for (const PendingAction& p : pending) config.consensus.adversary.actions.push_back(resolve_action(p, ids));
  return config;
}

std::size_t hardware_threads(std::size_t requested) {
  if (requested != 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void run_forged_ballot(const ScenarioConfig& config, EventLog& log) {
  const ConsensusConfig& c = config.consensus;
  const std::size_t n = c.n_voters;
  const QuditRegister forged_state = config.forged.build(n, c.m);
  const double oracle = round_detection_probability(forged_state, /*boxes=*/true, n * c.delta0);
  log.append(0, "sim", "detection_oracle",
             {{"probability", oracle}, {"forged", config.forged.describe()}, {"tested_rows", n * c.delta0}});

  struct Trial {
    bool detected = false;
    std::size_t tester = 0;
    std::size_t row = 0;
  };
  std::vector<Trial> results(config.trials);
  std::vector<NodeId> voters(n);
  for (std::size_t k = 0; k < n; ++k) voters[k] = static_cast<NodeId>(k);

  auto run_trial = [&](std::size_t i) {
    const Entropy root(c.seed + i);
    QuantumStore store;
    BornSampler sampler(root.split("measurement"));
    DirectTransport transport(store);
    ForgingStateFactory factory(config.forged, std::nullopt);
    VotingSession session(SessionConfig{c.m, c.delta0, c.delta1, 0}, voters, static_cast<NodeId>(n), store,
                          sampler, root.split("test-choices"), transport);
    session.distribute_ballot_boxes(factory);
    const auto records = session.run_box_security_tests();
    if (session.aborted()) results[i] = Trial{true, records.back().tester, records.back().failing_row.value_or(0)};
  };

  const std::size_t workers = std::min(hardware_threads(config.threads), std::max<std::size_t>(1, config.trials));
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < config.trials; i += workers) run_trial(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < results.size(); ++i) {
    nlohmann::json data{{"trial", i}, {"seed", c.seed + i}, {"detected", results[i].detected}};
    if (results[i].detected) {
      data["tester"] = results[i].tester;
      data["row"] = results[i].row;
    }
    log.append(i + 1, "sim", "trial", std::move(data));
  }
}

void run_paper_example(EventLog& log) {
  const ExampleTranscript t = worked_example();
  const GoldenVerdict v = verify_example(t, &log);
  if (v.tally) {
    log.append(log.size(), "verifier", "session_result",
               {{"session", 1}, {"purpose", "worked-example"}, {"R", v.tally->row_sums}, {"N", v.tally->counts},
                {"electorate", v.tally->electorate}, {"accepted", v.tally->accepted}});
  }
  if (v.chain) {
    log.append(log.size(), "verifier", "chain_verified",
               {{"node", "example"}, {"fidelity", v.chain->fidelity}, {"ok", v.chain->ok},
                {"height", t.expected_thetas.size()}});
  }
}

std::string show_counts(const std::map<std::uint64_t, std::uint64_t>& counts) {
  std::ostringstream out;
  for (const auto& [id, n] : counts) out << id << ':' << n << ' ';
  return out.str();
}

}  // namespace

const char* scenario_kind_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Consortium: return "consortium";
    case ScenarioKind::ForgedBallot: return "forged-ballot";
    case ScenarioKind::PaperExample: return "paper-example";
  }
  return "unknown";
}

double parse_angle(std::string_view text) {
  std::string s;
  for (char ch : text) {
    if (ch != ' ') s.push_back(ch);
  }
  const auto pi = s.find("pi");
  if (pi == std::string::npos) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("malformed angle '" + std::string(text) + "'");
  }
  double factor = 1.0;
  double divisor = 1.0;
  try {
    if (pi > 0) {
      if (s[pi - 1] != '*') throw std::invalid_argument("");
      factor = std::stod(s.substr(0, pi - 1));
    }
    const std::string rest = s.substr(pi + 2);
    if (!rest.empty()) {
      if (rest[0] != '/') throw std::invalid_argument("");
      std::size_t used = 0;
      divisor = std::stod(rest.substr(1), &used);
      if (used != rest.size() - 1 || divisor == 0.0) throw std::invalid_argument("");
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed angle '" + std::string(text) + "'");
  }
  return factor * std::numbers::pi / divisor;
}

ScenarioConfig parse_scenario(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_tree(tree);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_scenario(in);
}

std::vector<std::string> builtin_scenario_names() {
  return {"paper-example", "honest-tenure", "forged-ballot", "partition", "qrng-audit"};
}

ScenarioConfig builtin_scenario(std::string_view name) {
  std::string text;
  if (name == "paper-example") {
    text = R"(
[scenario]
name = paper-example
kind = paper-example
[expect]
golden = true
tally_R = 0,0,0,1
tally_N0 = 3
accepted = true
min_chain_fidelity = 0.9999999999
)";
  } else if (name == "honest-tenure") {
    text = R"(
[scenario]
name = honest-tenure
seed = 1
[expect]
blocks_ordinary = 4
blocks_special = 1
chains_ok = true
min_chain_fidelity = 0.9999999999
random_audit = true
)";
  } else if (name == "forged-ballot") {
    text = R"(
[scenario]
name = forged-ballot
kind = forged-ballot
seed = 1
trials = 10000
forged = 0000
[consortium]
n_voters = 4
m = 2
delta0 = 1
[expect]
detection_tolerance = 0.03
)";
  } else if (name == "partition") {
    text = R"(
[scenario]
name = partition
seed = 7
[consortium]
rotations_per_tenure = 6
[adversary.1]
action = partition
at_rotation = 1
duration = 2
groups = V0 V1 V2 B0 B1 Q0 U0 | V3 B2
[adversary.2]
action = partition
at_rotation = 3
duration = 2
groups = V0 V1 B0 Q0 U0 | V2 V3 B1 B2
[expect]
minority_finalized = 0
finalized@1-2 = 2
finalized@3-4 = 0
finalized_min@5-6 = 1
blocks_special = 1
chains_ok = true
)";
  } else if (name == "qrng-audit") {
    text = R"(
[scenario]
name = qrng-audit
seed = 11
[consortium]
rotations_per_tenure = 10
tenures = 1000
verify_every_block = false
[adversary.1]
action = impersonate-qrng
at_rotation = 5
duration = 1
value = 424242
[expect]
selection_tolerance = 0.03
random_audit = true
impersonation_flagged = 1.0
chains_ok = true
)";
  } else {
    throw ConfigError("unknown built-in scenario '" + std::string(name) + "'");
  }
  std::istringstream in(text);
  return parse_scenario(in);
}

void validate_scenario(const ScenarioConfig& config) {
  const ConsensusConfig& c = config.consensus;
  if (c.n_voters < 2) throw ConfigError("n_voters must be at least 2");
  if (c.m < 2) throw ConfigError("m must be at least 2");
  if (!(c.theta1 > 0.0 && c.theta1 < std::numbers::pi / 4.0)) throw ConfigError("theta1 must lie in (0, pi/4)");
  if (c.bookkeepers == 0) throw ConfigError("bookkeepers must be at least 1");
  try {
    const std::vector<std::size_t> box_dims(c.n_voters, c.m);
    checked_dimension(box_dims);
    if (config.kind != ScenarioKind::ForgedBallot) {
      const std::vector<std::size_t> index_dims(c.n_voters, c.n_voters);
      checked_dimension(index_dims);
    }
  } catch (const DimensionGuardError& e) {
    throw ConfigError(std::string("state too large for the simulator: ") + e.what());
  }
  if (config.kind == ScenarioKind::Consortium) {
    if (c.rotations_per_tenure + 1 > kMaxChainBlocks) {
      throw ConfigError("rotations_per_tenure + 1 must not exceed " + std::to_string(kMaxChainBlocks) +
                        " (one entangled segment per tenure)");
    }
    if (!c.votes.empty() && c.votes.size() != c.n_voters) throw ConfigError("votes needs one entry per voter");
    for (std::size_t v : c.votes) {
      if (v >= c.m) throw ConfigError("votes must lie in [0, m)");
    }
  }
  if (config.kind == ScenarioKind::ForgedBallot) {
    if (config.trials == 0) throw ConfigError("trials must be positive");
    if (!config.forged.digits.empty() && config.forged.digits.size() != c.n_voters) {
      throw ConfigError("forged state needs one digit per voter");
    }
    for (std::size_t d : config.forged.digits) {
      if (d >= c.m) throw ConfigError("forged digits must lie in [0, m)");
    }
  }
}

LogLevel parse_log_level(std::string_view name) {
  if (name == "debug") return LogLevel::Debug;
  if (name == "info") return LogLevel::Info;
  throw ConfigError("unknown log level '" + std::string(name) + "'");
}

std::function<bool(std::string_view)> log_filter(LogLevel level) {
  if (level == LogLevel::Debug) return [](std::string_view) { return true; };
  return [](std::string_view kind) { return kind != "send" && kind != "deliver"; };
}

bool ScenarioResult::ok() const {
  return std::all_of(expectations.begin(), expectations.end(), [](const auto& e) { return e.ok; });
}

std::vector<ExpectationResult> check_expectations(const ScenarioConfig& config, const SummaryReport& r) {
  std::vector<ExpectationResult> out;
  for (const auto& [key, value] : config.expectations) {
    ExpectationResult e{key, false, ""};
    const std::string full = "expect." + key;
    auto count_is = [&](std::uint64_t actual) {
      e.ok = actual == parse_count(full, value);
      e.detail = "got " + std::to_string(actual);
    };
    const auto at = key.find('@');
    if (at != std::string::npos) {
      std::uint64_t first = 0;
      std::uint64_t last = 0;
      parse_range(key.substr(at + 1), first, last);
      const std::uint64_t got = r.finalized_between(first, last);
      if (key.substr(0, at) == "finalized") {
        count_is(got);
      } else {
        e.ok = got >= parse_count(full, value);
        e.detail = "got " + std::to_string(got);
      }
    } else if (key == "blocks_ordinary") {
      count_is(r.blocks_ordinary);
    } else if (key == "blocks_special") {
      count_is(r.blocks_special);
    } else if (key == "blocks_finalized") {
      count_is(r.blocks_finalized());
    } else if (key == "minority_finalized") {
      count_is(r.minority_finalized);
    } else if (key == "aborts_max") {
      e.ok = r.sessions_aborted <= parse_count(full, value);
      e.detail = "got " + std::to_string(r.sessions_aborted);
    } else if (key == "min_chain_fidelity") {
      e.ok = r.chain_verifications > 0 && r.min_chain_fidelity >= parse_real(full, value);
      e.detail = "got " + std::to_string(r.min_chain_fidelity) + " over " +
                 std::to_string(r.chain_verifications) + " verifications";
    } else if (key == "chains_ok") {
      e.ok = (r.chain_verifications > 0 && r.chains_ok) == parse_bool(full, value);
      e.detail = r.chains_ok ? "all chains verified" : "a chain failed verification";
    } else if (key == "detection_tolerance") {
      const double tol = parse_real(full, value);
      const double oracle = r.detection_oracle.value_or(-1.0);
      e.ok = r.trials > 0 && r.detection_oracle && std::abs(r.detection_rate() - oracle) <= tol;
      e.detail = "rate " + std::to_string(r.detection_rate()) + " vs oracle " + std::to_string(oracle);
    } else if (key == "selection_tolerance") {
      const double tol = parse_real(full, value);
      std::uint64_t total = 0;
      for (const auto& [id, n] : r.selection_counts) total += n;
      const double expected = 1.0 / static_cast<double>(config.consensus.bookkeepers);
      e.ok = total > 0 && r.selection_counts.size() == config.consensus.bookkeepers;
      for (const auto& [id, n] : r.selection_counts) {
        e.ok = e.ok && std::abs(static_cast<double>(n) / static_cast<double>(total) - expected) <= tol;
      }
      e.detail = show_counts(r.selection_counts) + "of " + std::to_string(total);
    } else if (key == "random_audit") {
      e.ok = (r.random_blocks > 0 && r.random_verified == r.random_blocks) == parse_bool(full, value);
      e.detail = std::to_string(r.random_verified) + "/" + std::to_string(r.random_blocks) + " verified";
    } else if (key == "impersonation_flagged") {
      const double need = parse_real(full, value);
      const double frac = r.impersonation_checks == 0
                              ? 0.0
                              : double(r.impersonation_flagged) / double(r.impersonation_checks);
      e.ok = r.impersonation_checks > 0 && frac >= need;
      e.detail = std::to_string(r.impersonation_flagged) + "/" + std::to_string(r.impersonation_checks);
    } else if (key == "golden") {
      e.ok = r.golden_ok.value_or(false) == parse_bool(full, value);
      e.detail = r.golden_ok.value_or(false) ? "all steps matched" : "failed at " + r.golden_failed_step;
    } else if (key == "tally_R" || key == "tally_N0" || key == "accepted") {
      if (r.tallies.empty()) {
        e.detail = "no tally recorded";
      } else {
        const TallyRecord& t = r.tallies.back();
        if (key == "tally_R") {
          std::vector<std::size_t> want;
          for (const auto& p : split_list(value, ", ")) want.push_back(parse_count(full, p));
          e.ok = t.row_sums == want;
          std::string got;
          for (std::size_t x : t.row_sums) got += std::to_string(x) + " ";
          e.detail = "got " + got;
        } else if (key == "tally_N0") {
          count_is(t.counts.empty() ? 0 : t.counts.front());
        } else {
          e.ok = t.accepted == parse_bool(full, value);
          e.detail = t.accepted ? "accepted" : "rejected";
        }
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& config, EventLog& log) {
  validate_scenario(config);
  auto builder = std::make_shared<ReportBuilder>();
  log.add_sink([builder](const Event& e) { builder->consume(e); });
  log.append(0, "sim", "scenario",
             {{"name", config.name}, {"kind", scenario_kind_name(config.kind)}, {"seed", config.consensus.seed},
              {"trials", config.kind == ScenarioKind::ForgedBallot ? config.trials : 0}});
  switch (config.kind) {
    case ScenarioKind::PaperExample:
      run_paper_example(log);
      break;
    case ScenarioKind::ForgedBallot:
      run_forged_ballot(config, log);
      break;
    case ScenarioKind::Consortium: {
      Consortium consortium(config.consensus, log);
      consortium.run();
      break;
    }
  }
  ScenarioResult result;
  result.report = builder->report();
  result.expectations = check_expectations(config, result.report);
  return result;
}

}  // namespace qpnv
