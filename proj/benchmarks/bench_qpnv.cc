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

#include <numbers>

#include <benchmark/benchmark.h>

#include "qpnv/consensus.h"
#include "qpnv/ledger.h"
#include "qpnv/qusim.h"
#include "qpnv/voting.h"

namespace {

void BM_PrepareX(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(qpnv::prepare_x(n, 3));
}
BENCHMARK(BM_PrepareX)->DenseRange(2, 8, 2);

void BM_PrepareS(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(qpnv::prepare_s(n));
}
BENCHMARK(BM_PrepareS)->DenseRange(2, 6);

void BM_FourierMeasureAll(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  qpnv::BornSampler sampler(qpnv::Entropy(1));
  std::vector<std::size_t> sites(n);
  for (std::size_t i = 0; i < n; ++i) sites[i] = i;
  for (auto _ : state) {
    auto reg = qpnv::prepare_x(n, 2);
    benchmark::DoNotOptimize(qpnv::measure(reg, sites, qpnv::Basis::Fourier, sampler));
  }
}
BENCHMARK(BM_FourierMeasureAll)->DenseRange(2, 12, 2);

void BM_VotingSession(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<qpnv::NodeId> voters(n);
  for (std::size_t i = 0; i < n; ++i) voters[i] = static_cast<qpnv::NodeId>(i + 1);
  qpnv::QuantumStore store;
  qpnv::BornSampler sampler(qpnv::Entropy(2));
  qpnv::DirectTransport transport(store);
  qpnv::HonestStateFactory factory;
  std::uint64_t i = 0;
  for (auto _ : state) {
    qpnv::VotingSession s({}, voters, 0, store, sampler, qpnv::Entropy(++i), transport);
    s.distribute_ballot_boxes(factory);
    s.run_box_security_tests();
    s.measure_ballots();
    s.distribute_ballot_indexes(factory);
    s.run_index_security_tests();
    s.measure_indexes();
    for (std::size_t k = 0; k < n; ++k) s.cast_vote(k, k % 2);
    benchmark::DoNotOptimize(s.publish_and_tally());
  }
}
BENCHMARK(BM_VotingSession)->DenseRange(3, 6)->Unit(benchmark::kMicrosecond);

void BM_ChainVerify(benchmark::State& state) {
  const auto blocks = static_cast<std::size_t>(state.range(0));
  const qpnv::ThetaSchedule schedule(std::numbers::pi / 8);
  qpnv::ChainState chain(schedule, qpnv::HyperedgeLayout{});
  qpnv::TallyResult yes;
  yes.counts = {1, 0};
  yes.accepted = true;
  for (std::size_t p = 1; p <= blocks; ++p) {
    auto b = qpnv::encode_block("b", p, schedule);
    b.record.vote_summary = yes;
    chain.append_block(std::move(b));
  }
  for (auto _ : state) benchmark::DoNotOptimize(chain.verify());
}
BENCHMARK(BM_ChainVerify)->RangeMultiplier(2)->Range(2, 16);

void BM_HonestTenure(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    qpnv::ConsensusConfig c;
    c.seed = ++seed;
    qpnv::EventLog log(false);
    qpnv::Consortium sim(c, log);
    sim.run();
    benchmark::DoNotOptimize(sim.finalized_blocks());
  }
}
BENCHMARK(BM_HonestTenure)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
