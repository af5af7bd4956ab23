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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "doctest.h"
#include "oracles.h"
#include "qpnv/qusim.h"

namespace {

void check_matches(const qpnv::QuditRegister& reg, const oracle::Dense& want) {
  REQUIRE(reg.dimension() == want.amp.size());
  for (std::size_t i = 0; i < want.amp.size(); ++i) {
    CHECK(std::abs(reg.amplitudes()[i] - want.amp[i]) < 1e-12);
  }
}

qpnv::QuditRegister random_register(std::size_t n, std::size_t m, std::uint64_t seed) {
  qpnv::Entropy e(seed);
  std::vector<qpnv::Amplitude> amps(oracle::ipow(m, n));
  for (auto& a : amps) a = {e.unit() - 0.5, e.unit() - 0.5};
  return qpnv::QuditRegister(std::vector<std::size_t>(n, m), amps);
}

}  // namespace

TEST_SUITE("qusim") {
  TEST_CASE("X states match brute-force enumeration") {
    for (std::size_t n = 2; n <= 5; ++n) {
      for (std::size_t m : {2, 3, 4}) {
        CAPTURE(n);
        CAPTURE(m);
        check_matches(qpnv::prepare_x(n, m), oracle::x_state(n, m));
      }
    }
  }

  TEST_CASE("S states match brute-force enumeration") {
    for (std::size_t n = 2; n <= 5; ++n) {
      CAPTURE(n);
      check_matches(qpnv::prepare_s(n), oracle::s_state(n));
    }
  }

  TEST_CASE("permutation parity agrees with inversion counting") {
    qpnv::Entropy e(5);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::size_t> p(6);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
      for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[e.below(i)]);
      CHECK((qpnv::permutation_parity(p) == 0 ? 1 : -1) == oracle::permutation_sign(p));
    }
    const std::vector<std::size_t> bad{0, 0, 1};
    CHECK_THROWS_AS(qpnv::permutation_parity(bad), std::invalid_argument);
    CHECK_FALSE(qpnv::is_permutation_of_range(bad));
  }

  TEST_CASE("site Fourier transform matches a naive DFT") {
    const std::size_t n = 3;
    const std::size_t m = 3;
    for (std::size_t site = 0; site < n; ++site) {
      auto reg = random_register(n, m, 11 + site);
      std::vector<qpnv::Amplitude> before(reg.amplitudes().begin(), reg.amplitudes().end());
      qpnv::fourier_transform_site(reg, site, /*inverse=*/false);
      for (std::size_t idx = 0; idx < before.size(); ++idx) {
        auto d = oracle::digits(idx, n, m);
        qpnv::Amplitude want = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          auto src = d;
          src[site] = j;
          std::size_t src_idx = 0;
          for (std::size_t v : src) src_idx = src_idx * m + v;
          want += std::polar(1.0, 2.0 * std::numbers::pi * double(j * d[site]) / double(m)) * before[src_idx];
        }
        want /= std::sqrt(double(m));
        CHECK(std::abs(reg.amplitudes()[idx] - want) < 1e-12);
      }
      qpnv::fourier_transform_site(reg, site, /*inverse=*/true);
      for (std::size_t idx = 0; idx < before.size(); ++idx) CHECK(std::abs(reg.amplitudes()[idx] - before[idx]) < 1e-12);
    }
  }

  TEST_CASE("site probabilities match the oracle marginals") {
    const auto reg = qpnv::prepare_x(3, 3);
    const auto x = oracle::x_state(3, 3);
    const auto comp = oracle::computational_distribution(x);
    const auto four = oracle::fourier_distribution(x);
    for (std::size_t site = 0; site < 3; ++site) {
      const auto pc = qpnv::site_probabilities(reg, site, qpnv::Basis::Computational);
      const auto pf = qpnv::site_probabilities(reg, site, qpnv::Basis::Fourier);
      for (std::size_t k = 0; k < 3; ++k) {
        const double wc = oracle::mass_where(comp, 3, 3, [&](const auto& d) { return d[site] == k; });
        const double wf = oracle::mass_where(four, 3, 3, [&](const auto& d) { return d[site] == k; });
        CHECK(pc[k] == doctest::Approx(wc).epsilon(1e-12));
        CHECK(pf[k] == doctest::Approx(wf).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("measurement collapses onto the observed outcome") {
    qpnv::BornSampler sampler(qpnv::Entropy(1));
    auto reg = qpnv::prepare_x(3, 2);
    const std::vector<std::size_t> first{0};
    const auto out = qpnv::measure(reg, first, qpnv::Basis::Computational, sampler);
    const auto p = qpnv::site_probabilities(reg, 0, qpnv::Basis::Computational);
    CHECK(p[out[0]] == doctest::Approx(1.0));
    CHECK(reg.norm_squared() == doctest::Approx(1.0));
  }

  TEST_CASE("Fourier measurement leaves the site in the measured Fourier state") {
    qpnv::BornSampler sampler(qpnv::Entropy(2));
    auto reg = qpnv::prepare_x(2, 3);
    const std::vector<std::size_t> site{1};
    const auto out = qpnv::measure(reg, site, qpnv::Basis::Fourier, sampler);
    const auto p = qpnv::site_probabilities(reg, 1, qpnv::Basis::Fourier);
    CHECK(p[out[0]] == doctest::Approx(1.0));
  }

  TEST_CASE("scripted sampler forces outcomes and rejects impossible ones") {
    qpnv::ScriptedSampler sampler;
    auto reg = qpnv::prepare_x(3, 2);
    reg.set_label(9);
    sampler.script(9, 0, 1);
    sampler.script(9, 1, 0);
    sampler.script(9, 2, 0);  // 1+0+0 is odd: impossible
    const std::vector<std::size_t> sites{0, 1, 2};
    CHECK_THROWS_WITH_AS(qpnv::measure(reg, sites, qpnv::Basis::Computational, sampler),
                         doctest::Contains("zero probability"), std::runtime_error);
    qpnv::ScriptedSampler empty;
    auto other = qpnv::prepare_x(2, 2);
    const std::vector<std::size_t> one{0};
    CHECK_THROWS_AS(qpnv::measure(other, one, qpnv::Basis::Computational, empty), std::runtime_error);
  }

  TEST_CASE("dimension guard") {
    const std::vector<std::size_t> big(25, 2);
    CHECK_THROWS_AS(qpnv::checked_dimension(big), qpnv::DimensionGuardError);
    CHECK_THROWS_AS(qpnv::prepare_s(11), qpnv::DimensionGuardError);
    const std::vector<std::size_t> ok(24, 2);
    CHECK(qpnv::checked_dimension(ok) == (std::size_t{1} << 24));
  }

  TEST_CASE("tensor puts the second register's sites last") {
    qpnv::QuditRegister a(std::vector<std::size_t>{2});
    qpnv::QuditRegister b(std::vector<std::size_t>{3}, {0.0, 0.0, 1.0});
    const auto t = a.tensor(b);
    const std::vector<std::size_t> d{0, 2};
    CHECK(std::abs(t.amplitude(d)) == doctest::Approx(1.0));
    CHECK(t.index_of(d) == 2);
  }

  TEST_CASE("weighted hyperedge phases only the all-ones branch") {
    auto reg = qpnv::new_plus_qubit().tensor(qpnv::new_plus_qubit());
    qpnv::apply_weighted_hyperedge(reg, qpnv::WeightedHyperedge{{0, 1}, 0.5});
    const auto amps = reg.amplitudes();
    CHECK(std::abs(amps[0] - qpnv::Amplitude(0.5)) < 1e-12);
    CHECK(std::abs(amps[2] - qpnv::Amplitude(0.5)) < 1e-12);
    CHECK(std::abs(amps[3] - std::polar(0.5, std::numbers::pi / 2)) < 1e-12);
  }

  TEST_CASE("fidelity") {
    const auto a = qpnv::prepare_x(2, 2);
    const auto b = a.clone_known_state();
    CHECK(qpnv::fidelity(a, b) == doctest::Approx(1.0));
    qpnv::QuditRegister c(std::vector<std::size_t>{2, 2}, {0.0, 1.0, 0.0, 0.0});
    CHECK(qpnv::fidelity(a, c) == doctest::Approx(0.0));
    const auto d = qpnv::prepare_x(3, 2);
    CHECK_THROWS_AS(qpnv::fidelity(a, d), std::invalid_argument);
  }

  TEST_CASE("dump writes one line per amplitude") {
    std::ostringstream out;
    qpnv::dump_amplitudes(qpnv::prepare_x(2, 2), out);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  }

  TEST_CASE("quantum store enforces particle ownership") {
    qpnv::QuantumStore store;
    qpnv::BornSampler sampler(qpnv::Entropy(4));
    const auto id = store.adopt(qpnv::prepare_x(2, 2), 10);
    const auto p0 = store.handle(id, 0);
    CHECK(store.owner(p0) == 10);
    CHECK_THROWS_AS(store.transfer(p0, 11, 12), qpnv::OwnershipError);
    CHECK_THROWS_AS(store.measure(p0, 11, qpnv::Basis::Computational, sampler), qpnv::OwnershipError);
    store.transfer(p0, 10, 11);
    CHECK(store.owner(p0) == 11);
    CHECK_NOTHROW(store.measure(p0, 11, qpnv::Basis::Computational, sampler));
    store.release(id);
    CHECK(store.live_registers() == 0);
    CHECK_FALSE(store.contains(id));
  }
}
