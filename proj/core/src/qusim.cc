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

#include "qpnv/qusim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

namespace qpnv {

namespace {

void check_site(const QuditRegister& reg, std::size_t site) {
  if (site >= reg.num_sites()) {
    throw std::out_of_range("site " + std::to_string(site) + " out of range for register with " +
                            std::to_string(reg.num_sites()) + " sites");
  }
}

std::vector<Amplitude> fourier_kernel(std::size_t m, bool inverse) {
  std::vector<Amplitude> kernel(m * m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  const double sign = inverse ? -1.0 : 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      // Reduce jk mod m before the angle so large m keeps exact roots of unity.
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((j * k) % m) /
                           static_cast<double>(m);
      kernel[k * m + j] = std::polar(scale, angle);  // <k|F|j>
    }
  }
  return kernel;
}

}  // namespace

const char* basis_name(Basis basis) {
  return basis == Basis::Computational ? "computational" : "fourier";
}

std::size_t checked_dimension(std::span<const std::size_t> dims) {
  std::size_t total = 1;
  for (std::size_t d : dims) {
    if (d < 2) {
      throw std::invalid_argument("every site needs at least 2 levels");
    }
    if (total > kMaxDimension / d) {
      throw DimensionGuardError("register dimension exceeds 2^24");
    }
    total *= d;
  }
  return total;
}

QuditRegister::QuditRegister(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  amplitudes_.assign(checked_dimension(dims_), Amplitude{0.0, 0.0});
  amplitudes_[0] = 1.0;
  compute_strides();
}

QuditRegister::QuditRegister(std::vector<std::size_t> dims, std::vector<Amplitude> amplitudes)
    : dims_(std::move(dims)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != checked_dimension(dims_)) {
    throw std::invalid_argument("amplitude count does not match register dimension");
  }
  if (norm_squared() == 0.0) {
    throw std::invalid_argument("zero vector is not a state");
  }
  compute_strides();
  renormalize();
}

void QuditRegister::compute_strides() {
  strides_.assign(dims_.size(), 1);
  for (std::size_t s = dims_.size(); s-- > 1;) {
    strides_[s - 1] = strides_[s] * dims_[s];
  }
}

QuditRegister QuditRegister::clone_known_state() const {
  QuditRegister copy(dims_);
  copy.amplitudes_ = amplitudes_;
  return copy;
}

std::size_t QuditRegister::index_of(std::span<const std::size_t> digits) const {
  if (digits.size() != dims_.size()) {
    throw std::invalid_argument("digit string length does not match site count");
  }
  std::size_t index = 0;
  for (std::size_t s = 0; s < dims_.size(); ++s) {
    if (digits[s] >= dims_[s]) {
      throw std::out_of_range("digit exceeds site level");
    }
    index += digits[s] * strides_[s];
  }
  return index;
}

std::vector<std::size_t> QuditRegister::digits_of(std::size_t index) const {
  std::vector<std::size_t> digits(dims_.size());
  for (std::size_t s = 0; s < dims_.size(); ++s) {
    digits[s] = (index / strides_[s]) % dims_[s];
  }
  return digits;
}

Amplitude QuditRegister::amplitude(std::span<const std::size_t> digits) const {
  return amplitudes_[index_of(digits)];
}

double QuditRegister::norm_squared() const {
  double total = 0.0;
  for (const Amplitude& a : amplitudes_) total += std::norm(a);
  return total;
}

void QuditRegister::renormalize() {
  const double scale = 1.0 / std::sqrt(norm_squared());
  for (Amplitude& a : amplitudes_) a *= scale;
}

QuditRegister QuditRegister::tensor(const QuditRegister& other) const {
  std::vector<std::size_t> dims = dims_;
  dims.insert(dims.end(), other.dims_.begin(), other.dims_.end());
  QuditRegister out(std::move(dims));
  const std::size_t inner = other.dimension();
  for (std::size_t i = 0; i < dimension(); ++i) {
    for (std::size_t j = 0; j < inner; ++j) {
      out.amplitudes_[i * inner + j] = amplitudes_[i] * other.amplitudes_[j];
    }
  }
  return out;
}

QuditRegister new_plus_qubit() {
  const double h = 1.0 / std::sqrt(2.0);
  return QuditRegister({2}, {Amplitude{h, 0.0}, Amplitude{h, 0.0}});
}

QuditRegister prepare_x(std::size_t n, std::size_t m) {
  if (n < 2 || m < 2) {
    throw std::invalid_argument("prepare_x needs n >= 2 and m >= 2");
  }
  QuditRegister reg(std::vector<std::size_t>(n, m));
  const double amp = 1.0 / std::sqrt(std::pow(static_cast<double>(m), static_cast<double>(n - 1)));
  auto amps = reg.mutable_amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    // Digit sum mod m of the base-m expansion of i.
    std::size_t sum = 0;
    for (std::size_t rest = i; rest != 0; rest /= m) sum += rest % m;
    amps[i] = (sum % m == 0) ? Amplitude{amp, 0.0} : Amplitude{0.0, 0.0};
  }
  return reg;
}

QuditRegister prepare_s(std::size_t n) {
  if (n < 2) {
    throw std::invalid_argument("prepare_s needs n >= 2");
  }
  QuditRegister reg(std::vector<std::size_t>(n, n));
  auto amps = reg.mutable_amplitudes();
  std::fill(amps.begin(), amps.end(), Amplitude{0.0, 0.0});
  double count = 1.0;
  for (std::size_t k = 2; k <= n; ++k) count *= static_cast<double>(k);
  const double amp = 1.0 / std::sqrt(count);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    const double sign = permutation_parity(perm) == 0 ? 1.0 : -1.0;
    amps[reg.index_of(perm)] = Amplitude{sign * amp, 0.0};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return reg;
}

bool is_permutation_of_range(std::span<const std::size_t> values) {
  std::vector<bool> seen(values.size(), false);
  for (std::size_t v : values) {
    if (v >= values.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

int permutation_parity(std::span<const std::size_t> perm) {
  if (!is_permutation_of_range(perm)) {
    throw std::invalid_argument("input is not a permutation of {0..n-1}");
  }
  // n minus the number of cycles is the minimal transposition count.
  std::vector<bool> visited(perm.size(), false);
  std::size_t cycles = 0;
  for (std::size_t start = 0; start < perm.size(); ++start) {
    if (visited[start]) continue;
    ++cycles;
    for (std::size_t i = start; !visited[i]; i = perm[i]) visited[i] = true;
  }
  return static_cast<int>((perm.size() - cycles) % 2);
}

void apply_phase(QuditRegister& reg, std::size_t site, double theta) {
  check_site(reg, site);
  if (reg.dims()[site] != 2) {
    throw std::invalid_argument("apply_phase needs a 2-level site");
  }
  const Amplitude phase = std::polar(1.0, theta);
  const std::size_t stride = reg.stride(site);
  auto amps = reg.mutable_amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if ((i / stride) % 2 == 1) amps[i] *= phase;
  }
}

void apply_weighted_hyperedge(QuditRegister& reg, const WeightedHyperedge& edge) {
  if (edge.sites.empty()) {
    throw std::invalid_argument("hyperedge needs at least one site");
  }
  for (std::size_t site : edge.sites) check_site(reg, site);
  const Amplitude phase = std::polar(1.0, std::numbers::pi * edge.weight);
  auto amps = reg.mutable_amplitudes();
  const auto& dims = reg.dims();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    bool all_top = true;
    for (std::size_t site : edge.sites) {
      if ((i / reg.stride(site)) % dims[site] != dims[site] - 1) {
        all_top = false;
        break;
      }
    }
    if (all_top) amps[i] *= phase;
  }
}

void fourier_transform_site(QuditRegister& reg, std::size_t site, bool inverse) {
  check_site(reg, site);
  const std::size_t m = reg.dims()[site];
  const std::size_t stride = reg.stride(site);
  const std::size_t block = stride * m;
  const std::vector<Amplitude> kernel = fourier_kernel(m, inverse);
  auto amps = reg.mutable_amplitudes();
  std::vector<Amplitude> in(m), out(m);
  for (std::size_t base = 0; base < amps.size(); base += block) {
    for (std::size_t low = 0; low < stride; ++low) {
      for (std::size_t j = 0; j < m; ++j) in[j] = amps[base + j * stride + low];
      for (std::size_t k = 0; k < m; ++k) {
        Amplitude acc{0.0, 0.0};
        for (std::size_t j = 0; j < m; ++j) acc += kernel[k * m + j] * in[j];
        out[k] = acc;
      }
      for (std::size_t k = 0; k < m; ++k) amps[base + k * stride + low] = out[k];
    }
  }
}

namespace {

std::vector<double> computational_marginal(const QuditRegister& reg, std::size_t site) {
  const std::size_t m = reg.dims()[site];
  const std::size_t stride = reg.stride(site);
  std::vector<double> probs(m, 0.0);
  auto amps = reg.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) probs[(i / stride) % m] += std::norm(amps[i]);
  return probs;
}

void project(QuditRegister& reg, std::size_t site, std::size_t outcome) {
  const std::size_t m = reg.dims()[site];
  const std::size_t stride = reg.stride(site);
  auto amps = reg.mutable_amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if ((i / stride) % m != outcome) amps[i] = Amplitude{0.0, 0.0};
  }
  reg.renormalize();
}

}  // namespace

std::vector<double> site_probabilities(const QuditRegister& reg, std::size_t site, Basis basis) {
  check_site(reg, site);
  if (basis == Basis::Computational) return computational_marginal(reg, site);
  QuditRegister rotated = reg.clone_known_state();
  fourier_transform_site(rotated, site, /*inverse=*/true);
  return computational_marginal(rotated, site);
}

std::size_t BornSampler::pick(const SampleRequest& request) {
  const double u = stream_.unit();
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t k = 0; k < request.probabilities.size(); ++k) {
    const double p = request.probabilities[k];
    if (p <= 0.0) continue;
    last_nonzero = k;
    acc += p;
    if (u < acc) return k;
  }
  // Rounding can leave the cumulative sum a hair under 1.
  return last_nonzero;
}

void ScriptedSampler::script(RegisterId label, std::size_t site, std::size_t outcome) {
  script_[{label, site}] = outcome;
}

std::size_t ScriptedSampler::pick(const SampleRequest& request) {
  auto it = script_.find({request.register_label, request.site});
  if (it == script_.end()) {
    if (fallback_ != nullptr) return fallback_->pick(request);
    throw std::runtime_error("no scripted outcome for register " +
                             std::to_string(request.register_label) + " site " +
                             std::to_string(request.site));
  }
  const std::size_t outcome = it->second;
  if (outcome >= request.probabilities.size() || request.probabilities[outcome] < 1e-12) {
    throw std::runtime_error("scripted outcome " + std::to_string(outcome) +
                             " has zero probability at register " +
                             std::to_string(request.register_label) + " site " +
                             std::to_string(request.site));
  }
  return outcome;
}

std::vector<std::size_t> measure(QuditRegister& reg, std::span<const std::size_t> sites,
                                 Basis basis, OutcomeSampler& sampler) {
  for (std::size_t a = 0; a < sites.size(); ++a) {
    check_site(reg, sites[a]);
    for (std::size_t b = a + 1; b < sites.size(); ++b) {
      if (sites[a] == sites[b]) throw std::invalid_argument("measured sites must be distinct");
    }
  }
  std::vector<std::size_t> outcomes;
  outcomes.reserve(sites.size());
  for (std::size_t site : sites) {
    if (basis == Basis::Fourier) fourier_transform_site(reg, site, /*inverse=*/true);
    const std::vector<double> probs = computational_marginal(reg, site);
    const std::size_t outcome = sampler.pick({reg.label(), site, basis, probs});
    project(reg, site, outcome);
    if (basis == Basis::Fourier) fourier_transform_site(reg, site, /*inverse=*/false);
    outcomes.push_back(outcome);
  }
  return outcomes;
}

double fidelity(const QuditRegister& a, const QuditRegister& b) {
  if (a.dims() != b.dims()) {
    throw std::invalid_argument("fidelity needs registers with identical dims");
  }
  Amplitude overlap{0.0, 0.0};
  auto x = a.amplitudes();
  auto y = b.amplitudes();
  for (std::size_t i = 0; i < x.size(); ++i) overlap += std::conj(x[i]) * y[i];
  return std::clamp(std::norm(overlap), 0.0, 1.0);
}

void dump_amplitudes(const QuditRegister& reg, std::ostream& out) {
  auto amps = reg.amplitudes();
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    out << i << ' ' << amps[i].real() << ' ' << amps[i].imag() << '\n';
  }
  out.precision(old_precision);
}

QuantumStore::Entry& QuantumStore::entry(RegisterId id) {
  auto it = registers_.find(id);
  if (it == registers_.end()) throw std::out_of_range("unknown register " + std::to_string(id));
  return it->second;
}

const QuantumStore::Entry& QuantumStore::entry(RegisterId id) const {
  auto it = registers_.find(id);
  if (it == registers_.end()) throw std::out_of_range("unknown register " + std::to_string(id));
  return it->second;
}

RegisterId QuantumStore::adopt(QuditRegister reg, NodeId owner) {
  const RegisterId id = next_id_++;
  reg.set_label(id);
  std::vector<NodeId> owners(reg.num_sites(), owner);
  registers_.emplace(id, Entry{std::move(reg), std::move(owners)});
  return id;
}

ParticleHandle QuantumStore::handle(RegisterId id, std::size_t site) const {
  const Entry& e = entry(id);
  if (site >= e.reg.num_sites()) throw std::out_of_range("handle site out of range");
  return ParticleHandle{id, site};
}

const QuditRegister& QuantumStore::at(RegisterId id) const { return entry(id).reg; }
QuditRegister& QuantumStore::at(RegisterId id) { return entry(id).reg; }

NodeId QuantumStore::owner(ParticleHandle particle) const {
  return entry(particle.register_id).owners.at(particle.site);
}

void QuantumStore::transfer(ParticleHandle particle, NodeId from, NodeId to) {
  NodeId& current = entry(particle.register_id).owners.at(particle.site);
  if (current != from) {
    throw OwnershipError("node " + std::to_string(from) + " does not own particle " +
                         std::to_string(particle.register_id) + ":" +
                         std::to_string(particle.site));
  }
  current = to;
}

std::size_t QuantumStore::measure(ParticleHandle particle, NodeId who, Basis basis,
                                  OutcomeSampler& sampler) {
  Entry& e = entry(particle.register_id);
  if (e.owners.at(particle.site) != who) {
    throw OwnershipError("node " + std::to_string(who) + " cannot measure a particle it does not own");
  }
  const std::size_t site = particle.site;
  return qpnv::measure(e.reg, std::span<const std::size_t>(&site, 1), basis, sampler).front();
}

void QuantumStore::release(RegisterId id) { registers_.erase(id); }

}  // namespace qpnv
