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

#ifndef QPNV_QUSIM_H
#define QPNV_QUSIM_H

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "qpnv/entropy.h"

namespace qpnv {

using Amplitude = std::complex<double>;
using NodeId = std::uint32_t;
using RegisterId = std::uint64_t;

/// Largest total dimension (product of site levels) a register may have.
inline constexpr std::size_t kMaxDimension = std::size_t{1} << 24;

/// Thrown when a requested register would exceed kMaxDimension.
class DimensionGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

enum class Basis { Computational, Fourier };

const char* basis_name(Basis basis);

/// A phase e^{i*pi*weight} applied to every basis string whose `sites` are
/// all at their top level (dim - 1). Weight 1 on qubits is C^kZ.
struct WeightedHyperedge {
  std::vector<std::size_t> sites;
  double weight = 1.0;
};

/// Dense statevector over a list of qudit sites. Site 0 is the most
/// significant digit of the amplitude index, so amplitudes are stored in
/// lexicographic order of the basis strings.
///
/// Registers are move-only: the only way to obtain a second register in the
/// same state is clone_known_state(), which callers use when they hold the
/// classical description of the state they prepared.
class QuditRegister {
 public:
  /// |0...0> over `dims`. Throws DimensionGuardError above kMaxDimension.
  explicit QuditRegister(std::vector<std::size_t> dims);
  /// Normalizes `amplitudes`; throws if the length does not match or the
  /// vector is zero.
  QuditRegister(std::vector<std::size_t> dims, std::vector<Amplitude> amplitudes);

  QuditRegister(QuditRegister&&) noexcept = default;
  QuditRegister& operator=(QuditRegister&&) noexcept = default;
  QuditRegister(const QuditRegister&) = delete;
  QuditRegister& operator=(const QuditRegister&) = delete;

  QuditRegister clone_known_state() const;

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t num_sites() const { return dims_.size(); }
  std::size_t dimension() const { return amplitudes_.size(); }
  std::span<const Amplitude> amplitudes() const { return amplitudes_; }
  std::span<Amplitude> mutable_amplitudes() { return amplitudes_; }
  Amplitude amplitude(std::span<const std::size_t> digits) const;

  std::size_t index_of(std::span<const std::size_t> digits) const;
  std::vector<std::size_t> digits_of(std::size_t index) const;
  std::size_t stride(std::size_t site) const { return strides_.at(site); }

  double norm_squared() const;
  void renormalize();

  /// Label assigned by a QuantumStore; 0 for free-standing registers.
  RegisterId label() const { return label_; }
  void set_label(RegisterId label) { label_ = label; }

  /// |this> (x) |other>; sites of `other` follow this register's sites.
  QuditRegister tensor(const QuditRegister& other) const;

 private:
  void compute_strides();

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::vector<Amplitude> amplitudes_;
  RegisterId label_ = 0;
};

/// Computes the dimension of `dims`, throwing DimensionGuardError when it
/// exceeds kMaxDimension.
std::size_t checked_dimension(std::span<const std::size_t> dims);

QuditRegister new_plus_qubit();

/// m-level n-particle state: equal superposition of every string whose digit
/// sum is 0 mod m.
QuditRegister prepare_x(std::size_t n, std::size_t m);

/// n-level n-particle antisymmetric state: sum over permutations of
/// {0..n-1} with sign (-1)^parity, normalized by 1/sqrt(n!).
QuditRegister prepare_s(std::size_t n);

/// Parity (0 or 1) of the transpositions needed to sort `perm` into
/// 0,1,...,n-1. Throws std::invalid_argument when `perm` is not a
/// permutation of {0..n-1}.
int permutation_parity(std::span<const std::size_t> perm);
bool is_permutation_of_range(std::span<const std::size_t> values);

/// Multiplies the |1> branch of a 2-level site by e^{i*theta}.
void apply_phase(QuditRegister& reg, std::size_t site, double theta);

void apply_weighted_hyperedge(QuditRegister& reg, const WeightedHyperedge& edge);

/// Site-local transform with kernel (1/sqrt(m)) e^{+2*pi*i*j*k/m};
/// `inverse` uses the conjugate kernel.
void fourier_transform_site(QuditRegister& reg, std::size_t site, bool inverse);

/// Everything a sampler needs to choose one measurement outcome.
struct SampleRequest {
  RegisterId register_label = 0;
  std::size_t site = 0;
  Basis basis = Basis::Computational;
  std::span<const double> probabilities;
};

/// Chooses measurement outcomes. The default is Born-rule sampling from a
/// seeded stream; verification runs swap in a scripted sampler.
class OutcomeSampler {
 public:
  virtual ~OutcomeSampler() = default;
  virtual std::size_t pick(const SampleRequest& request) = 0;
};

class BornSampler final : public OutcomeSampler {
 public:
  explicit BornSampler(Entropy stream) : stream_(std::move(stream)) {}
  std::size_t pick(const SampleRequest& request) override;
  Entropy& stream() { return stream_; }

 private:
  Entropy stream_;
};

/// Returns pre-registered outcomes keyed by (register label, site). An
/// unscripted request goes to `fallback` when set and throws otherwise. A
/// scripted outcome with zero Born probability is rejected, so a forced
/// transcript can never describe an impossible measurement.
class ScriptedSampler final : public OutcomeSampler {
 public:
  explicit ScriptedSampler(OutcomeSampler* fallback = nullptr) : fallback_(fallback) {}

  void script(RegisterId label, std::size_t site, std::size_t outcome);
  std::size_t pick(const SampleRequest& request) override;
  std::size_t scripted_count() const { return script_.size(); }

 private:
  std::map<std::pair<RegisterId, std::size_t>, std::size_t> script_;
  OutcomeSampler* fallback_;
};

/// Measures `sites` one after another, collapsing and renormalizing after
/// each. In the Fourier basis each site is rotated by the inverse transform,
/// measured computationally and rotated back, so the register is left in the
/// Fourier eigenstate and outcomes carry the Fourier labels.
std::vector<std::size_t> measure(QuditRegister& reg, std::span<const std::size_t> sites,
                                 Basis basis, OutcomeSampler& sampler);

/// Marginal outcome distribution of one site without collapsing.
std::vector<double> site_probabilities(const QuditRegister& reg, std::size_t site, Basis basis);

/// |<a|b>|^2. Throws std::invalid_argument when dims differ.
double fidelity(const QuditRegister& a, const QuditRegister& b);

/// Writes "index real imag" lines, one per amplitude.
void dump_amplitudes(const QuditRegister& reg, std::ostream& out);

/// Identifies one site of one register held in a QuantumStore.
struct ParticleHandle {
  RegisterId register_id = 0;
  std::size_t site = 0;

  friend bool operator==(const ParticleHandle&, const ParticleHandle&) = default;
  friend auto operator<=>(const ParticleHandle&, const ParticleHandle&) = default;
};

class OwnershipError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Holds registers on behalf of protocol nodes and tracks which node owns
/// each particle. A particle has exactly one owner; only the owner may
/// measure it or hand it on.
class QuantumStore {
 public:
  /// Takes the register; every site is initially owned by `owner`.
  RegisterId adopt(QuditRegister reg, NodeId owner);
  ParticleHandle handle(RegisterId id, std::size_t site) const;

  const QuditRegister& at(RegisterId id) const;
  QuditRegister& at(RegisterId id);
  bool contains(RegisterId id) const { return registers_.count(id) != 0; }

  NodeId owner(ParticleHandle particle) const;
  void transfer(ParticleHandle particle, NodeId from, NodeId to);

  std::size_t measure(ParticleHandle particle, NodeId who, Basis basis, OutcomeSampler& sampler);

  void release(RegisterId id);
  std::size_t live_registers() const { return registers_.size(); }

 private:
  struct Entry {
    QuditRegister reg;
    std::vector<NodeId> owners;
  };
  Entry& entry(RegisterId id);
  const Entry& entry(RegisterId id) const;

  RegisterId next_id_ = 1;
  std::unordered_map<RegisterId, Entry> registers_;
};

}  // namespace qpnv

#endif  // QPNV_QUSIM_H
