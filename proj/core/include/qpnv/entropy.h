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

#ifndef QPNV_ENTROPY_H
#define QPNV_ENTROPY_H

#include <cstdint>
#include <random>
#include <string_view>

namespace qpnv {

/// Seeded, splittable entropy stream.
///
/// Every random decision in a simulation is drawn from a stream derived from
/// one root seed by name, so that a scenario replays bit-identically. Bounded
/// integers and unit doubles are derived here rather than through the
/// <random> distributions, whose output differs between standard libraries.
class Entropy {
 public:
  explicit Entropy(std::uint64_t seed);

  /// Child stream whose seed depends only on this stream's seed and `name`.
  /// Splitting does not advance the parent.
  Entropy split(std::string_view name) const;
  Entropy split(std::string_view name, std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform in [0, bound). `bound` must be positive.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform in [0, 1) with 53 bits of resolution.
  double unit();
  bool coin() { return (next_u64() >> 63) != 0; }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over bytes; used to turn stream names into seed material.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace qpnv

#endif  // QPNV_ENTROPY_H
