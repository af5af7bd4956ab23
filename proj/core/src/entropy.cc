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

#include "qpnv/entropy.h"

#include <stdexcept>

namespace qpnv {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Entropy::Entropy(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

Entropy Entropy::split(std::string_view name) const {
  return Entropy(mix64(seed_ ^ fnv1a64(name)));
}

Entropy Entropy::split(std::string_view name, std::uint64_t index) const {
  return Entropy(mix64(mix64(seed_ ^ fnv1a64(name)) + index));
}

std::uint64_t Entropy::next_u64() { return engine_(); }

std::uint64_t Entropy::below(std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("Entropy::below: bound must be positive");
  }
  // Rejection on the top of the range keeps the result exactly uniform.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v > limit);
  return v % bound;
}

double Entropy::unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

}  // namespace qpnv
