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

#ifndef QPNV_CRYPTO_H
#define QPNV_CRYPTO_H

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qpnv {

using Digest = std::array<std::uint8_t, 32>;
using SymmetricKey = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
Digest hmac_sha256(const SymmetricKey& key, std::string_view message);
std::string to_hex(std::span<const std::uint8_t> bytes);
/// Parses 64 hex digits; empty on malformed input.
std::optional<Digest> digest_from_hex(std::string_view hex);

/// Digest of a transaction list; each entry is length-prefixed so the
/// encoding is unambiguous.
std::string digest_transactions(std::span<const std::string> transactions);

/// Incremental SHA-256, for digesting long event streams.
class Sha256Stream {
 public:
  Sha256Stream();
  ~Sha256Stream();
  Sha256Stream(const Sha256Stream&) = delete;
  Sha256Stream& operator=(const Sha256Stream&) = delete;

  void update(std::string_view bytes);
  /// Digest of everything fed so far; the stream can keep accepting data.
  Digest digest() const;
  std::uint64_t bytes() const { return bytes_; }

 private:
  void* ctx_;
  std::uint64_t bytes_ = 0;
};

/// Constant-time equality for tags.
bool tags_equal(const Digest& a, const Digest& b);

}  // namespace qpnv

#endif  // QPNV_CRYPTO_H
