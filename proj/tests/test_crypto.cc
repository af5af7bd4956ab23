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

#include <string>

#include "doctest.h"
#include "qpnv/crypto.h"

TEST_SUITE("crypto") {
  TEST_CASE("sha256 of abc") {
    CHECK(qpnv::to_hex(qpnv::sha256("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("hmac-sha256 with a 32-byte key") {
    // Key 0x01..0x20 over "abc", computed independently with Python's hmac module.
    qpnv::SymmetricKey key{};
    for (std::size_t i = 0; i < key.size(); ++i) key[i] = static_cast<std::uint8_t>(i + 1);
    CHECK(qpnv::to_hex(qpnv::hmac_sha256(key, "abc")) ==
          "a21b1f5d4cf4f73a4dd939750f7a066a7f98cc131cb16a6692759021cfab8181");
  }

  TEST_CASE("streaming digest equals the one-shot digest") {
    qpnv::Sha256Stream s;
    s.update("hello ");
    const auto partial = s.digest();
    s.update("world");
    CHECK(partial == qpnv::sha256("hello "));
    CHECK(s.digest() == qpnv::sha256("hello world"));
    CHECK(s.bytes() == 11);
  }

  TEST_CASE("hex round trip and malformed input") {
    const auto d = qpnv::sha256("x");
    CHECK(qpnv::digest_from_hex(qpnv::to_hex(d)) == d);
    CHECK_FALSE(qpnv::digest_from_hex("abc").has_value());
    CHECK_FALSE(qpnv::digest_from_hex(std::string(64, 'g')).has_value());
  }

  TEST_CASE("transaction digest is unambiguous under concatenation") {
    const std::vector<std::string> a{"ab", "c"};
    const std::vector<std::string> b{"a", "bc"};
    CHECK(qpnv::digest_transactions(a) != qpnv::digest_transactions(b));
  }

  TEST_CASE("tag comparison") {
    auto t = qpnv::sha256("t");
    CHECK(qpnv::tags_equal(t, t));
    auto u = t;
    u[31] ^= 1;
    CHECK_FALSE(qpnv::tags_equal(t, u));
  }
}
