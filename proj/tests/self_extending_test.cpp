// Copyright 2026 The DVS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <gtest/gtest.h>

#include "dvs/self_extending.hpp"
#include "oracles.hpp"

namespace dvs {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

TEST(SelfExtendingTest, SmallValues) {
  EXPECT_EQ(encode_uint(0), (Bytes{0x00}));
  EXPECT_EQ(encode_uint(31), (Bytes{0x1F}));
  EXPECT_EQ(encode_uint(32), (Bytes{0x20, 0x20}));
  EXPECT_EQ(encode_uint(8191).size(), 2u);
  EXPECT_EQ(encode_uint(8192).size(), 3u);
}

TEST(SelfExtendingTest, DecodeExamples) {
  EXPECT_EQ(decode_uint(Bytes{0x1F}), (DecodedUint{31, 1}));
  EXPECT_EQ(decode_uint(Bytes{0x20, 0x20}), (DecodedUint{32, 2}));
  EXPECT_EQ(code_of([] { decode_uint(Bytes{0x20, 0x1F}); }), ErrorCode::NonCanonical);
  EXPECT_EQ(code_of([] { decode_uint(Bytes{0x40, 0x01}); }), ErrorCode::Truncated);
  EXPECT_EQ(code_of([] { decode_uint(Bytes{}); }), ErrorCode::Truncated);
}

TEST(SelfExtendingTest, DecodeIgnoresTrailingBytes) {
  EXPECT_EQ(decode_uint(Bytes{0x05, 0xFF, 0xFF}), (DecodedUint{5, 1}));
}

TEST(SelfExtendingTest, LengthBoundaries) {
  const std::uint64_t thresholds[] = {32, 8192, 2097152, 536870912ull, 137438953472ull,
                                      35184372088832ull, 9007199254740992ull};
  for (std::size_t i = 0; i < std::size(thresholds); ++i) {
    EXPECT_EQ(encoded_length(thresholds[i] - 1), i + 1) << thresholds[i];
    EXPECT_EQ(encoded_length(thresholds[i]), i + 2) << thresholds[i];
  }
}

TEST(SelfExtendingTest, FullRangeEdges) {
  const std::uint64_t top = kSelfExtendingLimit - 1;
  const auto bytes = encode_uint(top);
  EXPECT_EQ(bytes, (Bytes{0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF}));
  EXPECT_EQ(decode_uint(bytes).value, top);
  EXPECT_EQ(code_of([] { encode_uint(kSelfExtendingLimit); }), ErrorCode::ValueOutOfRange);
  EXPECT_EQ(code_of([] { encode_uint(~std::uint64_t{0}); }), ErrorCode::ValueOutOfRange);
}

TEST(SelfExtendingTest, MatchesOracleExhaustively) {
  for (std::uint64_t v = 0; v < (1u << 20); ++v) {
    const auto bytes = encode_uint(v);
    ASSERT_EQ(bytes, oracle::encode_uint(v)) << v;
    const auto d = decode_uint(bytes);
    ASSERT_EQ(d.value, v);
    ASSERT_EQ(d.consumed, bytes.size());
  }
}

TEST(SelfExtendingTest, RandomWideValuesMatchOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20000; ++i) {
    const std::uint64_t v = rng() >> (3 + rng() % 61);
    const auto bytes = encode_uint(v);
    ASSERT_EQ(bytes, oracle::encode_uint(v)) << v;
    ASSERT_EQ(decode_uint(bytes).value, v);
  }
}

TEST(SelfExtendingTest, TruncationIsAlwaysDetected) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t v = rng() >> (3 + rng() % 61);
    auto bytes = encode_uint(v);
    bytes.pop_back();
    if (bytes.empty()) continue;
    EXPECT_EQ(code_of([&] { decode_uint(bytes); }), ErrorCode::Truncated) << v;
  }
}

TEST(SelfExtendingTest, EveryOverlongEncodingRejected) {
  // Re-encode small values with one extra byte: always non-canonical.
  for (std::uint64_t v = 0; v < 70000; v += 7) {
    const std::size_t n = oracle::uint_length(v) + 1;
    Bytes bytes(n, 0);
    std::uint64_t word = v;
    for (std::size_t i = n; i-- > 1;) {
      bytes[i] = static_cast<std::uint8_t>(word & 0xFF);
      word >>= 8;
    }
    bytes[0] = static_cast<std::uint8_t>(((n - 1) << 5) | word);
    EXPECT_EQ(code_of([&] { decode_uint(bytes); }), ErrorCode::NonCanonical) << v;
  }
}

TEST(SelfExtendingTest, ZigZag) {
  EXPECT_EQ(zigzag_encode(0), 0u);
  EXPECT_EQ(zigzag_encode(-1), 1u);
  EXPECT_EQ(zigzag_encode(1), 2u);
  EXPECT_EQ(zigzag_encode(-2), 3u);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const auto v = static_cast<std::int64_t>(rng());
    ASSERT_EQ(zigzag_decode(zigzag_encode(v)), v);
  }
}

TEST(ByteReaderTest, DeclaredLengthBeyondInput) {
  Bytes bytes{0x05, 'a', 'b'};
  ByteReader r(bytes);
  EXPECT_EQ(code_of([&] { r.text(); }), ErrorCode::Truncated);
}

}  // namespace
}  // namespace dvs
