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

#include "dvs/dv_codec.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace dvs {
namespace {

using testing::code_of;

FlatSchema flat(const DomainDefinition& def) {
  DefinitionSet none;
  return flatten(def, none);
}

TEST(DvCodecTest, AllAbsentVector) {
  auto def = testing::make_def("s3", {testing::int_dim("a"), testing::int_dim("b"), testing::int_dim("c")});
  const auto schema = flat(def);
  DomainVector dv{LocalTableIndex{0}, {Absent{}, Absent{}, Absent{}}};
  const auto bytes = encode_dv(dv, schema);
  EXPECT_EQ(bytes, (Bytes{0x03, 0x00, 0x00}));
  EXPECT_EQ(decode_dv(bytes, schema), dv);
}

TEST(DvCodecTest, WordAndVariationPair) {
  // A vocabulary element as a two-slot vector: word index l, variation m.
  auto def = testing::make_def("https://example.org/dl",
                               {testing::list_dim("l", 16), testing::list_dim("m", 4)});
  const auto schema = flat(def);
  DomainVector dv{LocalTableIndex{1}, {EnumIndex{7}, EnumIndex{2}}};
  Bytes expected = encode_ul(LocalTableIndex{1}, false);
  expected.push_back(0b00000011);
  for (auto b : oracle::encode_uint(7)) expected.push_back(b);
  for (auto b : oracle::encode_uint(2)) expected.push_back(b);
  const auto bytes = encode_dv(dv, schema);
  EXPECT_EQ(bytes, expected);
  EXPECT_EQ(decode_dv(bytes, schema), dv);
}

TEST(DvCodecTest, PerKindEncodings) {
  auto def = testing::make_def("k", {testing::int_dim("i"), testing::money_dim("price"),
                                     testing::text_dim("note")});
  const auto schema = flat(def);
  DomainVector dv{LocalTableIndex{0}, {Integer{-3}, Decimal{1250}, Text{"ok"}}};
  // -3 -> zig-zag 5; 1250 -> zig-zag 2500 = 0x09C4 (2 bytes: 0x29 0xC4).
  EXPECT_EQ(encode_dv(dv, schema), (Bytes{0x03, 0x00, 0x07, 0x05, 0x29, 0xC4, 0x02, 'o', 'k'}));
}

TEST(DvCodecTest, BitmapSpansBytes) {
  std::vector<SpaceComponent> comps;
  for (int i = 0; i < 10; ++i) comps.emplace_back(testing::int_dim("d" + std::to_string(i)));
  const auto schema = flat(testing::make_def("ten", comps));
  DomainVector dv{LocalTableIndex{0}, std::vector<Value>(10, Absent{})};
  dv.values[0] = Integer{1};
  dv.values[9] = Integer{2};
  const auto bytes = encode_dv(dv, schema);
  EXPECT_EQ(bytes, (Bytes{0x03, 0x00, 0x01, 0x02, 0x02, 0x04}));
  EXPECT_EQ(decode_dv(bytes, schema), dv);
}

TEST(DvCodecTest, SchemaMismatch) {
  const auto schema = flat(testing::make_def("two", {testing::int_dim("a"), testing::text_dim("b")}));
  DomainVector short_dv{LocalTableIndex{0}, {Integer{1}}};
  EXPECT_EQ(code_of([&] { encode_dv(short_dv, schema); }), ErrorCode::SchemaMismatch);
  DomainVector wrong_kind{LocalTableIndex{0}, {Text{"x"}, Absent{}}};
  EXPECT_EQ(code_of([&] { encode_dv(wrong_kind, schema); }), ErrorCode::SchemaMismatch);
}

TEST(DvCodecTest, StrayBitmapBitsAreNonCanonical) {
  const auto schema = flat(testing::make_def("two", {testing::int_dim("a"), testing::int_dim("b")}));
  EXPECT_EQ(code_of([&] { decode_dv(Bytes{0x03, 0x00, 0x04}, schema); }), ErrorCode::NonCanonical);
}

TEST(DvCodecTest, TrailingBytesRejected) {
  const auto schema = flat(testing::make_def("one", {testing::int_dim("a")}));
  EXPECT_EQ(code_of([&] { decode_dv(Bytes{0x03, 0x00, 0x00, 0x00}, schema); }), ErrorCode::MalformedInput);
}

TEST(DvCodecTest, RandomRoundTripIsIdentityAndDeterministic) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const auto def = testing::random_definition(rng, "https://example.org/r" + std::to_string(i % 17));
    const auto schema = flat(def);
    const auto dv = testing::random_dv(rng, schema);
    ASSERT_TRUE(validate_dv(dv, schema).empty());
    const auto bytes = encode_dv(dv, schema);
    ASSERT_EQ(bytes, encode_dv(dv, schema));
    ASSERT_EQ(decode_dv(bytes, schema), dv);
  }
}

TEST(DvCodecTest, TruncationNeverYieldsAValue) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 2000; ++i) {
    const auto schema = flat(testing::random_definition(rng, "https://example.org/t"));
    const auto dv = testing::random_dv(rng, schema);
    auto bytes = encode_dv(dv, schema);
    bytes.pop_back();
    ASSERT_EQ(code_of([&] { decode_dv(bytes, schema); }), ErrorCode::Truncated);
  }
}

TEST(DvStreamTest, RepeatedUlCompressedToSameAsBefore) {
  const auto schema = flat(testing::make_def("https://example.org/s", {testing::int_dim("a")}));
  DvStreamWriter w;
  const std::size_t k = 5;
  for (std::size_t i = 0; i < k; ++i) w.write({FullUrl{"https://example.org/s"}, {Integer{static_cast<std::int64_t>(i)}}}, schema);
  const auto& bytes = w.bytes();
  const auto ul_bytes = encode_ul(FullUrl{"https://example.org/s"}, false);
  // One full UL and k - 1 one-byte SameAsBefore tags, each followed by bitmap + 1-byte value.
  EXPECT_EQ(bytes.size(), ul_bytes.size() + 2 + (k - 1) * 3);
  DvStreamReader r(bytes, [&](const UlRef&) -> const FlatSchema& { return schema; });
  for (std::size_t i = 0; i < k; ++i) {
    const auto dv = r.next();
    EXPECT_EQ(dv.space, UlRef{FullUrl{"https://example.org/s"}});
    EXPECT_EQ(dv.values[0], Value{Integer{static_cast<std::int64_t>(i)}});
  }
  EXPECT_TRUE(r.done());
}

}  // namespace
}  // namespace dvs
