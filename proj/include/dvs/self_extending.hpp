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

// Self-extending unsigned integers.
//
// A value is stored in n bytes (1 <= n <= 8). The three most significant bits
// of the first byte hold n - 1; the remaining 5 bits of the first byte and the
// n - 1 following bytes hold the value big-endian. An n-byte encoding holds
// values below 32 * 256^(n-1), so the range is [0, 2^61). Only the shortest
// encoding of a value is accepted by the decoder.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dvs/error.hpp"

namespace dvs {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline constexpr std::uint64_t kSelfExtendingLimit = std::uint64_t{1} << 61;

/// Capacity bound of an n-byte encoding: 32 * 256^(n-1).
constexpr std::uint64_t self_extending_capacity(std::size_t n) {
  return std::uint64_t{32} << (8 * (n - 1));
}

constexpr std::size_t encoded_length(std::uint64_t value) {
  std::size_t n = 1;
  while (n < 8 && value >= self_extending_capacity(n)) ++n;
  return n;
}

inline void encode_uint(std::uint64_t value, Bytes& out) {
  if (value >= kSelfExtendingLimit) {
    fail(ErrorCode::ValueOutOfRange, "self-extending integer must be below 2^61");
  }
  const std::size_t n = encoded_length(value);
  const std::size_t shift = 8 * (n - 1);
  out.push_back(static_cast<std::uint8_t>(((n - 1) << 5) | (value >> shift)));
  for (std::size_t i = n - 1; i-- > 0;) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

inline Bytes encode_uint(std::uint64_t value) {
  Bytes out;
  encode_uint(value, out);
  return out;
}

struct DecodedUint {
  std::uint64_t value = 0;
  std::size_t consumed = 0;

  friend bool operator==(const DecodedUint&, const DecodedUint&) = default;
};

inline DecodedUint decode_uint(ByteView bytes) {
  if (bytes.empty()) fail(ErrorCode::Truncated, "no bytes for self-extending integer");
  const std::size_t n = static_cast<std::size_t>(bytes[0] >> 5) + 1;
  if (bytes.size() < n) {
    fail(ErrorCode::Truncated, "self-extending integer needs " + std::to_string(n) + " bytes");
  }
  std::uint64_t value = bytes[0] & 0x1F;
  for (std::size_t i = 1; i < n; ++i) value = (value << 8) | bytes[i];
  if (n > 1 && value < self_extending_capacity(n - 1)) {
    fail(ErrorCode::NonCanonical, "value " + std::to_string(value) + " fits in fewer bytes");
  }
  return {value, n};
}

constexpr std::uint64_t zigzag_encode(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

constexpr std::int64_t zigzag_decode(std::uint64_t u) {
  return static_cast<std::int64_t>(u >> 1) ^ -static_cast<std::int64_t>(u & 1);
}

/// Appends wire primitives to a byte buffer.
class ByteWriter {
 public:
  void byte(std::uint8_t b) { out_.push_back(b); }
  void uint(std::uint64_t v) { encode_uint(v, out_); }
  void sint(std::int64_t v) { encode_uint(zigzag_encode(v), out_); }
  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  void text(std::string_view s) {
    uint(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void blob(ByteView bytes) {
    uint(bytes.size());
    raw(bytes);
  }

  const Bytes& bytes() const& { return out_; }
  Bytes bytes() && { return std::move(out_); }
  Bytes& buffer() { return out_; }

 private:
  Bytes out_;
};

/// Cursor over an input buffer. Never reads past the end: every short read
/// throws Truncated.
class ByteReader {
 public:
  explicit ByteReader(ByteView bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint8_t byte() {
    need(1);
    return bytes_[pos_++];
  }

  std::uint64_t uint() {
    const auto d = decode_uint(bytes_.subspan(pos_));
    pos_ += d.consumed;
    return d.value;
  }

  std::int64_t sint() { return zigzag_decode(uint()); }

  ByteView raw(std::size_t n) {
    need(n);
    auto view = bytes_.subspan(pos_, n);
    pos_ += n;
    return view;
  }

  std::string text() {
    const auto n = uint();
    need(n);
    auto view = raw(static_cast<std::size_t>(n));
    return std::string(view.begin(), view.end());
  }

  Bytes blob() {
    const auto n = uint();
    need(n);
    auto view = raw(static_cast<std::size_t>(n));
    return Bytes(view.begin(), view.end());
  }

 private:
  void need(std::uint64_t n) const {
    if (n > remaining()) fail(ErrorCode::Truncated, "input ends before declared length");
  }

  ByteView bytes_;
  std::size_t pos_ = 0;
};

}  // namespace dvs
