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

// Canonical binary form of a DomainDefinition and its SHA-256 content hash.
//
// Layout (all integers self-extending):
//   version, UL, created (zig-zag), name map, component count, components.
//   A label map is a count followed by (language, text) pairs in ascending
//   language order. A component is a tag byte (0 = dimension, 1 = nested)
//   followed by a length-prefixed body. Doubles are written as their shortest
//   round-trip decimal text.

#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <string>

#include <openssl/evp.h>

#include "dvs/definition.hpp"
#include "dvs/self_extending.hpp"

namespace dvs {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(ByteView bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    fail(ErrorCode::Io, "SHA-256 computation failed");
  }
  return out;
}

inline std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s += kDigits[b >> 4];
    s += kDigits[b & 0xF];
  }
  return s;
}

namespace detail {

enum : std::uint8_t {
  kHasKeywordLink = 1 << 0,
  kHasUnit = 1 << 1,
  kHasUnitLink = 1 << 2,
  kHasComment = 1 << 3,
  kHasMin = 1 << 4,
  kHasMax = 1 << 5,
  kHasDateFormat = 1 << 6,
  kHasScale = 1 << 7,
};

inline std::string double_text(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline double parse_double_text(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorCode::MalformedInput, "bad decimal text '" + std::string(s) + "'");
  }
  return v;
}

inline void write_labels(ByteWriter& w, const LabelMap& m) {
  w.uint(m.size());
  for (const auto& [lang, text] : m) {
    w.text(lang);
    w.text(text);
  }
}

inline LabelMap read_labels(ByteReader& r) {
  LabelMap m;
  const auto n = r.uint();
  if (n > r.remaining()) fail(ErrorCode::Truncated, "label map longer than input");
  for (std::uint64_t i = 0; i < n; ++i) {
    auto lang = r.text();
    auto text = r.text();
    if (!m.empty() && !(m.rbegin()->first < lang)) {
      fail(ErrorCode::NonCanonical, "label languages must be strictly ascending");
    }
    m.emplace(std::move(lang), std::move(text));
  }
  return m;
}

inline Bytes dimension_body(const DimensionDefinition& d) {
  ByteWriter w;
  w.text(d.keyword);
  std::uint8_t flags = 0;
  if (d.keyword_link) flags |= kHasKeywordLink;
  if (d.unit) flags |= kHasUnit;
  if (d.unit_link) flags |= kHasUnitLink;
  if (d.comment) flags |= kHasComment;
  if (d.min) flags |= kHasMin;
  if (d.max) flags |= kHasMax;
  if (d.date_format) flags |= kHasDateFormat;
  if (d.scale) flags |= kHasScale;
  w.byte(flags);
  if (d.keyword_link) w.text(*d.keyword_link);
  if (d.unit) w.text(*d.unit);
  if (d.unit_link) w.text(*d.unit_link);
  if (d.comment) w.text(*d.comment);
  if (d.min) w.text(double_text(*d.min));
  if (d.max) w.text(double_text(*d.max));
  if (d.date_format) w.byte(static_cast<std::uint8_t>(*d.date_format));
  if (d.scale) w.uint(*d.scale);
  w.text(double_text(d.weight));
  w.byte(static_cast<std::uint8_t>(d.representation));
  w.byte(d.required ? 1 : 0);
  w.uint(d.enum_labels.size());
  for (const auto& m : d.enum_labels) write_labels(w, m);
  return std::move(w).bytes();
}

inline DimensionDefinition read_dimension(ByteReader& r) {
  DimensionDefinition d;
  d.keyword = r.text();
  const auto flags = r.byte();
  if (flags & kHasKeywordLink) d.keyword_link = r.text();
  if (flags & kHasUnit) d.unit = r.text();
  if (flags & kHasUnitLink) d.unit_link = r.text();
  if (flags & kHasComment) d.comment = r.text();
  if (flags & kHasMin) d.min = parse_double_text(r.text());
  if (flags & kHasMax) d.max = parse_double_text(r.text());
  if (flags & kHasDateFormat) {
    const auto f = r.byte();
    if (f > 7) fail(ErrorCode::MalformedInput, "unknown date format code");
    d.date_format = static_cast<DateFormat>(f);
  }
  if (flags & kHasScale) {
    const auto s = r.uint();
    if (s > kMaxDecimalScale) fail(ErrorCode::MalformedInput, "decimal scale too large");
    d.scale = static_cast<std::uint32_t>(s);
  }
  d.weight = parse_double_text(r.text());
  const auto rep = r.byte();
  if (rep > 5) fail(ErrorCode::MalformedInput, "unknown representation code");
  d.representation = static_cast<Representation>(rep);
  const auto req = r.byte();
  if (req > 1) fail(ErrorCode::MalformedInput, "required flag must be 0 or 1");
  d.required = req == 1;
  const auto n = r.uint();
  if (n > r.remaining()) fail(ErrorCode::Truncated, "label list longer than input");
  for (std::uint64_t i = 0; i < n; ++i) d.enum_labels.push_back(read_labels(r));
  return d;
}

inline Bytes nested_body(const NestedSpace& n) {
  ByteWriter w;
  encode_ul(n.space, false, w.buffer());
  w.byte(n.version_pin ? 1 : 0);
  if (n.version_pin) w.uint(*n.version_pin);
  w.text(n.label);
  return std::move(w).bytes();
}

inline NestedSpace read_nested(ByteReader& r) {
  NestedSpace n;
  n.space = decode_ul(r, false);
  const auto pinned = r.byte();
  if (pinned > 1) fail(ErrorCode::MalformedInput, "pin flag must be 0 or 1");
  if (pinned) n.version_pin = r.uint();
  n.label = r.text();
  return n;
}

}  // namespace detail

inline Bytes canonical_bytes(const DomainDefinition& def) {
  ByteWriter w;
  w.uint(def.version);
  encode_ul(def.ul, false, w.buffer());
  w.sint(def.created);
  detail::write_labels(w, def.name);
  w.uint(def.components.size());
  for (const auto& c : def.components) {
    if (const auto* d = std::get_if<DimensionDefinition>(&c)) {
      w.byte(0);
      w.blob(detail::dimension_body(*d));
    } else {
      w.byte(1);
      w.blob(detail::nested_body(std::get<NestedSpace>(c)));
    }
  }
  return std::move(w).bytes();
}

inline DomainDefinition parse_canonical(ByteView bytes) {
  ByteReader r(bytes);
  DomainDefinition def;
  def.version = r.uint();
  def.ul = decode_ul(r, false);
  def.created = r.sint();
  def.name = detail::read_labels(r);
  const auto n = r.uint();
  if (n > r.remaining()) fail(ErrorCode::Truncated, "component list longer than input");
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto tag = r.byte();
    const auto body = r.blob();
    ByteReader br(body);
    if (tag == 0) {
      def.components.emplace_back(detail::read_dimension(br));
    } else if (tag == 1) {
      def.components.emplace_back(detail::read_nested(br));
    } else {
      fail(ErrorCode::MalformedInput, "unknown component tag");
    }
    if (!br.done()) fail(ErrorCode::MalformedInput, "trailing bytes in component body");
  }
  if (!r.done()) fail(ErrorCode::MalformedInput, "trailing bytes after definition");
  return def;
}

inline Digest content_hash(const DomainDefinition& def) { return sha256(canonical_bytes(def)); }

}  // namespace dvs
