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

// Domain Vector wire format:
//
//   UL | presence bitmap | present values
//
// The bitmap has ceil(dims / 8) bytes; dimension j is present iff bit (j % 8)
// of byte (j / 8) is set. Unused high bits must be zero. Present values follow
// in flattened-dimension order:
//   integer, timestamp   zig-zag, self-extending
//   decimal, money       zig-zag mantissa, self-extending (scale from schema)
//   list                 self-extending index
//   text                 self-extending byte length + UTF-8

#pragma once

#include <functional>
#include <string>

#include "dvs/definition.hpp"
#include "dvs/self_extending.hpp"
#include "dvs/ul.hpp"
#include "dvs/value.hpp"

namespace dvs {

namespace detail {

inline void check_shape(const DomainVector& dv, const FlatSchema& schema) {
  if (dv.values.size() != schema.dims.size()) {
    fail(ErrorCode::SchemaMismatch, "vector has " + std::to_string(dv.values.size()) +
                                        " slots, schema has " + std::to_string(schema.dims.size()));
  }
  for (std::size_t j = 0; j < dv.values.size(); ++j) {
    if (is_present(dv.values[j]) && !kind_matches(dv.values[j], value_kind(schema.dims[j].def))) {
      fail(ErrorCode::SchemaMismatch, "slot " + std::to_string(j) + " has the wrong value kind");
    }
  }
}

inline void write_value(ByteWriter& w, const Value& v) {
  struct Visitor {
    ByteWriter& w;
    void operator()(const Absent&) const {}
    void operator()(const Integer& i) const { w.sint(i.value); }
    void operator()(const Decimal& d) const { w.sint(d.mantissa); }
    void operator()(const EnumIndex& e) const { w.uint(e.index); }
    void operator()(const Timestamp& t) const { w.sint(t.count); }
    void operator()(const Text& t) const { w.text(t.text); }
  };
  std::visit(Visitor{w}, v);
}

inline Value read_value(ByteReader& r, ValueKind kind) {
  switch (kind) {
    case ValueKind::Integer: return Integer{r.sint()};
    case ValueKind::Decimal: return Decimal{r.sint()};
    case ValueKind::Enum: return EnumIndex{r.uint()};
    case ValueKind::Timestamp: return Timestamp{r.sint()};
    case ValueKind::Text: {
      Text t{r.text()};
      if (!is_valid_utf8(t.text)) fail(ErrorCode::MalformedInput, "text value is not valid UTF-8");
      return t;
    }
  }
  fail(ErrorCode::SchemaMismatch, "unknown value kind");
}

}  // namespace detail

/// Writes bitmap and values only; the UL is written by the caller.
inline void encode_dv_body(const DomainVector& dv, const FlatSchema& schema, ByteWriter& w) {
  detail::check_shape(dv, schema);
  const std::size_t n = schema.dims.size();
  Bytes bitmap((n + 7) / 8, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (is_present(dv.values[j])) bitmap[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
  }
  w.raw(bitmap);
  for (const auto& v : dv.values) detail::write_value(w, v);
}

inline void encode_dv(const DomainVector& dv, const FlatSchema& schema, bool previous_present,
                      Bytes& out) {
  ByteWriter w;
  encode_ul(dv.space, previous_present, w.buffer());
  encode_dv_body(dv, schema, w);
  out.insert(out.end(), w.bytes().begin(), w.bytes().end());
}

inline Bytes encode_dv(const DomainVector& dv, const FlatSchema& schema, bool previous_present = false) {
  Bytes out;
  encode_dv(dv, schema, previous_present, out);
  return out;
}

inline std::vector<Value> decode_dv_body(ByteReader& r, const FlatSchema& schema) {
  const std::size_t n = schema.dims.size();
  const auto bitmap = r.raw((n + 7) / 8);
  if (n % 8 != 0 && (bitmap.back() >> (n % 8)) != 0) {
    fail(ErrorCode::NonCanonical, "presence bits set beyond the last dimension");
  }
  std::vector<Value> values(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (bitmap[j / 8] & (1u << (j % 8))) values[j] = detail::read_value(r, value_kind(schema.dims[j].def));
  }
  return values;
}

/// Decodes one vector; the UL is returned as written (SameAsBefore included).
inline DomainVector decode_dv(ByteReader& r, const FlatSchema& schema, bool previous_present) {
  DomainVector dv;
  dv.space = decode_ul(r, previous_present);
  dv.values = decode_dv_body(r, schema);
  return dv;
}

inline DomainVector decode_dv(ByteView bytes, const FlatSchema& schema, bool previous_present = false) {
  ByteReader r(bytes);
  auto dv = decode_dv(r, schema, previous_present);
  if (!r.done()) fail(ErrorCode::MalformedInput, "trailing bytes after vector");
  return dv;
}

/// Concatenated vectors where a UL equal to the previous one is written as
/// SameAsBefore.
class DvStreamWriter {
 public:
  void write(const DomainVector& dv, const FlatSchema& schema) {
    const UlRef resolved = ctx_.resolve(dv.space);
    const bool repeat = ctx_.previous && *ctx_.previous == resolved;
    ByteWriter w;
    encode_ul(repeat ? UlRef{SameAsBefore{}} : resolved, ctx_.has_previous(), w.buffer());
    encode_dv_body(dv, schema, w);
    out_.insert(out_.end(), w.bytes().begin(), w.bytes().end());
    ctx_.advance(resolved);
  }

  const Bytes& bytes() const& { return out_; }
  Bytes bytes() && { return std::move(out_); }

 private:
  UlContext ctx_;
  Bytes out_;
};

/// Reads a vector stream; the schema for each vector is looked up by its
/// resolved UL. Returned vectors carry resolved ULs.
class DvStreamReader {
 public:
  using SchemaLookup = std::function<const FlatSchema&(const UlRef&)>;

  DvStreamReader(ByteView bytes, SchemaLookup lookup) : reader_(bytes), lookup_(std::move(lookup)) {}

  bool done() const { return reader_.done(); }

  DomainVector next() {
    DomainVector dv;
    dv.space = ctx_.resolve(decode_ul(reader_, ctx_.has_previous()));
    dv.values = decode_dv_body(reader_, lookup_(dv.space));
    ctx_.advance(dv.space);
    return dv;
  }

 private:
  ByteReader reader_;
  SchemaLookup lookup_;
  UlContext ctx_;
};

}  // namespace dvs
