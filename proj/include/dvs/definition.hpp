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

// Domain Space definitions: dimensions, nesting, flattening and validation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dvs/error.hpp"
#include "dvs/ul.hpp"
#include "dvs/value.hpp"

namespace dvs {

enum class Representation : std::uint8_t {
  List = 0,
  Text = 1,
  Integer = 2,
  Money = 3,
  FloatMedium = 4,
  FloatMax = 5,
};

enum class DateFormat : std::uint8_t {
  YmdHms = 0,  // yyyy-mm-dd hh:mm:ss
  YmdHm = 1,   // yyyy-mm-dd hh:mm
  YmdH = 2,    // yyyy-mm-dd hh
  Ymd = 3,     // yyyy-mm-dd
  Ym = 4,      // yyyy-mm
  Y = 5,       // yyyy
  Hms = 6,     // hh:mm:ss
  Hm = 7,      // hh:mm
};

constexpr std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::List: return "list";
    case Representation::Text: return "text";
    case Representation::Integer: return "integer";
    case Representation::Money: return "money";
    case Representation::FloatMedium: return "float_medium";
    case Representation::FloatMax: return "float_max";
  }
  return "?";
}

constexpr std::string_view to_string(DateFormat f) {
  switch (f) {
    case DateFormat::YmdHms: return "yyyy-mm-dd hh:mm:ss";
    case DateFormat::YmdHm: return "yyyy-mm-dd hh:mm";
    case DateFormat::YmdH: return "yyyy-mm-dd hh";
    case DateFormat::Ymd: return "yyyy-mm-dd";
    case DateFormat::Ym: return "yyyy-mm";
    case DateFormat::Y: return "yyyy";
    case DateFormat::Hms: return "hh:mm:ss";
    case DateFormat::Hm: return "hh:mm";
  }
  return "?";
}

inline Representation parse_representation(std::string_view s) {
  for (int i = 0; i <= 5; ++i) {
    const auto r = static_cast<Representation>(i);
    if (to_string(r) == s) return r;
  }
  fail(ErrorCode::MalformedInput, "unknown representation '" + std::string(s) + "'");
}

inline DateFormat parse_date_format(std::string_view s) {
  for (int i = 0; i <= 7; ++i) {
    const auto f = static_cast<DateFormat>(i);
    if (to_string(f) == s) return f;
  }
  fail(ErrorCode::MalformedInput, "unknown date format '" + std::string(s) + "'");
}

/// Language tag -> text. Every map carries the reference language.
using LabelMap = std::map<std::string, std::string>;
inline constexpr std::string_view kReferenceLanguage = "en";

inline constexpr std::uint32_t kMaxDecimalScale = 18;

struct DimensionDefinition {
  std::string keyword;
  std::optional<std::string> keyword_link;
  std::optional<std::string> unit;
  std::optional<std::string> unit_link;
  std::optional<std::string> comment;
  std::optional<double> min;
  std::optional<double> max;
  double weight = 1.0;
  Representation representation = Representation::Integer;
  std::optional<DateFormat> date_format;
  /// Decimal places of float kinds; money is always 2.
  std::optional<std::uint32_t> scale;
  bool required = false;
  /// One label map per enumeration index (list representation only).
  std::vector<LabelMap> enum_labels;

  friend bool operator==(const DimensionDefinition&, const DimensionDefinition&) = default;
};

struct NestedSpace {
  UlRef space;
  std::optional<std::uint64_t> version_pin;
  std::string label;

  friend bool operator==(const NestedSpace&, const NestedSpace&) = default;
};

using SpaceComponent = std::variant<DimensionDefinition, NestedSpace>;

struct DomainDefinition {
  UlRef ul;
  std::uint64_t version = 1;
  LabelMap name;
  std::vector<SpaceComponent> components;
  std::int64_t created = 0;

  friend bool operator==(const DomainDefinition&, const DomainDefinition&) = default;
};

/// Kind of scalar a dimension holds on the wire.
enum class ValueKind { Integer, Decimal, Enum, Timestamp, Text };

inline ValueKind value_kind(const DimensionDefinition& d) {
  switch (d.representation) {
    case Representation::List: return ValueKind::Enum;
    case Representation::Text: return ValueKind::Text;
    case Representation::Integer:
      return d.date_format ? ValueKind::Timestamp : ValueKind::Integer;
    case Representation::Money:
    case Representation::FloatMedium:
    case Representation::FloatMax: return ValueKind::Decimal;
  }
  return ValueKind::Integer;
}

inline std::uint32_t effective_scale(const DimensionDefinition& d) {
  switch (d.representation) {
    case Representation::Money: return 2;
    case Representation::FloatMedium: return d.scale.value_or(4);
    case Representation::FloatMax: return d.scale.value_or(9);
    default: return 0;
  }
}

inline double pow10(std::uint32_t n) {
  double p = 1.0;
  for (std::uint32_t i = 0; i < n; ++i) p *= 10.0;
  return p;
}

inline bool kind_matches(const Value& v, ValueKind kind) {
  switch (kind) {
    case ValueKind::Integer: return std::holds_alternative<Integer>(v);
    case ValueKind::Decimal: return std::holds_alternative<Decimal>(v);
    case ValueKind::Enum: return std::holds_alternative<EnumIndex>(v);
    case ValueKind::Timestamp: return std::holds_alternative<Timestamp>(v);
    case ValueKind::Text: return std::holds_alternative<Text>(v);
  }
  return false;
}

/// Numeric reading of a present non-text value; nullopt for Absent and text.
inline std::optional<double> numeric_value(const Value& v, const DimensionDefinition& d) {
  struct Visitor {
    const DimensionDefinition& d;
    std::optional<double> operator()(const Absent&) const { return std::nullopt; }
    std::optional<double> operator()(const Integer& i) const { return static_cast<double>(i.value); }
    std::optional<double> operator()(const Decimal& x) const {
      return static_cast<double>(x.mantissa) / pow10(effective_scale(d));
    }
    std::optional<double> operator()(const EnumIndex& e) const { return static_cast<double>(e.index); }
    std::optional<double> operator()(const Timestamp& t) const { return static_cast<double>(t.count); }
    std::optional<double> operator()(const Text&) const { return std::nullopt; }
  };
  return std::visit(Visitor{d}, v);
}

/// Identity of a searchable quantity: the space that defined the dimension
/// and its flattened index there.
struct GlobalDimensionId {
  UlRef origin_space;
  std::uint64_t origin_index = 0;

  friend auto operator<=>(const GlobalDimensionId&, const GlobalDimensionId&) = default;
};

inline std::string to_text(const GlobalDimensionId& g) {
  return to_text(g.origin_space) + "@" + std::to_string(g.origin_index);
}

inline GlobalDimensionId parse_gid(std::string_view text) {
  const auto at = text.rfind('@');
  if (at == std::string_view::npos) fail(ErrorCode::MalformedInput, "dimension id needs '<ul>@<index>'");
  return {parse_ul(text.substr(0, at)), detail::parse_u64(text.substr(at + 1), "dimension id")};
}

struct FlatDimension {
  std::vector<std::size_t> path;
  GlobalDimensionId gid;
  DimensionDefinition def;
  /// Dotted nesting labels then the keyword, e.g. "frame.height".
  std::string name;
};

/// A definition version with nesting expanded.
struct FlatSchema {
  UlRef space;
  std::uint64_t version = 0;
  std::vector<FlatDimension> dims;

  std::size_t size() const { return dims.size(); }
};

/// Lookup of published definitions by UL, latest version when unpinned.
class DefinitionSource {
 public:
  virtual ~DefinitionSource() = default;
  virtual std::shared_ptr<const DomainDefinition> find(
      const UlRef& ul, std::optional<std::uint64_t> version) const = 0;
};

/// Fixed in-memory set of definitions; handy for tests and one-off tools.
class DefinitionSet : public DefinitionSource {
 public:
  void add(DomainDefinition d) {
    defs_.push_back(std::make_shared<const DomainDefinition>(std::move(d)));
  }

  std::shared_ptr<const DomainDefinition> find(
      const UlRef& ul, std::optional<std::uint64_t> version) const override {
    std::shared_ptr<const DomainDefinition> best;
    for (const auto& d : defs_) {
      if (d->ul != ul) continue;
      if (version) {
        if (d->version == *version) return d;
      } else if (!best || d->version > best->version) {
        best = d;
      }
    }
    return best;
  }

 private:
  std::vector<std::shared_ptr<const DomainDefinition>> defs_;
};

namespace detail {

inline void flatten_into(const DomainDefinition& def, const DefinitionSource& source,
                         std::vector<std::string>& stack, std::vector<FlatDimension>& out) {
  const auto key = to_text(def.ul);
  for (const auto& s : stack) {
    if (s == key) fail(ErrorCode::CycleDetected, "nesting cycle through " + key);
  }
  stack.push_back(key);
  std::vector<FlatDimension> local;
  for (std::size_t i = 0; i < def.components.size(); ++i) {
    if (const auto* dim = std::get_if<DimensionDefinition>(&def.components[i])) {
      local.push_back({{i}, {def.ul, local.size()}, *dim, dim->keyword});
      continue;
    }
    const auto& nested = std::get<NestedSpace>(def.components[i]);
    auto child = source.find(nested.space, nested.version_pin);
    if (!child) {
      fail(ErrorCode::UnresolvedReference, "nested space " + to_text(nested.space) + " not found");
    }
    std::vector<FlatDimension> sub;
    flatten_into(*child, source, stack, sub);
    for (auto& f : sub) {
      f.path.insert(f.path.begin(), i);
      f.name = nested.label + "." + f.name;
      local.push_back(std::move(f));
    }
  }
  stack.pop_back();
  out.insert(out.end(), std::make_move_iterator(local.begin()), std::make_move_iterator(local.end()));
}

}  // namespace detail

/// Expands nested spaces depth-first in component order. Dimensions keep the
/// GlobalDimensionId of the space that defined them.
inline FlatSchema flatten(const DomainDefinition& def, const DefinitionSource& source) {
  FlatSchema schema{def.ul, def.version, {}};
  std::vector<std::string> stack;
  detail::flatten_into(def, source, stack, schema.dims);
  return schema;
}

namespace detail {

inline void check_labels(const LabelMap& m, const std::string& where, std::vector<std::string>& out) {
  if (!m.contains(std::string(kReferenceLanguage))) {
    out.push_back(where + ": missing reference-language ('en') entry");
  }
  for (const auto& [lang, text] : m) {
    if (lang.empty()) out.push_back(where + ": empty language tag");
    if (!is_valid_utf8(text)) out.push_back(where + ": label is not valid UTF-8");
  }
}

inline void check_dimension(const DimensionDefinition& d, const std::string& where,
                            std::vector<std::string>& out) {
  if (d.keyword.empty()) out.push_back(where + ": keyword must be non-empty");
  if (!(d.weight > 0.0) || !std::isfinite(d.weight)) out.push_back(where + ": weight must be positive");
  if (d.min && !std::isfinite(*d.min)) out.push_back(where + ": min must be finite");
  if (d.max && !std::isfinite(*d.max)) out.push_back(where + ": max must be finite");
  if (d.min && d.max && *d.min > *d.max) out.push_back(where + ": min must not exceed max");
  const bool is_list = d.representation == Representation::List;
  if (is_list && d.enum_labels.empty()) out.push_back(where + ": list dimension needs enum labels");
  if (!is_list && !d.enum_labels.empty()) out.push_back(where + ": enum labels only allowed on list dimensions");
  for (std::size_t i = 0; i < d.enum_labels.size(); ++i) {
    check_labels(d.enum_labels[i], where + " label " + std::to_string(i), out);
  }
  if (d.date_format && d.representation != Representation::Integer) {
    out.push_back(where + ": date format requires integer representation");
  }
  const bool is_float = d.representation == Representation::FloatMedium ||
                        d.representation == Representation::FloatMax;
  if (d.scale && !is_float) out.push_back(where + ": scale only allowed on float representations");
  if (d.scale && *d.scale > kMaxDecimalScale) out.push_back(where + ": scale must be at most 18");
  if (d.representation == Representation::Text && (d.min || d.max)) {
    out.push_back(where + ": text dimensions take no bounds");
  }
}

}  // namespace detail

/// Checks every definition invariant and returns all violations found.
inline std::vector<std::string> validate_definition(const DomainDefinition& def,
                                                    const DefinitionSource& source) {
  std::vector<std::string> out;
  try {
    check_ul(def.ul);
    if (!is_global(def.ul)) out.push_back("ul: must be a full URL or numeric hierarchic UL");
  } catch (const Error& e) {
    out.push_back(std::string("ul: ") + e.what());
  }
  if (def.version < 1) out.push_back("version: must be at least 1");
  detail::check_labels(def.name, "name", out);
  if (def.components.empty()) out.push_back("components: definition needs at least one component");

  bool nesting_ok = true;
  for (std::size_t i = 0; i < def.components.size(); ++i) {
    const auto where = "component " + std::to_string(i);
    if (const auto* dim = std::get_if<DimensionDefinition>(&def.components[i])) {
      detail::check_dimension(*dim, where + " (" + dim->keyword + ")", out);
      continue;
    }
    const auto& nested = std::get<NestedSpace>(def.components[i]);
    if (!is_global(nested.space)) out.push_back(where + ": nested UL must be global");
    if (nested.space == def.ul) {
      out.push_back(where + ": CycleDetected: space nests itself");
      nesting_ok = false;
    } else if (!source.find(nested.space, nested.version_pin)) {
      out.push_back(where + ": UnresolvedReference: " + to_text(nested.space));
      nesting_ok = false;
    }
  }
  if (nesting_ok) {
    try {
      if (flatten(def, source).dims.empty()) out.push_back("components: flattened dimension count must be at least 1");
    } catch (const Error& e) {
      out.push_back(std::string("nesting: ") + e.what());
    }
  }
  return out;
}

/// True when `next` keeps every component of `prev` unchanged and in order.
inline bool is_append_only_extension(const DomainDefinition& prev, const DomainDefinition& next) {
  if (next.ul != prev.ul || next.components.size() < prev.components.size()) return false;
  for (std::size_t i = 0; i < prev.components.size(); ++i) {
    if (!(prev.components[i] == next.components[i])) return false;
  }
  return true;
}

/// Type and range checks of a vector against a flattened schema.
inline std::vector<std::string> validate_dv(const DomainVector& dv, const FlatSchema& schema) {
  std::vector<std::string> out;
  if (dv.values.size() != schema.dims.size()) {
    out.push_back("expected " + std::to_string(schema.dims.size()) + " value slots, got " +
                  std::to_string(dv.values.size()));
    return out;
  }
  for (std::size_t j = 0; j < dv.values.size(); ++j) {
    const auto& d = schema.dims[j].def;
    const auto& v = dv.values[j];
    const auto where = "dimension " + std::to_string(j) + " (" + d.keyword + ")";
    if (!is_present(v)) {
      if (d.required) out.push_back(where + ": required value is absent");
      continue;
    }
    if (!kind_matches(v, value_kind(d))) {
      out.push_back(where + ": value kind does not match representation " + std::string(to_string(d.representation)));
      continue;
    }
    if (const auto* e = std::get_if<EnumIndex>(&v); e && e->index >= d.enum_labels.size()) {
      out.push_back(where + ": enumeration index out of range");
    }
    if (const auto* t = std::get_if<Text>(&v); t && !is_valid_utf8(t->text)) {
      out.push_back(where + ": text is not valid UTF-8");
    }
    if (const auto x = numeric_value(v, d)) {
      if (d.min && *x < *d.min) out.push_back(where + ": value below min");
      if (d.max && *x > *d.max) out.push_back(where + ": value above max");
    }
  }
  return out;
}

/// log2 of the domain size summed over non-text dimensions; nullopt when
/// some included dimension has no finite value set.
inline std::optional<double> information_content(const FlatSchema& schema) {
  double bits = 0.0;
  for (const auto& f : schema.dims) {
    const auto& d = f.def;
    switch (value_kind(d)) {
      case ValueKind::Text:
        continue;
      case ValueKind::Enum:
        bits += std::log2(static_cast<double>(d.enum_labels.size()));
        continue;
      default:
        break;
    }
    if (!d.min || !d.max) return std::nullopt;
    // Bounds are snapped to the step grid first so 0.29 * 100 counts as 29.
    const double step_inv = pow10(effective_scale(d));
    auto snap = [](double x) {
      const double r = std::round(x);
      return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) ? r : x;
    };
    const double count = std::floor(snap(*d.max * step_inv)) - std::ceil(snap(*d.min * step_inv)) + 1.0;
    if (count < 1.0) continue;
    bits += std::log2(count);
  }
  return bits;
}

}  // namespace dvs
