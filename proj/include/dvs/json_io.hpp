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

// JSON documents for definitions and vectors.
//
// Definition:
//   {"ul": "...", "version": 1, "name": {"en": "..."}, "created": 0,
//    "components": [
//      {"keyword": "Price", "unit": "Euro", "min": 0, "max": 5000, "weight": 1,
//       "representation": "money", "required": false},
//      {"nested": "https://...", "version": 2, "label": "frame"}]}
//
// Vector: {"space": "<ul text>", "values": [null, 3, "12.50", "2024-01-31", ...]}
//   integer, list index   JSON integer
//   money, float kinds    decimal string at the dimension scale (numbers accepted)
//   dated integer         string in the dimension's date format (counts accepted)
//   text                  string

#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <json.hpp>

#include "dvs/definition.hpp"
#include "dvs/value.hpp"

namespace dvs {

using Json = nlohmann::json;

namespace detail {

inline const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::MalformedInput, std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get_as(const Json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::MalformedInput, std::string("field '") + what + "' has the wrong type");
  }
}

inline std::optional<std::string> opt_string(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_as<std::string>(j.at(key), key);
}

inline std::optional<double> opt_double(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_as<double>(j.at(key), key);
}

inline LabelMap labels_from_json(const Json& j, const char* what) {
  if (!j.is_object()) fail(ErrorCode::MalformedInput, std::string(what) + " must be a language map");
  LabelMap m;
  for (const auto& [lang, text] : j.items()) m.emplace(lang, get_as<std::string>(text, what));
  return m;
}

inline Json labels_to_json(const LabelMap& m) {
  Json j = Json::object();
  for (const auto& [lang, text] : m) j[lang] = text;
  return j;
}

}  // namespace detail

inline Json to_json(const DimensionDefinition& d) {
  Json j;
  j["keyword"] = d.keyword;
  if (d.keyword_link) j["keyword_link"] = *d.keyword_link;
  if (d.unit) j["unit"] = *d.unit;
  if (d.unit_link) j["unit_link"] = *d.unit_link;
  if (d.comment) j["comment"] = *d.comment;
  if (d.min) j["min"] = *d.min;
  if (d.max) j["max"] = *d.max;
  j["weight"] = d.weight;
  j["representation"] = std::string(to_string(d.representation));
  if (d.date_format) j["date_format"] = std::string(to_string(*d.date_format));
  if (d.scale) j["scale"] = *d.scale;
  j["required"] = d.required;
  if (!d.enum_labels.empty()) {
    Json labels = Json::array();
    for (const auto& m : d.enum_labels) labels.push_back(detail::labels_to_json(m));
    j["labels"] = std::move(labels);
  }
  return j;
}

inline DimensionDefinition dimension_from_json(const Json& j) {
  DimensionDefinition d;
  d.keyword = detail::get_as<std::string>(detail::require(j, "keyword"), "keyword");
  d.keyword_link = detail::opt_string(j, "keyword_link");
  d.unit = detail::opt_string(j, "unit");
  d.unit_link = detail::opt_string(j, "unit_link");
  d.comment = detail::opt_string(j, "comment");
  d.min = detail::opt_double(j, "min");
  d.max = detail::opt_double(j, "max");
  d.weight = detail::opt_double(j, "weight").value_or(1.0);
  d.representation = parse_representation(detail::get_as<std::string>(detail::require(j, "representation"), "representation"));
  if (auto f = detail::opt_string(j, "date_format")) d.date_format = parse_date_format(*f);
  if (j.contains("scale") && !j["scale"].is_null()) d.scale = detail::get_as<std::uint32_t>(j["scale"], "scale");
  if (j.contains("required")) d.required = detail::get_as<bool>(j["required"], "required");
  if (j.contains("labels")) {
    for (const auto& m : j["labels"]) d.enum_labels.push_back(detail::labels_from_json(m, "labels"));
  }
  return d;
}

inline Json to_json(const DomainDefinition& def) {
  Json j;
  j["ul"] = to_text(def.ul);
  j["version"] = def.version;
  j["name"] = detail::labels_to_json(def.name);
  j["created"] = def.created;
  Json comps = Json::array();
  for (const auto& c : def.components) {
    if (const auto* d = std::get_if<DimensionDefinition>(&c)) {
      comps.push_back(to_json(*d));
    } else {
      const auto& n = std::get<NestedSpace>(c);
      Json nj;
      nj["nested"] = to_text(n.space);
      if (n.version_pin) nj["version"] = *n.version_pin;
      nj["label"] = n.label;
      comps.push_back(std::move(nj));
    }
  }
  j["components"] = std::move(comps);
  return j;
}

inline DomainDefinition definition_from_json(const Json& j) {
  DomainDefinition def;
  def.ul = parse_ul(detail::get_as<std::string>(detail::require(j, "ul"), "ul"));
  def.version = j.contains("version") ? detail::get_as<std::uint64_t>(j["version"], "version") : 1;
  def.name = detail::labels_from_json(detail::require(j, "name"), "name");
  if (j.contains("created")) def.created = detail::get_as<std::int64_t>(j["created"], "created");
  const auto& comps = detail::require(j, "components");
  if (!comps.is_array()) fail(ErrorCode::MalformedInput, "components must be an array");
  for (const auto& c : comps) {
    if (c.contains("nested")) {
      NestedSpace n;
      n.space = parse_ul(detail::get_as<std::string>(c["nested"], "nested"));
      if (c.contains("version") && !c["version"].is_null()) n.version_pin = detail::get_as<std::uint64_t>(c["version"], "version");
      if (c.contains("label")) n.label = detail::get_as<std::string>(c["label"], "label");
      def.components.emplace_back(std::move(n));
    } else {
      def.components.emplace_back(dimension_from_json(c));
    }
  }
  return def;
}

// Calendar helpers (proleptic Gregorian, days since 1970-01-01).
namespace detail {

constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t y;
  unsigned m;
  unsigned d;
};

constexpr Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

constexpr unsigned days_in_month(std::int64_t y, unsigned m) {
  constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace detail

/// Formats a count of the format's unit as text, e.g. Ymd -> "2024-01-31".
inline std::string format_timestamp(std::int64_t count, DateFormat f) {
  char buf[64];
  auto two = [](std::int64_t v) { return static_cast<int>(v); };
  switch (f) {
    case DateFormat::Y:
      std::snprintf(buf, sizeof buf, "%04lld", static_cast<long long>(1970 + count));
      return buf;
    case DateFormat::Ym: {
      const auto y = 1970 + detail::floor_div(count, 12);
      const auto m = count - detail::floor_div(count, 12) * 12 + 1;
      std::snprintf(buf, sizeof buf, "%04lld-%02d", static_cast<long long>(y), two(m));
      return buf;
    }
    case DateFormat::Hms:
    case DateFormat::Hm: {
      const std::int64_t secs = f == DateFormat::Hms ? count : count * 60;
      const auto h = secs / 3600, mi = secs / 60 % 60, s = secs % 60;
      if (f == DateFormat::Hms) std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", two(h), two(mi), two(s));
      else std::snprintf(buf, sizeof buf, "%02d:%02d", two(h), two(mi));
      return buf;
    }
    default:
      break;
  }
  std::int64_t per_day = 1;
  switch (f) {
    case DateFormat::YmdHms: per_day = 86400; break;
    case DateFormat::YmdHm: per_day = 1440; break;
    case DateFormat::YmdH: per_day = 24; break;
    default: break;
  }
  const auto days = detail::floor_div(count, per_day);
  const auto rem = count - days * per_day;
  const auto c = detail::civil_from_days(days);
  const auto y = static_cast<long long>(c.y);
  switch (f) {
    case DateFormat::YmdHms:
      std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02d:%02d:%02d", y, c.m, c.d, two(rem / 3600),
                    two(rem / 60 % 60), two(rem % 60));
      break;
    case DateFormat::YmdHm:
      std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02d:%02d", y, c.m, c.d, two(rem / 60), two(rem % 60));
      break;
    case DateFormat::YmdH:
      std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02d", y, c.m, c.d, two(rem));
      break;
    default:
      std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", y, c.m, c.d);
      break;
  }
  return buf;
}

/// Strict inverse of format_timestamp.
inline std::int64_t parse_timestamp(const std::string& text, DateFormat f) {
  const std::string pattern(to_string(f));
  if (text.size() != pattern.size()) fail(ErrorCode::MalformedInput, "'" + text + "' does not match " + pattern);
  std::int64_t y = 1970, mo = 1, d = 1, h = 0, mi = 0, s = 0;
  auto mismatch = [&] { fail(ErrorCode::MalformedInput, "'" + text + "' does not match " + pattern); };
  std::size_t i = 0;
  while (i < pattern.size()) {
    const char p = pattern[i];
    if (p == '-' || p == ':' || p == ' ') {
      if (text[i] != p) mismatch();
      ++i;
      continue;
    }
    // A run of one letter is one numeric field; "mm" after ':' is minutes.
    const std::size_t start = i;
    std::int64_t acc = 0;
    for (; i < pattern.size() && pattern[i] == p; ++i) {
      if (text[i] < '0' || text[i] > '9') mismatch();
      acc = acc * 10 + (text[i] - '0');
    }
    switch (p) {
      case 'y': y = acc; break;
      case 'd': d = acc; break;
      case 'h': h = acc; break;
      case 's': s = acc; break;
      case 'm': (start > 0 && pattern[start - 1] == ':' ? mi : mo) = acc; break;
      default: mismatch();
    }
  }
  if (mo < 1 || mo > 12 || d < 1 || d > static_cast<std::int64_t>(detail::days_in_month(y, static_cast<unsigned>(mo))) ||
      h > 23 || mi > 59 || s > 59) {
    fail(ErrorCode::MalformedInput, "'" + text + "' is not a valid " + pattern);
  }
  const auto days = detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  switch (f) {
    case DateFormat::YmdHms: return days * 86400 + h * 3600 + mi * 60 + s;
    case DateFormat::YmdHm: return days * 1440 + h * 60 + mi;
    case DateFormat::YmdH: return days * 24 + h;
    case DateFormat::Ymd: return days;
    case DateFormat::Ym: return (y - 1970) * 12 + (mo - 1);
    case DateFormat::Y: return y - 1970;
    case DateFormat::Hms: return h * 3600 + mi * 60 + s;
    case DateFormat::Hm: return h * 60 + mi;
  }
  return 0;
}

/// Exact decimal text of mantissa * 10^-scale, e.g. (1250, 2) -> "12.50".
inline std::string format_decimal(std::int64_t mantissa, std::uint32_t scale) {
  const bool neg = mantissa < 0;
  std::string digits = std::to_string(mantissa);
  if (neg) digits.erase(0, 1);
  if (scale == 0) return (neg ? "-" : "") + digits;
  if (digits.size() <= scale) digits.insert(0, scale + 1 - digits.size(), '0');
  digits.insert(digits.size() - scale, 1, '.');
  return (neg ? "-" : "") + digits;
}

inline std::int64_t parse_decimal(const std::string& text, std::uint32_t scale) {
  std::size_t i = 0;
  bool neg = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) neg = text[i++] == '-';
  std::int64_t mant = 0;
  std::uint32_t frac = 0;
  bool dot = false, any = false;
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max() / 10;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.' && !dot) {
      dot = true;
      continue;
    }
    if (c < '0' || c > '9') fail(ErrorCode::MalformedInput, "bad decimal '" + text + "'");
    any = true;
    if (dot && frac == scale) {
      if (c != '0') fail(ErrorCode::MalformedInput, "'" + text + "' has more than " + std::to_string(scale) + " decimals");
      continue;
    }
    if (mant > kMax) fail(ErrorCode::ValueOutOfRange, "decimal '" + text + "' too large");
    mant = mant * 10 + (c - '0');
    if (dot) ++frac;
  }
  if (!any) fail(ErrorCode::MalformedInput, "bad decimal '" + text + "'");
  for (; frac < scale; ++frac) {
    if (mant > kMax) fail(ErrorCode::ValueOutOfRange, "decimal '" + text + "' too large");
    mant *= 10;
  }
  return neg ? -mant : mant;
}

inline Json value_to_json(const Value& v, const DimensionDefinition& d) {
  struct Visitor {
    const DimensionDefinition& d;
    Json operator()(const Absent&) const { return nullptr; }
    Json operator()(const Integer& i) const { return i.value; }
    Json operator()(const Decimal& x) const { return format_decimal(x.mantissa, effective_scale(d)); }
    Json operator()(const EnumIndex& e) const { return e.index; }
    Json operator()(const Timestamp& t) const {
      return d.date_format ? Json(format_timestamp(t.count, *d.date_format)) : Json(t.count);
    }
    Json operator()(const Text& t) const { return t.text; }
  };
  return std::visit(Visitor{d}, v);
}

inline Value value_from_json(const Json& j, const DimensionDefinition& d) {
  if (j.is_null()) return Absent{};
  switch (value_kind(d)) {
    case ValueKind::Integer:
      if (!j.is_number_integer()) fail(ErrorCode::SchemaMismatch, d.keyword + ": expected an integer");
      return Integer{j.get<std::int64_t>()};
    case ValueKind::Enum:
      if (!j.is_number_unsigned()) fail(ErrorCode::SchemaMismatch, d.keyword + ": expected a list index");
      return EnumIndex{j.get<std::uint64_t>()};
    case ValueKind::Decimal: {
      const auto scale = effective_scale(d);
      if (j.is_string()) return Decimal{parse_decimal(j.get<std::string>(), scale)};
      if (j.is_number_integer()) return Decimal{parse_decimal(std::to_string(j.get<std::int64_t>()), scale)};
      if (j.is_number()) {
        const double scaled = std::round(j.get<double>() * pow10(scale));
        if (!(std::abs(scaled) < 9.2e18)) fail(ErrorCode::ValueOutOfRange, d.keyword + ": decimal too large");
        return Decimal{static_cast<std::int64_t>(scaled)};
      }
      fail(ErrorCode::SchemaMismatch, d.keyword + ": expected a decimal");
    }
    case ValueKind::Timestamp:
      if (j.is_number_integer()) return Timestamp{j.get<std::int64_t>()};
      if (j.is_string()) return Timestamp{parse_timestamp(j.get<std::string>(), *d.date_format)};
      fail(ErrorCode::SchemaMismatch, d.keyword + ": expected a date");
    case ValueKind::Text:
      if (!j.is_string()) fail(ErrorCode::SchemaMismatch, d.keyword + ": expected text");
      return Text{j.get<std::string>()};
  }
  fail(ErrorCode::SchemaMismatch, "unknown value kind");
}

inline Json to_json(const DomainVector& dv, const FlatSchema& schema) {
  if (dv.values.size() != schema.size()) fail(ErrorCode::SchemaMismatch, "slot count mismatch");
  Json values = Json::array();
  for (std::size_t j = 0; j < dv.values.size(); ++j) values.push_back(value_to_json(dv.values[j], schema.dims[j].def));
  return Json{{"space", to_text(dv.space)}, {"values", std::move(values)}};
}

inline std::vector<Value> values_from_json(const Json& values, const FlatSchema& schema) {
  if (!values.is_array() || values.size() != schema.size()) {
    fail(ErrorCode::SchemaMismatch, "expected an array of " + std::to_string(schema.size()) + " values");
  }
  std::vector<Value> out;
  out.reserve(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) out.push_back(value_from_json(values[j], schema.dims[j].def));
  return out;
}

inline DomainVector dv_from_json(const Json& j, const FlatSchema& schema) {
  DomainVector dv;
  dv.space = j.contains("space") ? parse_ul(detail::get_as<std::string>(j["space"], "space")) : schema.space;
  dv.values = values_from_json(detail::require(j, "values"), schema);
  return dv;
}

}  // namespace dvs
