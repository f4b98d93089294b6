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

// JSON forms of queries, results and decision-support requests.
//
// Dimensions are named by flattened index ("9") or by dotted name
// ("subv2.dim0"). Scalars are JSON numbers or numeric strings; on dated
// dimensions strings are date text instead.
//
// Search:  {"constraints": {"subv2.dim0": {"sim": 4}, "3": {"min": 1, "max": 2}},
//           "k": 1000, "metric": "euclidean", "weights": {"3": 0.5},
//           "max_distance": 2.5}

#pragma once

#include <charconv>

#include "dvs/decision.hpp"
#include "dvs/json_io.hpp"

namespace dvs {

/// Shortest decimal text that reads back to the same double.
inline std::string number_text(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_number_text(std::string_view s) {
  double v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
    fail(ErrorCode::MalformedInput, "'" + std::string(s) + "' is not a finite decimal number");
  }
  return v;
}

/// Number from a JSON number or numeric string.
inline double json_number(const Json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_number_text(j.get<std::string>());
  fail(ErrorCode::MalformedInput, std::string(what) + " must be a number");
}

inline std::size_t json_count(const Json& j, const char* what) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_string()) return static_cast<std::size_t>(detail::parse_u64(j.get<std::string>(), what));
  fail(ErrorCode::MalformedInput, std::string(what) + " must be a non-negative integer");
}

/// Flattened index for a dimension key; names need a schema.
inline std::size_t dimension_index(std::string_view key, const FlatSchema* schema) {
  if (!key.empty() && std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const auto j = detail::parse_u64(key, "dimension");
    if (schema && j >= schema->size()) fail(ErrorCode::InvalidQuery, "dimension " + std::string(key) + " does not exist");
    return static_cast<std::size_t>(j);
  }
  if (schema) {
    for (std::size_t j = 0; j < schema->size(); ++j) {
      if (schema->dims[j].name == key) return j;
    }
  }
  fail(ErrorCode::InvalidQuery, "unknown dimension '" + std::string(key) + "'");
}

/// On dated dimensions a string is date text and a number is a raw count.
inline double scalar_from_json(const Json& j, const DimensionDefinition* d, const char* what) {
  if (d && d->date_format && j.is_string()) {
    return static_cast<double>(parse_timestamp(j.get<std::string>(), *d->date_format));
  }
  return json_number(j, what);
}

inline Constraints constraints_from_json(const Json& j, const FlatSchema* schema) {
  if (!j.is_object()) fail(ErrorCode::MalformedInput, "constraints must be an object keyed by dimension");
  Constraints out;
  for (const auto& [key, c] : j.items()) {
    const auto idx = dimension_index(key, schema);
    if (!c.is_object()) fail(ErrorCode::MalformedInput, "constraint on " + key + " must be an object");
    const DimensionDefinition* d = schema ? &schema->dims[idx].def : nullptr;
    Constraint con;
    for (const auto& [field, v] : c.items()) {
      if (v.is_null()) continue;
      if (field == "sim") con.sim = scalar_from_json(v, d, "sim");
      else if (field == "min") con.min = scalar_from_json(v, d, "min");
      else if (field == "max") con.max = scalar_from_json(v, d, "max");
      else fail(ErrorCode::MalformedInput, "unknown constraint field '" + field + "'");
    }
    if (out.contains(idx)) fail(ErrorCode::InvalidQuery, "dimension " + key + " constrained twice");
    out[idx] = con;
  }
  return out;
}

/// Numbers are written as decimal strings when `strings` is set.
inline Json constraints_to_json(const Constraints& cs, bool strings = false) {
  Json out = Json::object();
  auto num = [&](double v) { return strings ? Json(number_text(v)) : Json(v); };
  for (const auto& [j, c] : cs) {
    Json o = Json::object();
    if (c.sim) o["sim"] = num(*c.sim);
    if (c.min) o["min"] = num(*c.min);
    if (c.max) o["max"] = num(*c.max);
    out[std::to_string(j)] = o;
  }
  return out;
}

inline std::map<std::size_t, double> weights_from_json(const Json& j, const FlatSchema* schema) {
  if (!j.is_object()) fail(ErrorCode::MalformedInput, "weights must be an object keyed by dimension");
  std::map<std::size_t, double> out;
  for (const auto& [key, w] : j.items()) out[dimension_index(key, schema)] = json_number(w, "weight");
  return out;
}

inline std::vector<std::size_t> dimension_list_from_json(const Json& j, const FlatSchema* schema) {
  if (!j.is_array()) fail(ErrorCode::MalformedInput, "dimension list must be an array");
  std::vector<std::size_t> out;
  for (const auto& e : j) {
    if (e.is_number_unsigned()) out.push_back(dimension_index(std::to_string(e.get<std::uint64_t>()), schema));
    else if (e.is_string()) out.push_back(dimension_index(e.get<std::string>(), schema));
    else fail(ErrorCode::MalformedInput, "dimensions are named by index or name");
  }
  return out;
}

inline SearchQuery search_query_from_json(const Json& j, const FlatSchema* schema) {
  if (!j.is_object()) fail(ErrorCode::MalformedInput, "query must be an object");
  SearchQuery q;
  if (j.contains("constraints")) q.constraints = constraints_from_json(j.at("constraints"), schema);
  if (j.contains("k")) {
    if (!j.at("k").is_number_integer() || j.at("k").get<std::int64_t>() < 1) fail(ErrorCode::InvalidQuery, "k must be a positive integer");
    q.k = j.at("k").get<std::size_t>();
  }
  if (j.contains("metric")) q.metric = parse_metric(detail::get_as<std::string>(j.at("metric"), "metric"));
  if (j.contains("weights")) q.weight_overrides = weights_from_json(j.at("weights"), schema);
  if (j.contains("max_distance") && !j.at("max_distance").is_null()) q.max_distance = json_number(j.at("max_distance"), "max_distance");
  return q;
}

inline Json search_query_to_json(const SearchQuery& q) {
  Json out = {{"constraints", constraints_to_json(q.constraints)}, {"k", q.k}, {"metric", to_string(q.metric)}};
  if (!q.weight_overrides.empty()) {
    Json w = Json::object();
    for (const auto& [j, x] : q.weight_overrides) w[std::to_string(j)] = x;
    out["weights"] = w;
  }
  if (q.max_distance) out["max_distance"] = *q.max_distance;
  return out;
}

inline Json to_json(const SearchResult& r, const FlatSchema& schema) {
  Json hits = Json::array();
  for (const auto& h : r.hits) {
    Json values = Json::array();
    for (std::size_t j = 0; j < schema.size(); ++j) {
      values.push_back(value_to_json(j < h.values.size() ? h.values[j] : Value{Absent{}}, schema.dims[j].def));
    }
    hits.push_back({{"record_id", h.record_id}, {"distance", h.distance}, {"values", values}});
  }
  return {{"hits", hits}};
}

inline Json to_json(const GroupStatistics& g, const FlatSchema& schema) {
  Json dims = Json::array();
  for (const auto& d : g.dims) {
    Json o = {{"index", d.index}, {"name", schema.dims[d.index].name}, {"present_count", d.present_count}};
    o["mean"] = d.mean ? Json(*d.mean) : Json(nullptr);
    o["std"] = d.std ? Json(*d.std) : Json(nullptr);
    dims.push_back(o);
  }
  return {{"group_size", g.group_size}, {"dims", dims}};
}

inline Json to_json(const IntervalSpec& spec, const FlatSchema& schema) {
  Json out = Json::array();
  for (const auto& i : spec.intervals) {
    out.push_back({{"dimension", i.index},
                   {"name", schema.dims[i.index].name},
                   {"center", i.center},
                   {"spread", i.spread},
                   {"factor", i.factor},
                   {"lower", i.lower()},
                   {"upper", i.upper()},
                   {"exact", i.exact()}});
  }
  return {{"intervals", out}};
}

/// Accepts {"intervals": [...]} or a bare array; "dimension" is an index or
/// name, "factor" defaults to 1.
inline IntervalSpec interval_spec_from_json(const Json& j, const FlatSchema* schema) {
  const Json& arr = j.is_object() ? detail::require(j, "intervals") : j;
  if (!arr.is_array()) fail(ErrorCode::MalformedInput, "intervals must be an array");
  IntervalSpec spec;
  for (const auto& e : arr) {
    const auto& dim = detail::require(e, "dimension");
    Interval i;
    i.index = dimension_index(dim.is_string() ? dim.get<std::string>() : std::to_string(json_count(dim, "dimension")), schema);
    i.center = json_number(detail::require(e, "center"), "center");
    i.spread = json_number(detail::require(e, "spread"), "spread");
    if (e.contains("factor")) i.factor = json_number(e.at("factor"), "factor");
    spec.intervals.push_back(i);
  }
  return spec;
}

inline RoleTagging roles_from_json(const Json& j, const FlatSchema* schema) {
  if (!j.is_object()) fail(ErrorCode::MalformedInput, "roles must be an object keyed by dimension");
  RoleTagging out;
  for (const auto& [key, r] : j.items()) out[dimension_index(key, schema)] = parse_role(detail::get_as<std::string>(r, "role"));
  return out;
}

inline EvaluationRequest evaluation_from_json(const Json& j, const FlatSchema* schema) {
  EvaluationRequest req;
  if (j.contains("preconditions")) req.preconditions = interval_spec_from_json(j.at("preconditions"), schema);
  const auto& variants = detail::require(j, "variants");
  if (!variants.is_array()) fail(ErrorCode::MalformedInput, "variants must be an array");
  for (std::size_t i = 0; i < variants.size(); ++i) {
    Variant v;
    v.name = variants[i].contains("name") ? detail::get_as<std::string>(variants[i].at("name"), "name")
                                          : "variant " + std::to_string(i);
    v.decision = constraints_from_json(detail::require(variants[i], "decision"), schema);
    req.variants.push_back(std::move(v));
  }
  req.result_dims = dimension_list_from_json(detail::require(j, "result_dims"), schema);
  if (j.contains("roles")) req.roles = roles_from_json(j.at("roles"), schema);
  return req;
}

inline Json to_json(const std::vector<VariantOutcome>& out, const FlatSchema& schema) {
  Json arr = Json::array();
  for (const auto& v : out) arr.push_back({{"name", v.name}, {"stats", to_json(v.stats, schema)}});
  return {{"variants", arr}};
}

}  // namespace dvs
