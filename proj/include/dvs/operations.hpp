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

// JSON-in, JSON-out operations shared by the HTTP service and the CLI.

#pragma once

#include "dvs/federation.hpp"

namespace dvs::ops {

/// Space addressed by local index, content hash (64 hex) or UL text.
inline UlRef space_id(Database& db, const std::string& id) {
  if (!id.empty() && std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return db.resolve_ul(LocalTableIndex{detail::parse_u64(id, "space index")});
  }
  if (id.size() == 64 &&
      std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; })) {
    if (auto hit = db.registry().find_by_hash(id)) return hit->first;
  }
  return db.resolve_ul(parse_ul(id));
}

inline void check_k(std::size_t k, std::size_t max_k) {
  if (k > max_k) fail(ErrorCode::InvalidQuery, "k exceeds the limit of " + std::to_string(max_k));
}

inline SearchQuery query_field(const Json& body, const char* key, const FlatSchema& schema, std::size_t max_k) {
  if (!body.is_object() || !body.contains(key) || body.at(key).is_null()) return {};
  auto q = search_query_from_json(body.at(key), &schema);
  check_k(q.k, max_k);
  return q;
}

inline Json list_spaces(const Database& db) {
  Json arr = Json::array();
  for (const auto& s : db.list()) {
    arr.push_back({{"index", s.local_index},
                   {"ul", to_text(s.ul)},
                   {"version", s.latest_version},
                   {"dimensions", s.dimension_count},
                   {"records", s.record_count},
                   {"hash", s.content_hash}});
  }
  return {{"spaces", arr}};
}

inline Json publish_result(const Database& db, const PublishOutcome& out) {
  return {{"ul", to_text(out.ul)},
          {"version", out.version},
          {"hash", to_hex(out.hash)},
          {"index", *db.registry().local_index(out.ul)},
          {"created", out.created}};
}

/// Definition, flattened dimensions, content hash and information content.
inline Json describe_space(const Database& db, const UlRef& ul, std::optional<std::uint64_t> version) {
  const auto v = db.registry().version(ul, version);
  Json flat = Json::array();
  for (std::size_t j = 0; j < v.schema->size(); ++j) {
    const auto& d = v.schema->dims[j];
    flat.push_back({{"index", j}, {"name", d.name}, {"gid", to_text(d.gid)}, {"dimension", to_json(d.def)}});
  }
  Json out = {{"definition", to_json(*v.def)},
              {"version", v.def->version},
              {"hash", to_hex(v.hash)},
              {"versions", db.registry().versions(ul).size()},
              {"flattened", flat}};
  if (const auto idx = db.registry().local_index(ul)) out["index"] = *idx;
  const auto ic = information_content(*v.schema);
  out["information_bits"] = ic ? Json(*ic) : Json(nullptr);
  return out;
}

/// Accepts an array (or {"dvs": [...]}) of value arrays or DV objects.
inline std::vector<DomainVector> dvs_from_json(Database& db, const UlRef& ul, const Json& body) {
  const auto schema = db.registry().version(ul).schema;
  const Json& arr = body.is_object() && body.contains("dvs") ? body.at("dvs") : body;
  if (!arr.is_array()) fail(ErrorCode::MalformedInput, "expected a JSON array of vectors");
  std::vector<DomainVector> out;
  for (const auto& item : arr) {
    DomainVector dv;
    if (item.is_array()) {
      dv = {ul, values_from_json(item, *schema)};
    } else {
      dv = dv_from_json(item, *schema);
      if (db.resolve_ul(dv.space) != ul) fail(ErrorCode::SchemaMismatch, "vector names another space");
      dv.space = ul;
    }
    out.push_back(std::move(dv));
  }
  return out;
}

/// Binary vector stream; every vector must belong to `ul`.
inline std::vector<DomainVector> dvs_from_stream(Database& db, const UlRef& ul, ByteView bytes) {
  const auto schema = db.registry().version(ul).schema;
  DvStreamReader reader(bytes, [&](const UlRef& u) -> const FlatSchema& {
    const UlRef global = db.resolve_ul(u);
    if (global != ul) fail(ErrorCode::SchemaMismatch, "stream vector belongs to " + to_text(global));
    return *schema;
  });
  std::vector<DomainVector> out;
  while (!reader.done()) {
    auto dv = reader.next();
    dv.space = ul;
    out.push_back(std::move(dv));
  }
  return out;
}

inline Bytes dvs_to_stream(Database& db, std::span<const DomainVector> dvs) {
  DvStreamWriter writer;
  for (const auto& dv : dvs) writer.write(dv, *db.registry().version(db.resolve_ul(dv.space)).schema);
  return std::move(writer).bytes();
}

inline Json dvs_to_json(Database& db, std::span<const DomainVector> dvs) {
  Json arr = Json::array();
  for (const auto& dv : dvs) arr.push_back(to_json(dv, *db.registry().version(db.resolve_ul(dv.space)).schema));
  return arr;
}

inline Json inserted(const std::vector<std::uint64_t>& ids) { return {{"inserted", ids.size()}, {"record_ids", ids}}; }

inline Json run_search(Database& db, const UlRef& ul, const Json& body, std::size_t max_k) {
  auto snap = db.snapshot(ul);
  const auto q = search_query_from_json(body, &snap.schema());
  check_k(q.k, max_k);
  auto out = to_json(search(q, snap), snap.schema());
  out["space"] = to_text(snap.schema().space);
  return out;
}

/// {"filter"?: query, "stat_dims": [...]}
inline Json run_stats(Database& db, const UlRef& ul, const Json& body, std::size_t max_k) {
  auto snap = db.snapshot(ul);
  const auto filter = query_field(body, "filter", snap.schema(), max_k);
  const auto dims = dimension_list_from_json(detail::require(body, "stat_dims"), &snap.schema());
  return to_json(group_stats(filter, dims, snap), snap.schema());
}

/// {"condition"?: query}
inline Json run_suggest_dimensions(Database& db, const UlRef& ul, const Json& body, std::size_t max_k) {
  auto snap = db.snapshot(ul);
  const auto cond = query_field(body, "condition", snap.schema(), max_k);
  Json arr = Json::array();
  for (const auto& r : suggest_dimensions(cond, snap.schema(), snap.records())) {
    arr.push_back({{"index", r.index}, {"name", snap.schema().dims[r.index].name}, {"present_count", r.present_count}});
  }
  return {{"dimensions", arr}};
}

/// {"values": {dim: x}, "factors"?: {dim: r}, "group"?: query}
inline Json run_suggest_intervals(Database& db, const UlRef& ul, const Json& body, std::size_t max_k) {
  auto snap = db.snapshot(ul);
  const auto& schema = snap.schema();
  std::map<std::size_t, double> centers, factors;
  const auto& values = detail::require(body, "values");
  if (!values.is_object()) fail(ErrorCode::MalformedInput, "values must be an object keyed by dimension");
  for (const auto& [key, x] : values.items()) {
    const auto j = dimension_index(key, &schema);
    centers[j] = scalar_from_json(x, &schema.dims[j].def, "value");
  }
  if (body.contains("factors")) factors = weights_from_json(body.at("factors"), &schema);
  const auto group = query_field(body, "group", schema, max_k);
  const auto spec = suggest_intervals(centers, factors, group, schema, snap.records());
  auto out = to_json(spec, schema);
  Json weights = Json::object();
  for (const auto& [j, w] : weights_from_intervals(spec)) weights[std::to_string(j)] = w;
  out["weights"] = weights;
  return out;
}

inline Json run_evaluate(Database& db, const UlRef& ul, const Json& body) {
  auto snap = db.snapshot(ul);
  const auto req = evaluation_from_json(body, &snap.schema());
  return to_json(evaluate_variants(req, snap.schema(), snap.records()), snap.schema());
}

inline Json usages(const Database& db, const GlobalDimensionId& gid) {
  Json arr = Json::array();
  for (const auto& u : db.registry().dimension_usages(gid)) {
    arr.push_back({{"space", to_text(u.space)},
                   {"index", u.index},
                   {"name", db.registry().version(u.space).schema->dims[u.index].name}});
  }
  return {{"gid", to_text(gid)}, {"usages", arr}};
}

inline Json error_json(const Error& e) {
  return {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
}

}  // namespace dvs::ops
