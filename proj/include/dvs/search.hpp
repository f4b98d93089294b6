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

// Weighted distances, range filtering, k-NN and group statistics over a
// space snapshot. Linear scan.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dvs/store.hpp"

namespace dvs {

enum class Metric { Manhattan, Euclidean };

inline std::string_view to_string(Metric m) { return m == Metric::Manhattan ? "manhattan" : "euclidean"; }

inline Metric parse_metric(std::string_view s) {
  if (s == "manhattan") return Metric::Manhattan;
  if (s == "euclidean") return Metric::Euclidean;
  fail(ErrorCode::InvalidQuery, "unknown metric '" + std::string(s) + "'");
}

struct Constraint {
  std::optional<double> sim;
  std::optional<double> min;
  std::optional<double> max;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// Constraints keyed by flattened dimension index.
using Constraints = std::map<std::size_t, Constraint>;

struct SearchQuery {
  Constraints constraints;
  std::size_t k = 10;
  Metric metric = Metric::Euclidean;
  std::map<std::size_t, double> weight_overrides;
  /// Hits farther than this are dropped ("similar enough" cut-off).
  std::optional<double> max_distance;
};

struct Hit {
  std::uint64_t record_id = 0;
  double distance = 0.0;
  std::vector<Value> values;
};

struct SearchResult {
  std::vector<Hit> hits;
};

struct DimensionStats {
  std::size_t index = 0;
  std::size_t present_count = 0;
  std::optional<double> mean;
  std::optional<double> std;
};

struct GroupStatistics {
  std::size_t group_size = 0;
  std::vector<DimensionStats> dims;
};

/// Distance over the sim dimensions S. `q`, `v` and `w` are aligned on S;
/// nullopt when either side is Absent on some dimension (Incomparable).
inline std::optional<double> distance(std::span<const std::optional<double>> q,
                                      std::span<const std::optional<double>> v, std::span<const double> w,
                                      Metric metric) {
  if (q.size() != v.size() || q.size() != w.size()) fail(ErrorCode::InvalidQuery, "distance operands differ in size");
  for (const double x : w) {
    if (!(x > 0.0) || !std::isfinite(x)) fail(ErrorCode::NonPositiveWeight, "weights must be positive");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (!q[j] || !v[j]) return std::nullopt;
    const double d = std::abs(*q[j] - *v[j]);
    sum += metric == Metric::Manhattan ? w[j] * d : w[j] * d * d;
  }
  return metric == Metric::Manhattan ? sum : std::sqrt(sum);
}

/// A query checked against a schema, with numeric targets and weights laid
/// out for scanning.
class CompiledQuery {
 public:
  CompiledQuery(const SearchQuery& q, const FlatSchema& schema) : metric_(q.metric), max_distance_(q.max_distance) {
    for (const auto& [j, c] : q.constraints) {
      if (j >= schema.size()) {
        fail(ErrorCode::InvalidQuery, "dimension " + std::to_string(j) + " does not exist (space has " +
                                          std::to_string(schema.size()) + ")");
      }
      const auto& d = schema.dims[j].def;
      const bool text = value_kind(d) == ValueKind::Text;
      if (text && (c.sim || c.min || c.max)) {
        fail(ErrorCode::InvalidQuery, "dimension " + schema.dims[j].name + " is text and takes no sim/min/max");
      }
      for (const auto& x : {c.sim, c.min, c.max}) {
        if (x && !std::isfinite(*x)) fail(ErrorCode::InvalidQuery, "constraint values must be finite");
      }
      if (c.min && c.max && *c.min > *c.max) {
        fail(ErrorCode::InvalidQuery, "min exceeds max on " + schema.dims[j].name);
      }
      if (c.min || c.max) ranges_.push_back({j, c.min, c.max, &d});
      if (c.sim) {
        const auto it = q.weight_overrides.find(j);
        const double w = it != q.weight_overrides.end() ? it->second : d.weight;
        if (!(w > 0.0) || !std::isfinite(w)) {
          fail(ErrorCode::NonPositiveWeight, "weight on " + schema.dims[j].name + " must be positive");
        }
        sims_.push_back({j, *c.sim, w, &d});
      }
    }
    for (const auto& [j, w] : q.weight_overrides) {
      if (j >= schema.size()) fail(ErrorCode::InvalidQuery, "weight for unknown dimension " + std::to_string(j));
      if (!(w > 0.0) || !std::isfinite(w)) fail(ErrorCode::NonPositiveWeight, "weights must be positive");
    }
    if (max_distance_ && !(*max_distance_ >= 0.0)) fail(ErrorCode::InvalidQuery, "max_distance must be non-negative");
  }

  bool has_sims() const { return !sims_.empty(); }
  bool has_ranges() const { return !ranges_.empty(); }
  const std::optional<double>& max_distance() const { return max_distance_; }

  /// Inclusive range check; Absent fails any range on its dimension.
  bool in_ranges(const StoredRecord& r) const {
    for (const auto& c : ranges_) {
      const auto x = numeric_value(slot(r, c.index), *c.def);
      if (!x) return false;
      if (c.min && *x < *c.min) return false;
      if (c.max && *x > *c.max) return false;
    }
    return true;
  }

  /// Distance to the sim point; nullopt when Incomparable.
  std::optional<double> distance_to(const StoredRecord& r) const {
    double sum = 0.0;
    for (const auto& s : sims_) {
      const auto x = numeric_value(slot(r, s.index), *s.def);
      if (!x) return std::nullopt;
      const double d = std::abs(s.target - *x);
      sum += metric_ == Metric::Manhattan ? s.weight * d : s.weight * d * d;
    }
    return metric_ == Metric::Manhattan ? sum : std::sqrt(sum);
  }

  /// Range filter plus, with sims and a cut-off, the distance bound.
  bool in_group(const StoredRecord& r) const {
    if (!in_ranges(r)) return false;
    if (!has_sims()) return true;
    const auto d = distance_to(r);
    return d && (!max_distance_ || *d <= *max_distance_);
  }

 private:
  struct Range {
    std::size_t index;
    std::optional<double> min, max;
    const DimensionDefinition* def;
  };
  struct Sim {
    std::size_t index;
    double target;
    double weight;
    const DimensionDefinition* def;
  };
  Metric metric_;
  std::optional<double> max_distance_;
  std::vector<Range> ranges_;
  std::vector<Sim> sims_;
};

inline SearchResult search(const SearchQuery& q, const FlatSchema& schema, std::span<const StoredRecord> records) {
  if (q.k < 1) fail(ErrorCode::InvalidQuery, "k must be at least 1");
  const CompiledQuery cq(q, schema);
  if (!cq.has_sims() && !cq.has_ranges()) {
    fail(ErrorCode::InvalidQuery, "query needs at least one sim, min or max");
  }
  SearchResult out;
  if (!cq.has_sims()) {
    for (const auto& r : records) {
      if (out.hits.size() == q.k) break;
      if (cq.in_ranges(r)) out.hits.push_back({r.record_id, 0.0, r.values});
    }
    return out;
  }
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!cq.in_ranges(records[i])) continue;
    const auto d = cq.distance_to(records[i]);
    if (!d || (q.max_distance && *d > *q.max_distance)) continue;
    ranked.emplace_back(*d, i);
  }
  const auto take = std::min(q.k, ranked.size());
  // Record ids ascend with position, so the index breaks ties by record id.
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
  for (std::size_t i = 0; i < take; ++i) {
    const auto& r = records[ranked[i].second];
    out.hits.push_back({r.record_id, ranked[i].first, r.values});
  }
  return out;
}

inline SearchResult search(const SearchQuery& q, const SpaceSnapshot& snap) {
  return search(q, snap.schema(), snap.records());
}

/// Population mean and standard deviation (two-pass).
inline std::pair<double, double> population_moments(std::span<const double> xs) {
  long double sum = 0;
  for (const double x : xs) sum += x;
  const long double mean = sum / static_cast<long double>(xs.size());
  long double sq = 0;
  for (const double x : xs) sq += (x - mean) * (x - mean);
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(sq / static_cast<long double>(xs.size())))};
}

/// Statistics of `stat_dims` over the records accepted by `in_group`.
template <typename Predicate>
GroupStatistics group_stats_where(Predicate&& in_group, std::span<const std::size_t> stat_dims,
                                  const FlatSchema& schema, std::span<const StoredRecord> records) {
  for (const auto j : stat_dims) {
    if (j >= schema.size()) fail(ErrorCode::InvalidQuery, "stat dimension " + std::to_string(j) + " does not exist");
    if (value_kind(schema.dims[j].def) == ValueKind::Text) {
      fail(ErrorCode::InvalidQuery, "no statistics on text dimension " + schema.dims[j].name);
    }
  }
  GroupStatistics out;
  std::vector<std::vector<double>> values(stat_dims.size());
  for (const auto& r : records) {
    if (!in_group(r)) continue;
    ++out.group_size;
    for (std::size_t k = 0; k < stat_dims.size(); ++k) {
      if (const auto x = numeric_value(slot(r, stat_dims[k]), schema.dims[stat_dims[k]].def)) values[k].push_back(*x);
    }
  }
  for (std::size_t k = 0; k < stat_dims.size(); ++k) {
    DimensionStats s;
    s.index = stat_dims[k];
    s.present_count = values[k].size();
    if (!values[k].empty()) {
      const auto [m, d] = population_moments(values[k]);
      s.mean = m;
      s.std = d;
    }
    out.dims.push_back(s);
  }
  return out;
}

/// Statistics of `stat_dims` over the group selected by `filter`. Sims in the
/// filter need a max_distance to define the group.
inline GroupStatistics group_stats(const SearchQuery& filter, std::span<const std::size_t> stat_dims,
                                   const FlatSchema& schema, std::span<const StoredRecord> records) {
  const CompiledQuery cq(filter, schema);
  if (cq.has_sims() && !cq.max_distance()) {
    fail(ErrorCode::InvalidQuery, "a group filter with sim values needs max_distance");
  }
  return group_stats_where([&](const StoredRecord& r) { return cq.in_group(r); }, stat_dims, schema, records);
}

inline GroupStatistics group_stats(const SearchQuery& filter, std::span<const std::size_t> stat_dims,
                                   const SpaceSnapshot& snap) {
  return group_stats(filter, stat_dims, snap.schema(), snap.records());
}

struct CrossSpaceQuery {
  std::map<GlobalDimensionId, Constraint> constraints;
  std::size_t k = 10;
  Metric metric = Metric::Euclidean;
  std::map<GlobalDimensionId, double> weight_overrides;
  std::optional<double> max_distance;
};

struct CrossSpaceHit {
  UlRef space;
  Hit hit;
};

/// Runs the query in every space whose latest flattening has all constrained
/// dimensions (first slot when a dimension occurs twice) and merges by
/// (distance, space UL, record id).
inline std::vector<CrossSpaceHit> cross_space_search(Database& db, const CrossSpaceQuery& q) {
  if (q.constraints.empty()) fail(ErrorCode::InvalidQuery, "query needs at least one constraint");
  if (q.k < 1) fail(ErrorCode::InvalidQuery, "k must be at least 1");
  std::vector<CrossSpaceHit> merged;
  for (const auto& ul : db.registry().local_table()) {
    if (!db.registry().contains(ul)) continue;
    auto snap = db.snapshot(ul);
    const auto& dims = snap.schema().dims;
    auto slot_of = [&](const GlobalDimensionId& g) -> std::optional<std::size_t> {
      for (std::size_t j = 0; j < dims.size(); ++j) {
        if (dims[j].gid == g) return j;
      }
      return std::nullopt;
    };
    SearchQuery local{{}, q.k, q.metric, {}, q.max_distance};
    bool usable = true;
    for (const auto& [g, c] : q.constraints) {
      const auto j = slot_of(g);
      if (!j) {
        usable = false;
        break;
      }
      local.constraints[*j] = c;
    }
    if (!usable) continue;
    for (const auto& [g, w] : q.weight_overrides) {
      if (const auto j = slot_of(g)) local.weight_overrides[*j] = w;
    }
    for (auto& h : search(local, snap).hits) merged.push_back({ul, std::move(h)});
  }
  std::sort(merged.begin(), merged.end(), [](const CrossSpaceHit& a, const CrossSpaceHit& b) {
    if (a.hit.distance != b.hit.distance) return a.hit.distance < b.hit.distance;
    const auto ta = to_text(a.space), tb = to_text(b.space);
    if (ta != tb) return ta < tb;
    return a.hit.record_id < b.hit.record_id;
  });
  if (merged.size() > q.k) merged.resize(q.k);
  return merged;
}

}  // namespace dvs
