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

// Decision support: dimension suggestion, interval suggestion around chosen
// values, inverse-width weights, and outcome statistics per decision variant.
// Every call is stateless.

#pragma once

#include "dvs/search.hpp"

namespace dvs {

enum class Role { Precondition, Decision, Result, Untagged };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::Precondition: return "precondition";
    case Role::Decision: return "decision";
    case Role::Result: return "result";
    case Role::Untagged: return "untagged";
  }
  return "untagged";
}

inline Role parse_role(std::string_view s) {
  if (s == "precondition") return Role::Precondition;
  if (s == "decision") return Role::Decision;
  if (s == "result") return Role::Result;
  if (s == "untagged") return Role::Untagged;
  fail(ErrorCode::InvalidQuery, "unknown role '" + std::string(s) + "'");
}

/// Role per flattened dimension; dimensions not listed are untagged.
using RoleTagging = std::map<std::size_t, Role>;

struct Interval {
  std::size_t index = 0;
  double center = 0;
  double spread = 0;
  double factor = 1;

  double lower() const { return center - factor * spread; }
  double upper() const { return center + factor * spread; }
  bool exact() const { return spread == 0 || factor == 0; }
};

struct IntervalSpec {
  std::vector<Interval> intervals;
};

struct DimensionRank {
  std::size_t index = 0;
  std::size_t present_count = 0;

  friend bool operator==(const DimensionRank&, const DimensionRank&) = default;
};

/// Dimensions ranked by how many DVs of the condition's group fill them;
/// ties by index. Dimensions nobody fills are left out.
inline std::vector<DimensionRank> suggest_dimensions(const SearchQuery& condition, const FlatSchema& schema,
                                                     std::span<const StoredRecord> records) {
  const CompiledQuery cq(condition, schema);
  std::vector<std::size_t> counts(schema.size(), 0);
  for (const auto& r : records) {
    if (!cq.in_group(r)) continue;
    for (std::size_t j = 0; j < schema.size(); ++j) counts[j] += is_present(slot(r, j));
  }
  std::vector<DimensionRank> out;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] > 0) out.push_back({j, counts[j]});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const DimensionRank& a, const DimensionRank& b) { return a.present_count > b.present_count; });
  return out;
}

/// I_k = [x_k - r_k s_k, x_k + r_k s_k] with s_k the population std of
/// dimension k over the group. Factors default to 1.
inline IntervalSpec suggest_intervals(const std::map<std::size_t, double>& centers,
                                      const std::map<std::size_t, double>& factors, const SearchQuery& group,
                                      const FlatSchema& schema, std::span<const StoredRecord> records) {
  if (centers.empty()) fail(ErrorCode::InvalidQuery, "no values to build intervals around");
  for (const auto& [j, r] : factors) {
    if (!centers.contains(j)) fail(ErrorCode::InvalidQuery, "factor for dimension without a value: " + std::to_string(j));
    if (!(r >= 0) || !std::isfinite(r)) fail(ErrorCode::InvalidQuery, "factors must be non-negative");
  }
  std::vector<std::size_t> dims;
  for (const auto& [j, x] : centers) {
    if (!std::isfinite(x)) fail(ErrorCode::InvalidQuery, "values must be finite");
    dims.push_back(j);
  }
  const auto stats = group_stats(group, dims, schema, records);
  IntervalSpec out;
  for (const auto& s : stats.dims) {
    if (!s.std) {
      fail(ErrorCode::InvalidQuery, "group has no values on " + schema.dims[s.index].name + " to derive a spread");
    }
    const auto f = factors.find(s.index);
    out.intervals.push_back({s.index, centers.at(s.index), *s.std, f == factors.end() ? 1.0 : f->second});
  }
  return out;
}

/// w_k = 1 / (upper_k - lower_k); zero-width intervals get no weight.
inline std::map<std::size_t, double> weights_from_intervals(const IntervalSpec& spec) {
  std::map<std::size_t, double> out;
  for (const auto& i : spec.intervals) {
    const double width = i.upper() - i.lower();
    if (width > 0) out[i.index] = 1.0 / width;
  }
  return out;
}

/// Range constraints [lower, upper] for every interval.
inline Constraints interval_constraints(const IntervalSpec& spec) {
  Constraints out;
  for (const auto& i : spec.intervals) {
    if (!(i.spread >= 0) || !(i.factor >= 0)) fail(ErrorCode::InvalidQuery, "spread and factor must be non-negative");
    if (out.contains(i.index)) fail(ErrorCode::InvalidQuery, "two intervals on dimension " + std::to_string(i.index));
    out[i.index] = {std::nullopt, i.lower(), i.upper()};
  }
  return out;
}

struct Variant {
  std::string name;
  /// Ranges on decision dimensions; an assignment is min == max.
  Constraints decision;
};

struct VariantOutcome {
  std::string name;
  GroupStatistics stats;
};

struct EvaluationRequest {
  IntervalSpec preconditions;
  std::vector<Variant> variants;
  std::vector<std::size_t> result_dims;
  /// Optional; when given, every dimension used must carry the matching role.
  RoleTagging roles;
};

inline std::vector<VariantOutcome> evaluate_variants(const EvaluationRequest& req, const FlatSchema& schema,
                                                     std::span<const StoredRecord> records) {
  if (req.result_dims.empty()) fail(ErrorCode::InvalidQuery, "at least one result dimension is required");
  if (!req.roles.empty()) {
    auto expect = [&](std::size_t j, Role role) {
      const auto it = req.roles.find(j);
      const Role got = it == req.roles.end() ? Role::Untagged : it->second;
      if (got != role) {
        fail(ErrorCode::InvalidQuery, "dimension " + std::to_string(j) + " is tagged " + std::string(to_string(got)) +
                                          ", used as " + std::string(to_string(role)));
      }
    };
    for (const auto& i : req.preconditions.intervals) expect(i.index, Role::Precondition);
    for (const auto& v : req.variants) {
      for (const auto& [j, c] : v.decision) expect(j, Role::Decision);
    }
    for (const auto j : req.result_dims) expect(j, Role::Result);
  }
  const CompiledQuery pre(SearchQuery{interval_constraints(req.preconditions), 1, Metric::Euclidean, {}, {}}, schema);
  std::vector<VariantOutcome> out;
  for (const auto& v : req.variants) {
    for (const auto& [j, c] : v.decision) {
      if (c.sim) fail(ErrorCode::InvalidQuery, "variant '" + v.name + "' uses sim; give ranges or assignments");
    }
    const CompiledQuery dec(SearchQuery{v.decision, 1, Metric::Euclidean, {}, {}}, schema);
    out.push_back({v.name, group_stats_where([&](const StoredRecord& r) { return pre.in_ranges(r) && dec.in_ranges(r); },
                                             req.result_dims, schema, records)});
  }
  return out;
}

}  // namespace dvs
