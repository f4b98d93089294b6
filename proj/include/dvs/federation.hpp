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

// Federated statistics. Peers answer with k-anonymous group statistics only;
// the coordinator pools them.
//
// Request:  {"request_id": "...", "space": "<ul>", "constraints": {...},
//            "stat_dims": ["3"], "k_min": "5", "metric"?, "weights"?,
//            "max_distance"?}
// Response: {"request_id": "...", "outcome": "stats"|"suppressed"|"error",
//            "stats"?: {"n": "12", "dims": {"3": {"count": "12", "mean": "0.5",
//                                                 "std": "0.25"}}},
//            "error"?: "..."}
// Numbers on the wire are decimal strings.

#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <thread>

#include "dvs/api_json.hpp"

namespace dvs {

struct FederatedRequest {
  std::string request_id;
  UlRef space;
  Constraints constraints;
  Metric metric = Metric::Euclidean;
  std::map<std::size_t, double> weight_overrides;
  std::optional<double> max_distance;
  std::vector<std::size_t> stat_dims;
  std::size_t k_min = 1;
};

struct PeerDimStats {
  std::size_t count = 0;
  double mean = 0;
  double std = 0;

  friend bool operator==(const PeerDimStats&, const PeerDimStats&) = default;
};

struct PeerResponse {
  enum class Outcome { Stats, Suppressed, Error };

  std::string request_id;
  Outcome outcome = Outcome::Error;
  std::size_t n = 0;
  /// Dimensions whose present count reaches k_min; the rest are left out.
  std::map<std::size_t, PeerDimStats> dims;
  std::string error;
};

struct PooledDim {
  std::size_t count = 0;
  double mean = 0;
  double std = 0;
};

struct PooledStatistics {
  std::size_t total_n = 0;
  std::map<std::size_t, PooledDim> dims;
  std::size_t contributing_peers = 0;
  std::size_t suppressed_peers = 0;
  std::size_t error_peers = 0;
  std::size_t unreachable_peers = 0;
};

inline Json to_json(const FederatedRequest& r) {
  Json stat_dims = Json::array();
  for (const auto j : r.stat_dims) stat_dims.push_back(std::to_string(j));
  Json out = {{"request_id", r.request_id},
              {"space", to_text(r.space)},
              {"constraints", constraints_to_json(r.constraints, true)},
              {"stat_dims", stat_dims},
              {"k_min", std::to_string(r.k_min)},
              {"metric", to_string(r.metric)}};
  if (!r.weight_overrides.empty()) {
    Json w = Json::object();
    for (const auto& [j, x] : r.weight_overrides) w[std::to_string(j)] = number_text(x);
    out["weights"] = w;
  }
  if (r.max_distance) out["max_distance"] = number_text(*r.max_distance);
  return out;
}

inline FederatedRequest federated_request_from_json(const Json& j) {
  FederatedRequest r;
  r.request_id = detail::get_as<std::string>(detail::require(j, "request_id"), "request_id");
  r.space = parse_ul(detail::get_as<std::string>(detail::require(j, "space"), "space"));
  if (j.contains("constraints")) r.constraints = constraints_from_json(j.at("constraints"), nullptr);
  r.stat_dims = dimension_list_from_json(detail::require(j, "stat_dims"), nullptr);
  r.k_min = json_count(detail::require(j, "k_min"), "k_min");
  if (j.contains("metric")) r.metric = parse_metric(detail::get_as<std::string>(j.at("metric"), "metric"));
  if (j.contains("weights")) r.weight_overrides = weights_from_json(j.at("weights"), nullptr);
  if (j.contains("max_distance") && !j.at("max_distance").is_null()) {
    r.max_distance = json_number(j.at("max_distance"), "max_distance");
  }
  return r;
}

inline Json to_json(const PeerResponse& r) {
  Json out = {{"request_id", r.request_id}};
  switch (r.outcome) {
    case PeerResponse::Outcome::Suppressed:
      out["outcome"] = "suppressed";
      break;
    case PeerResponse::Outcome::Error:
      out["outcome"] = "error";
      out["error"] = r.error;
      break;
    case PeerResponse::Outcome::Stats: {
      out["outcome"] = "stats";
      Json dims = Json::object();
      for (const auto& [j, d] : r.dims) {
        dims[std::to_string(j)] = {
            {"count", std::to_string(d.count)}, {"mean", number_text(d.mean)}, {"std", number_text(d.std)}};
      }
      out["stats"] = {{"n", std::to_string(r.n)}, {"dims", dims}};
      break;
    }
  }
  return out;
}

inline PeerResponse peer_response_from_json(const Json& j) {
  PeerResponse r;
  r.request_id = detail::get_as<std::string>(detail::require(j, "request_id"), "request_id");
  const auto outcome = detail::get_as<std::string>(detail::require(j, "outcome"), "outcome");
  if (outcome == "suppressed") {
    r.outcome = PeerResponse::Outcome::Suppressed;
  } else if (outcome == "error") {
    r.outcome = PeerResponse::Outcome::Error;
    r.error = j.contains("error") ? detail::get_as<std::string>(j.at("error"), "error") : "";
  } else if (outcome == "stats") {
    r.outcome = PeerResponse::Outcome::Stats;
    const auto& stats = detail::require(j, "stats");
    r.n = json_count(detail::require(stats, "n"), "n");
    const auto& dims = detail::require(stats, "dims");
    if (!dims.is_object()) fail(ErrorCode::MalformedInput, "stats.dims must be an object");
    for (const auto& [key, d] : dims.items()) {
      r.dims[dimension_index(key, nullptr)] = {json_count(detail::require(d, "count"), "count"),
                                               json_number(detail::require(d, "mean"), "mean"),
                                               json_number(detail::require(d, "std"), "std")};
    }
  } else {
    fail(ErrorCode::MalformedInput, "unknown outcome '" + outcome + "'");
  }
  return r;
}

/// Local statistics under the anonymity floor. Never throws: failures become
/// an Error outcome.
inline PeerResponse peer_answer(const FederatedRequest& req, Database& db) {
  PeerResponse out;
  out.request_id = req.request_id;
  try {
    if (req.k_min < 1) fail(ErrorCode::InvalidQuery, "k_min must be at least 1");
    const SearchQuery filter{req.constraints, 1, req.metric, req.weight_overrides, req.max_distance};
    auto snap = db.snapshot(req.space);
    const auto stats = group_stats(filter, req.stat_dims, snap);
    if (stats.group_size < req.k_min) {
      out.outcome = PeerResponse::Outcome::Suppressed;
      return out;
    }
    out.outcome = PeerResponse::Outcome::Stats;
    out.n = stats.group_size;
    for (const auto& d : stats.dims) {
      if (d.present_count < req.k_min) continue;
      out.dims[d.index] = {d.present_count, *d.mean, *d.std};
    }
  } catch (const std::exception& e) {
    out.outcome = PeerResponse::Outcome::Error;
    out.dims.clear();
    out.error = e.what();
  }
  return out;
}

/// Pools per dimension, weighted by each peer's present count:
///   M = sum c_i m_i / C,  D^2 = sum c_i (d_i^2 + (m_i - M)^2) / C.
/// Contributions are sorted first so the result does not depend on order.
inline PooledStatistics pool(std::span<const PeerResponse> responses) {
  PooledStatistics out;
  std::map<std::size_t, std::vector<PeerDimStats>> by_dim;
  for (const auto& r : responses) {
    switch (r.outcome) {
      case PeerResponse::Outcome::Suppressed: ++out.suppressed_peers; continue;
      case PeerResponse::Outcome::Error: ++out.error_peers; continue;
      case PeerResponse::Outcome::Stats: break;
    }
    ++out.contributing_peers;
    out.total_n += r.n;
    for (const auto& [j, d] : r.dims) by_dim[j].push_back(d);
  }
  if (out.contributing_peers == 0) fail(ErrorCode::NoContributingPeers, "no peer returned statistics");
  for (auto& [j, parts] : by_dim) {
    std::sort(parts.begin(), parts.end(), [](const PeerDimStats& a, const PeerDimStats& b) {
      return std::tie(a.count, a.mean, a.std) < std::tie(b.count, b.mean, b.std);
    });
    long double c = 0, sum = 0;
    for (const auto& p : parts) {
      c += p.count;
      sum += static_cast<long double>(p.count) * p.mean;
    }
    const long double mean = sum / c;
    long double ss = 0;
    for (const auto& p : parts) {
      const long double dm = p.mean - mean;
      ss += static_cast<long double>(p.count) * (static_cast<long double>(p.std) * p.std + dm * dm);
    }
    PooledDim pd;
    for (const auto& p : parts) pd.count += p.count;
    pd.mean = static_cast<double>(mean);
    pd.std = static_cast<double>(std::sqrt(ss / c));
    out.dims[j] = pd;
  }
  return out;
}

inline Json to_json(const PooledStatistics& p) {
  Json dims = Json::object();
  for (const auto& [j, d] : p.dims) {
    dims[std::to_string(j)] = {
        {"count", std::to_string(d.count)}, {"mean", number_text(d.mean)}, {"std", number_text(d.std)}};
  }
  return {{"total_n", std::to_string(p.total_n)},
          {"dims", dims},
          {"contributing_peers", p.contributing_peers},
          {"suppressed_peers", p.suppressed_peers},
          {"error_peers", p.error_peers},
          {"unreachable_peers", p.unreachable_peers}};
}

/// Sends a JSON body to a peer endpoint and returns the reply body, or
/// nullopt when the peer cannot be reached within `timeout`.
using PeerTransport = std::function<std::optional<std::string>(const std::string& endpoint, const std::string& body,
                                                               std::chrono::milliseconds timeout)>;

/// Asks every peer concurrently and pools what arrives before the deadline.
/// Late, unreachable and unparsable peers count as unreachable.
inline PooledStatistics coordinate(const FederatedRequest& req, const std::vector<std::string>& peers,
                                   std::chrono::milliseconds timeout, PeerTransport transport) {
  if (req.k_min < 1) fail(ErrorCode::InvalidQuery, "k_min must be at least 1");
  struct Shared {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<std::optional<std::string>> replies;
    std::size_t finished = 0;
  };
  auto shared = std::make_shared<Shared>();
  shared->replies.resize(peers.size());
  const std::string body = to_json(req).dump();
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (std::size_t i = 0; i < peers.size(); ++i) {
    // Detached so a hung peer cannot hold the coordinator past the deadline.
    std::thread([shared, transport, endpoint = peers[i], body, timeout, i] {
      std::optional<std::string> reply;
      try {
        reply = transport(endpoint, body, timeout);
      } catch (...) {
      }
      std::lock_guard lock(shared->mu);
      shared->replies[i] = std::move(reply);
      ++shared->finished;
      shared->cv.notify_all();
    }).detach();
  }
  std::vector<std::optional<std::string>> replies;
  {
    std::unique_lock lock(shared->mu);
    shared->cv.wait_until(lock, deadline, [&] { return shared->finished == peers.size(); });
    replies = shared->replies;
  }
  std::vector<PeerResponse> responses;
  std::size_t unreachable = 0;
  for (const auto& reply : replies) {
    if (!reply) {
      ++unreachable;
      continue;
    }
    try {
      auto r = peer_response_from_json(Json::parse(*reply));
      if (r.request_id != req.request_id) {
        ++unreachable;
        continue;
      }
      responses.push_back(std::move(r));
    } catch (const std::exception&) {
      ++unreachable;
    }
  }
  PooledStatistics out;
  try {
    out = pool(responses);
  } catch (const Error& e) {
    fail(e.code(), std::string(e.what()) + " (" + std::to_string(unreachable) + " unreachable)");
  }
  out.unreachable_peers = unreachable;
  return out;
}

}  // namespace dvs
