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

#include <atomic>

#include <gtest/gtest.h>

#include "federation_fixture.hpp"

namespace dvs {
namespace {

using testing::code_of;
using testing::TempDir;

PeerResponse stats(std::size_t n, std::map<std::size_t, PeerDimStats> dims) {
  PeerResponse r;
  r.request_id = "r";
  r.outcome = PeerResponse::Outcome::Stats;
  r.n = n;
  r.dims = std::move(dims);
  return r;
}

TEST(PoolTest, MatchesDirectMomentsOfConcatenation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> all;
    std::vector<PeerResponse> parts;
    const std::size_t peers = 1 + rng() % 6;
    for (std::size_t p = 0; p < peers; ++p) {
      std::vector<double> xs(1 + rng() % 300);
      for (auto& x : xs) x = static_cast<double>(static_cast<std::int64_t>(rng() % 20001) - 10000) / 7.0;
      const auto m = oracle::moments(xs);
      parts.push_back(stats(xs.size(), {{0, {xs.size(), m.mean, m.std}}}));
      all.insert(all.end(), xs.begin(), xs.end());
    }
    const auto direct = oracle::moments(all);
    const auto pooled = pool(parts);
    EXPECT_EQ(pooled.total_n, all.size());
    EXPECT_EQ(pooled.dims.at(0).count, all.size());
    EXPECT_NEAR(pooled.dims.at(0).mean, direct.mean, 1e-9);
    EXPECT_NEAR(pooled.dims.at(0).std, direct.std, 1e-9);
  }
}

TEST(PoolTest, SmallExamples) {
  auto two = pool(std::vector{stats(2, {{0, {2, 1.0, 0.0}}}), stats(3, {{0, {3, 2.0, 0.0}}})});
  EXPECT_EQ(two.total_n, 5u);
  EXPECT_DOUBLE_EQ(two.dims.at(0).mean, 1.6);

  const auto single = pool(std::vector{stats(7, {{0, {7, 0.25, 1.5}}})});
  EXPECT_EQ(single.dims.at(0).mean, 0.25);
  EXPECT_EQ(single.dims.at(0).std, 1.5);

  const auto lo = oracle::moments({1, 2, 3}), hi = oracle::moments({4, 5, 6});
  const auto all = oracle::moments({1, 2, 3, 4, 5, 6});
  const auto halves = pool(std::vector{stats(3, {{0, {3, lo.mean, lo.std}}}), stats(3, {{0, {3, hi.mean, hi.std}}})});
  EXPECT_NEAR(halves.dims.at(0).mean, all.mean, 1e-12);
  EXPECT_NEAR(halves.dims.at(0).std, all.std, 1e-12);
}

TEST(PoolTest, WeightsEachDimensionByItsPresentCount) {
  // dim 1 present on 2 of peer a's 10 records only
  const auto pooled = pool(std::vector{stats(10, {{0, {10, 1.0, 0.0}}, {1, {2, 5.0, 1.0}}}),
                                       stats(30, {{0, {30, 3.0, 0.0}}, {1, {6, 1.0, 0.0}}})});
  EXPECT_EQ(pooled.total_n, 40u);
  EXPECT_DOUBLE_EQ(pooled.dims.at(0).mean, 2.5);
  EXPECT_DOUBLE_EQ(pooled.dims.at(0).std, std::sqrt(0.75));
  EXPECT_EQ(pooled.dims.at(1).count, 8u);
  EXPECT_DOUBLE_EQ(pooled.dims.at(1).mean, 2.0);
  // (2 (1 + 9) + 6 (0 + 1)) / 8
  EXPECT_DOUBLE_EQ(pooled.dims.at(1).std, std::sqrt(26.0 / 8.0));
}

TEST(PoolTest, OrderOfResponsesDoesNotMatter) {
  std::vector<PeerResponse> parts{stats(3, {{0, {3, 0.1, 0.7}}}), stats(5, {{0, {5, 1e6, 3.3}}}),
                                  stats(7, {{0, {7, -2.5, 0.01}}})};
  const auto a = pool(parts);
  std::reverse(parts.begin(), parts.end());
  const auto b = pool(parts);
  EXPECT_EQ(a.dims.at(0).mean, b.dims.at(0).mean);
  EXPECT_EQ(a.dims.at(0).std, b.dims.at(0).std);
}

TEST(PoolTest, CountsOutcomesAndNeedsAContributor) {
  PeerResponse sup;
  sup.outcome = PeerResponse::Outcome::Suppressed;
  PeerResponse err;
  err.outcome = PeerResponse::Outcome::Error;
  EXPECT_EQ(code_of([&] { pool(std::vector{sup, err}); }), ErrorCode::NoContributingPeers);
  const auto p = pool(std::vector{sup, err, stats(9, {})});
  EXPECT_EQ(p.contributing_peers, 1u);
  EXPECT_EQ(p.suppressed_peers, 1u);
  EXPECT_EQ(p.error_peers, 1u);
}

TEST(WireTest, RequestAndResponseRoundTripThroughText) {
  FederatedRequest r = testing::lab_request(-10, 0.1);
  r.constraints[2] = {2.0, std::nullopt, std::nullopt};
  r.metric = Metric::Manhattan;
  r.weight_overrides[2] = 0.3;
  r.max_distance = 1.5;
  const auto j = to_json(r);
  EXPECT_TRUE(j.at("k_min").is_string());
  EXPECT_TRUE(j.at("constraints").at("0").at("max").is_string());
  const auto back = federated_request_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.constraints, r.constraints);
  EXPECT_EQ(back.weight_overrides, r.weight_overrides);
  EXPECT_EQ(back.max_distance, r.max_distance);
  EXPECT_EQ(back.stat_dims, r.stat_dims);
  EXPECT_EQ(back.metric, r.metric);
  EXPECT_EQ(back.k_min, r.k_min);

  auto resp = stats(12, {{1, {12, 0.1 + 0.2, 1.0 / 3.0}}});
  const auto text = to_json(resp).dump();
  const auto parsed = peer_response_from_json(Json::parse(text));
  EXPECT_EQ(parsed.dims, resp.dims);
  EXPECT_EQ(parsed.n, 12u);
}

TEST(PeerAnswerTest, SuppressesSmallGroupsAndThinDimensions) {
  TempDir dir;
  Database db(dir.path(), {false});
  db.publish(testing::lab_definition());
  std::vector<DomainVector> dvs;
  for (int i = 0; i < 6; ++i) {
    DomainVector dv{testing::kLab, {Integer{i}, Absent{}, EnumIndex{1}, Absent{}}};
    if (i < 4) dv.values[3] = Integer{7};
    if (i < 3) dv.values[1] = Decimal{100 * i};
    dvs.push_back(dv);
  }
  db.insert_many(dvs);

  auto req = testing::lab_request(0, 5);
  req.stat_dims = {0, 1, 3};
  auto out = peer_answer(req, db);
  ASSERT_EQ(out.outcome, PeerResponse::Outcome::Stats);
  EXPECT_EQ(out.n, 6u);
  EXPECT_TRUE(out.dims.contains(0));
  EXPECT_FALSE(out.dims.contains(1));  // 3 present
  EXPECT_FALSE(out.dims.contains(3));  // 4 present

  req.constraints[3] = {std::nullopt, 7.0, 7.0};
  out = peer_answer(req, db);
  EXPECT_EQ(out.outcome, PeerResponse::Outcome::Suppressed);
  EXPECT_EQ(out.n, 0u);
  EXPECT_TRUE(out.dims.empty());
  const auto wire = to_json(out);
  EXPECT_EQ(wire, (Json{{"request_id", req.request_id}, {"outcome", "suppressed"}}));

  req.space = FullUrl{"https://example.org/unknown"};
  out = peer_answer(req, db);
  EXPECT_EQ(out.outcome, PeerResponse::Outcome::Error);
}

TEST(CoordinatorTest, HungPeerCountsAsUnreachableAtDeadline) {
  TempDir dir;
  Database db(dir.path(), {false});
  db.publish(testing::lab_definition());
  db.insert_many(testing::lab_vectors(1, 50));
  auto release = std::make_shared<std::atomic<bool>>(false);
  PeerTransport transport = [&db, release](const std::string& endpoint, const std::string& body,
                                           std::chrono::milliseconds) -> std::optional<std::string> {
    if (endpoint == "hang") {
      while (!release->load()) std::this_thread::sleep_for(std::chrono::milliseconds(5));
      return std::nullopt;
    }
    if (endpoint == "down") return std::nullopt;
    auto resp = peer_answer(federated_request_from_json(Json::parse(body)), db);
    if (endpoint == "stale") resp.request_id = "other";
    return to_json(resp).dump();
  };
  const auto req = testing::lab_request(-1000, 1000);
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = coordinate(req, {"ok", "hang", "down", "stale"}, std::chrono::milliseconds(200), transport);
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  release->store(true);
  EXPECT_LT(elapsed, std::chrono::seconds(2));
  EXPECT_EQ(out.contributing_peers, 1u);
  EXPECT_EQ(out.unreachable_peers, 3u);
  EXPECT_EQ(out.total_n, 50u);
}

TEST(CoordinatorTest, LivePeersPoolToGlobalMoments) {
  testing::PeerCluster cluster(3);
  const auto dvs = testing::lab_vectors(11, 3000);
  cluster.scatter(dvs, 5);
  const auto req = testing::lab_request(-300, 700);
  const auto out = coordinate(req, cluster.urls(), std::chrono::milliseconds(5000), http_transport());
  EXPECT_EQ(out.contributing_peers, 3u);
  for (const std::size_t dim : {0u, 1u, 2u}) {
    const auto m = testing::lab_moments(dvs, dim, -300, 700);
    EXPECT_EQ(out.dims.at(dim).count, m.n) << dim;
    EXPECT_NEAR(out.dims.at(dim).mean, m.mean, 1e-9) << dim;
    EXPECT_NEAR(out.dims.at(dim).std, m.std, 1e-9) << dim;
  }
}

TEST(CoordinatorTest, UnknownPeerAddressIsUnreachable) {
  testing::PeerCluster cluster(1);
  cluster.scatter(testing::lab_vectors(2, 100), 1);
  auto peers = cluster.urls();
  peers.push_back("http://127.0.0.1:1");
  peers.push_back("https://example.org");
  const auto out = coordinate(testing::lab_request(-1000, 1000), peers, std::chrono::milliseconds(2000), http_transport());
  EXPECT_EQ(out.contributing_peers, 1u);
  EXPECT_EQ(out.unreachable_peers, 2u);
}

}  // namespace
}  // namespace dvs
