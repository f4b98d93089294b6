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

#include <gtest/gtest.h>

#include "federation_fixture.hpp"

namespace dvs {
namespace {

using testing::TempDir;

std::string path_of(const std::string& ul) { return httplib::detail::encode_url(ul); }

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    db_ = std::make_unique<Database>(dir_.path(), StoreOptions{false});
    ServiceConfig config;
    config.port = 0;
    config.k_min = 2;
    config.max_k = 50;
    service_ = std::make_unique<Service>(*db_, config);
    port_ = service_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override { service_->stop(); }

  httplib::Result put_json(const std::string& path, const Json& body) {
    return client_->Put(path, body.dump(), "application/json");
  }
  httplib::Result post_json(const std::string& path, const Json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  void publish_lab() {
    auto res = put_json("/spaces/" + path_of(testing::kLabUrl), to_json(testing::lab_definition()));
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 201) << res->body;
  }

  TempDir dir_;
  std::unique_ptr<Database> db_;
  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST(ConfigTest, ParsesKeysPeersAndComments) {
  std::istringstream in(
      "# node a\n"
      "listen = 0.0.0.0:9001\n"
      "data_dir = /var/lib/dvs   # trailing\n"
      "peer = http://10.0.0.2:8080 clinic-b\n"
      "peer = http://10.0.0.3:8080\n"
      "k_min = 7\n"
      "timeout_ms = 1500\n"
      "max_k = 20\n"
      "sync = false\n");
  const auto c = parse_config(in);
  EXPECT_EQ(c.host, "0.0.0.0");
  EXPECT_EQ(c.port, 9001);
  EXPECT_EQ(c.data_dir, "/var/lib/dvs");
  ASSERT_EQ(c.peers.size(), 2u);
  EXPECT_EQ(c.peers[0].name, "clinic-b");
  EXPECT_EQ(c.peers[1].name, "http://10.0.0.3:8080");
  EXPECT_EQ(c.k_min, 7u);
  EXPECT_EQ(c.timeout.count(), 1500);
  EXPECT_EQ(c.max_k, 20u);
  EXPECT_FALSE(c.sync);
}

TEST(ConfigTest, RejectsBadValues) {
  for (const char* text : {"k_min = 0\n", "timeout_ms = 0\n", "colour = red\n", "k_min = five\n", "listen\n",
                           "sync = maybe\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_config(in), Error) << text;
  }
}

TEST(StatusTest, MapsErrorCodes) {
  EXPECT_EQ(http_status(ErrorCode::NotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::AppendOnlyViolation), 409);
  EXPECT_EQ(http_status(ErrorCode::Conflict), 409);
  EXPECT_EQ(http_status(ErrorCode::NoContributingPeers), 503);
  EXPECT_EQ(http_status(ErrorCode::Io), 500);
  EXPECT_EQ(http_status(ErrorCode::InvalidQuery), 400);
  EXPECT_EQ(http_status(ErrorCode::ValidationFailed), 400);
}

TEST_F(ServiceTest, PublishListAndDescribe) {
  publish_lab();
  auto again = put_json("/spaces/" + path_of(testing::kLabUrl), to_json(testing::lab_definition()));
  ASSERT_TRUE(again);
  EXPECT_EQ(again->status, 200);
  EXPECT_FALSE(Json::parse(again->body).at("created").get<bool>());

  auto list = client_->Get("/spaces");
  ASSERT_TRUE(list);
  const auto spaces = Json::parse(list->body).at("spaces");
  ASSERT_EQ(spaces.size(), 1u);
  EXPECT_EQ(spaces[0].at("ul"), testing::kLabUrl);
  EXPECT_EQ(spaces[0].at("records"), 0);

  for (const std::string& id : {path_of(testing::kLabUrl), std::string("0"), spaces[0].at("hash").get<std::string>()}) {
    auto res = client_->Get("/spaces/" + id);
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200) << id << " " << res->body;
    const auto j = Json::parse(res->body);
    EXPECT_EQ(j.at("flattened").size(), 4u);
    EXPECT_EQ(j.at("flattened")[1].at("name"), "amount");
    EXPECT_EQ(definition_from_json(j.at("definition")), testing::lab_definition());
  }
}

TEST_F(ServiceTest, ErrorsCarryCodeAndStatus) {
  auto res = client_->Get("/spaces/" + path_of("https://example.org/none"));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(Json::parse(res->body).at("error"), "NotFound");

  publish_lab();
  auto reordered = testing::lab_definition();
  reordered.version = 2;
  std::swap(reordered.components[0], reordered.components[1]);
  res = put_json("/spaces/" + path_of(testing::kLabUrl), to_json(reordered));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(Json::parse(res->body).at("error"), "AppendOnlyViolation");

  res = put_json("/spaces/" + path_of("https://example.org/elsewhere"), to_json(testing::lab_definition()));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  res = post_json("/spaces/0/search", {{"constraints", {{"x", {{"sim", 1}}}}}, {"k", 51}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(Json::parse(res->body).at("error"), "InvalidQuery");

  res = client_->Post("/spaces/0/search", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(Json::parse(res->body).at("error"), "MalformedInput");

  res = post_json("/spaces/0/dvs", Json::array({Json::array({5000, nullptr, nullptr, nullptr})}));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(Json::parse(res->body).at("error"), "ValidationFailed");
}

TEST_F(ServiceTest, BinaryAndJsonIngestionStoreTheSameRecords) {
  publish_lab();
  const auto dvs = testing::lab_vectors(21, 200);
  const auto schema = db_->registry().version(testing::kLab).schema;

  DvStreamWriter writer;
  for (const auto& dv : dvs) writer.write(dv, *schema);
  const auto& bytes = writer.bytes();
  auto res = client_->Post("/spaces/0/dvs", std::string(bytes.begin(), bytes.end()), "application/octet-stream");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 201) << res->body;

  Json arr = Json::array();
  for (const auto& dv : dvs) arr.push_back(to_json(dv, *schema));
  res = post_json("/spaces/" + path_of(testing::kLabUrl) + "/dvs", arr);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 201) << res->body;
  const auto ids = Json::parse(res->body).at("record_ids");
  EXPECT_EQ(ids.front(), 200);
  EXPECT_EQ(ids.back(), 399);

  auto snap = db_->snapshot(testing::kLab);
  ASSERT_EQ(snap.records().size(), 400u);
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_EQ(snap.records()[i].values, dvs[i].values);
    EXPECT_EQ(snap.records()[200 + i].values, dvs[i].values);
  }
}

TEST_F(ServiceTest, SearchStatsAndDecisionRoutesMatchLibrary) {
  publish_lab();
  const auto dvs = testing::lab_vectors(4, 500);
  db_->insert_many(dvs);
  auto snap_schema = db_->registry().version(testing::kLab).schema;

  const Json query = {{"constraints", {{"x", {{"sim", 120}}}, {"grade", {{"min", 1}, {"max", 2}}}}}, {"k", 7},
                      {"metric", "manhattan"}};
  auto res = post_json("/spaces/0/search", query);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto hits = Json::parse(res->body).at("hits");
  {
    auto snap = db_->snapshot(testing::kLab);
    const auto direct = search(search_query_from_json(query, snap_schema.get()), snap);
    ASSERT_EQ(hits.size(), direct.hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_EQ(hits[i].at("record_id"), direct.hits[i].record_id);
      EXPECT_EQ(hits[i].at("distance").get<double>(), direct.hits[i].distance);
    }
  }

  res = post_json("/spaces/0/stats", {{"filter", {{"constraints", {{"x", {{"min", -100}, {"max", 400}}}}}}},
                                      {"stat_dims", {"amount", 0}}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto stats = Json::parse(res->body);
  const auto m = testing::lab_moments(dvs, 1, -100, 400);
  EXPECT_EQ(stats.at("dims")[0].at("present_count"), m.n);
  EXPECT_NEAR(stats.at("dims")[0].at("mean").get<double>(), m.mean, 1e-9);
  EXPECT_NEAR(stats.at("dims")[0].at("std").get<double>(), m.std, 1e-9);

  res = post_json("/spaces/0/suggest-dimensions", {{"condition", {{"constraints", {{"x", {{"min", 0}}}}}}}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto ranked = Json::parse(res->body).at("dimensions");
  ASSERT_EQ(ranked.size(), 3u);  // marker is never filled
  EXPECT_EQ(ranked[2].at("name"), "amount");

  res = post_json("/spaces/0/suggest-intervals", {{"values", {{"amount", "5000.5"}}}, {"factors", {{"amount", 2}}}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto interval = Json::parse(res->body).at("intervals")[0];
  const auto all = testing::lab_moments(dvs, 1, -1000, 1000);
  EXPECT_EQ(interval.at("spread").get<double>(), all.std);
  EXPECT_EQ(interval.at("lower").get<double>(), 5000.5 - 2 * all.std);

  res = post_json("/spaces/0/evaluate-variants",
                  {{"preconditions", {{{"dimension", "x"}, {"center", 0}, {"spread", 500}}}},
                   {"variants", {{{"name", "low"}, {"decision", {{"grade", {{"min", 0}, {"max", 0}}}}}},
                                 {{"decision", {{"grade", {{"min", 3}, {"max", 3}}}}}}}},
                   {"result_dims", {"amount"}}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto variants = Json::parse(res->body).at("variants");
  ASSERT_EQ(variants.size(), 2u);
  EXPECT_EQ(variants[0].at("name"), "low");
  EXPECT_EQ(variants[1].at("name"), "variant 1");
}

TEST_F(ServiceTest, UsagesExportAndImport) {
  publish_lab();
  auto outer = testing::make_def("https://example.org/outer", {testing::nest(testing::kLabUrl, "lab")});
  auto res = put_json("/spaces/" + path_of("https://example.org/outer"), to_json(outer));
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 201) << res->body;

  res = client_->Get("/dimensions/" + path_of(testing::kLabUrl + "@1") + "/usages");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto usages = Json::parse(res->body).at("usages");
  ASSERT_EQ(usages.size(), 2u);
  EXPECT_EQ(usages[1].at("name"), "lab.amount");

  db_->insert_many(testing::lab_vectors(8, 40));
  auto exported = client_->Get("/spaces/0/export");
  ASSERT_TRUE(exported);
  ASSERT_EQ(exported->status, 200);

  TempDir other_dir;
  Database other(other_dir.path(), {false});
  ServiceConfig config;
  config.port = 0;
  Service other_service(other, config);
  httplib::Client other_client("127.0.0.1", other_service.start());
  res = other_client.Post("/spaces/import", exported->body, "application/octet-stream");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(Json::parse(res->body).at("imported"), 40);
  auto again = other_client.Get("/spaces/" + path_of(testing::kLabUrl) + "/export");
  ASSERT_TRUE(again);
  EXPECT_EQ(again->body, exported->body);
}

TEST(FederatedServiceTest, CoordinatorRouteEnforcesFloorAndSuppresses) {
  testing::PeerCluster cluster(3, 5);
  const auto dvs = testing::lab_vectors(31, 900);
  cluster.scatter(dvs, 2);
  std::vector<DomainVector> marked;
  for (int i = 0; i < 4; ++i) marked.push_back({testing::kLab, {Integer{i}, Absent{}, EnumIndex{0}, Integer{7}}});
  cluster.db(1).insert_many(marked);

  TempDir dir;
  Database local(dir.path(), {false});
  ServiceConfig config;
  config.port = 0;
  config.k_min = 5;
  for (const auto& url : cluster.urls()) config.peers.push_back({url, url});
  testing::WireCapture capture;
  Service coordinator(local, config, capture.wrap(http_transport()));
  httplib::Client client("127.0.0.1", coordinator.start());

  Json body = to_json(testing::lab_request(-1000, 1000));
  body.erase("request_id");
  body.erase("k_min");
  auto res = client.Post("/federated/search", body.dump(), "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto pooled = Json::parse(res->body);
  EXPECT_EQ(pooled.at("contributing_peers"), 3);
  EXPECT_EQ(pooled.at("total_n"), "904");
  const auto m = testing::lab_moments(dvs, 1, -1000, 1000);
  EXPECT_NEAR(parse_number_text(pooled.at("dims").at("1").at("mean").get<std::string>()), m.mean, 1e-9);

  body["k_min"] = "1";
  res = client.Post("/federated/search", body.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  capture.requests.clear();
  capture.replies.clear();
  body.erase("k_min");
  body["constraints"] = {{"3", {{"min", "7"}, {"max", "7"}}}};
  res = client.Post("/federated/search", body.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 503);
  EXPECT_EQ(Json::parse(res->body).at("error"), "NoContributingPeers");
  ASSERT_EQ(capture.replies.size(), 3u);
  for (const auto& reply : capture.replies) {
    const auto j = Json::parse(reply);
    EXPECT_EQ(j.at("outcome"), "suppressed");
    EXPECT_EQ(j.size(), 2u) << reply;
  }
}

TEST(FederatedServiceTest, PeerAppliesItsOwnFloor) {
  testing::PeerCluster cluster(1, 5);
  std::vector<DomainVector> few;
  for (int i = 0; i < 4; ++i) few.push_back({testing::kLab, {Integer{i}, Absent{}, EnumIndex{0}, Absent{}}});
  cluster.db(0).insert_many(few);
  auto req = testing::lab_request(-1000, 1000, 1);
  const auto reply = http_transport()(cluster.urls()[0], to_json(req).dump(), std::chrono::milliseconds(2000));
  ASSERT_TRUE(reply);
  EXPECT_EQ(Json::parse(*reply).at("outcome"), "suppressed");
}

}  // namespace
}  // namespace dvs
