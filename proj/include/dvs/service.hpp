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

// HTTP service over a Database.
//
//   GET  /spaces                              spaces with record counts
//   PUT  /spaces/{id}                         publish a definition (JSON)
//   GET  /spaces/{id}[?version=N]             definition and flattened dimensions
//   GET  /spaces/{id}/export                  export stream (binary)
//   POST /spaces/import                       import an export stream (binary)
//   POST /spaces/{id}/dvs                     JSON array or binary DV stream
//   POST /spaces/{id}/search
//   POST /spaces/{id}/stats
//   POST /spaces/{id}/suggest-dimensions
//   POST /spaces/{id}/suggest-intervals
//   POST /spaces/{id}/evaluate-variants
//   GET  /dimensions/{gid}/usages             gid = "<ul>@<index>"
//   POST /federated/search                    coordinator
//   POST /federated/answer                    peer
//
// {id} is a local table index, a content hash (hex) or a UL in text form.
// Errors come back as {"error": "<code>", "message": "..."}.

#pragma once

#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "dvs/operations.hpp"

namespace dvs {

struct Peer {
  std::string url;
  std::string name;
};

/// Plain-text "key = value" file; '#' starts a comment. `peer` repeats:
///   peer = http://10.0.0.2:8080 clinic-b
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "dvs-data";
  std::vector<Peer> peers;
  std::size_t k_min = 5;
  std::chrono::milliseconds timeout{2000};
  std::size_t max_k = 100000;
  bool sync = true;

  void validate() const {
    if (k_min < 1) fail(ErrorCode::ValidationFailed, "k_min must be at least 1");
    if (timeout.count() <= 0) fail(ErrorCode::ValidationFailed, "timeout_ms must be positive");
    if (max_k < 1) fail(ErrorCode::ValidationFailed, "max_k must be at least 1");
    if (port < 0 || port > 65535) fail(ErrorCode::ValidationFailed, "port out of range");
  }
};

inline ServiceConfig parse_config(std::istream& in) {
  ServiceConfig c;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  auto number = [&](const std::string& v, const std::string& key) {
    try {
      std::size_t used = 0;
      const long long n = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return n;
    } catch (const std::exception&) {
      fail(ErrorCode::MalformedInput, "config line " + std::to_string(line_no) + ": " + key + " needs an integer");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::MalformedInput, "config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "listen") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos) fail(ErrorCode::MalformedInput, "listen needs host:port");
      c.host = value.substr(0, colon);
      c.port = static_cast<int>(number(value.substr(colon + 1), key));
    } else if (key == "data_dir") {
      c.data_dir = value;
    } else if (key == "peer") {
      const auto space = value.find_first_of(" \t");
      Peer p{value.substr(0, space), space == std::string::npos ? std::string() : trim(value.substr(space))};
      if (p.name.empty()) p.name = p.url;
      c.peers.push_back(std::move(p));
    } else if (key == "k_min") {
      c.k_min = static_cast<std::size_t>(std::max(0LL, number(value, key)));
    } else if (key == "timeout_ms") {
      c.timeout = std::chrono::milliseconds(number(value, key));
    } else if (key == "max_k") {
      c.max_k = static_cast<std::size_t>(std::max(0LL, number(value, key)));
    } else if (key == "sync") {
      if (value != "true" && value != "false") fail(ErrorCode::MalformedInput, "sync must be true or false");
      c.sync = value == "true";
    } else {
      fail(ErrorCode::MalformedInput, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

inline ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read config " + path.string());
  return parse_config(in);
}

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::AppendOnlyViolation:
    case ErrorCode::Conflict: return 409;
    case ErrorCode::NoContributingPeers: return 503;
    case ErrorCode::Io: return 500;
    default: return 400;
  }
}

namespace detail {

struct HttpTarget {
  std::string origin;
  std::string prefix;
};

inline HttpTarget split_http_url(const std::string& url) {
  if (url.rfind("http://", 0) != 0) fail(ErrorCode::NotFound, "only http:// URLs can be fetched: " + url);
  const auto slash = url.find('/', 7);
  if (slash == std::string::npos) return {url, ""};
  return {url.substr(0, slash), url.substr(slash)};
}

inline void set_timeouts(httplib::Client& cli, std::chrono::milliseconds t) {
  const auto sec = static_cast<time_t>(t.count() / 1000);
  const auto usec = static_cast<time_t>((t.count() % 1000) * 1000);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

}  // namespace detail

/// Peer transport over HTTP POST {endpoint}/federated/answer.
inline PeerTransport http_transport() {
  return [](const std::string& endpoint, const std::string& body,
            std::chrono::milliseconds timeout) -> std::optional<std::string> {
    const auto target = detail::split_http_url(endpoint);
    httplib::Client cli(target.origin);
    detail::set_timeouts(cli, timeout);
    auto res = cli.Post(target.prefix + "/federated/answer", body, "application/json");
    if (!res || res->status != 200) return std::nullopt;
    return res->body;
  };
}

/// Definition fetch hook over plain HTTP GET.
inline DefinitionFetcher http_fetcher(std::chrono::milliseconds timeout) {
  return [timeout](const std::string& url) -> Bytes {
    const auto target = detail::split_http_url(url);
    httplib::Client cli(target.origin);
    detail::set_timeouts(cli, timeout);
    auto res = cli.Get(target.prefix.empty() ? "/" : target.prefix);
    if (!res) throw std::runtime_error(httplib::to_string(res.error()));
    if (res->status != 200) throw std::runtime_error("HTTP " + std::to_string(res->status));
    return Bytes(res->body.begin(), res->body.end());
  };
}

class Service {
 public:
  Service(Database& db, ServiceConfig config, PeerTransport transport = http_transport())
      : db_(db), config_(std::move(config)), transport_(std::move(transport)) {
    config_.validate();
    routes();
  }

  ~Service() { stop(); }

  /// Binds (port 0 picks a free one) and serves on a background thread.
  int start() {
    int port = config_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(config_.host);
    } else if (!server_.bind_to_port(config_.host, port)) {
      port = -1;
    }
    if (port < 0) fail(ErrorCode::Io, "cannot listen on " + config_.host + ":" + std::to_string(config_.port));
    port_ = port;
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stop().
  void run() {
    if (!server_.listen(config_.host, config_.port)) {
      fail(ErrorCode::Io, "cannot listen on " + config_.host + ":" + std::to_string(config_.port));
    }
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static void send_json(httplib::Response& res, const Json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        send_json(res, ops::error_json(e), http_status(e.code()));
      } catch (const nlohmann::json::exception& e) {
        send_json(res, {{"error", "MalformedInput"}, {"message", e.what()}}, 400);
      }
    };
  }

  static Json body_json(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
      return Json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::MalformedInput, std::string("request body is not JSON: ") + e.what());
    }
  }

  static ByteView body_bytes(const httplib::Request& req) {
    return {reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()};
  }

  UlRef space(const httplib::Request& req) { return ops::space_id(db_, req.matches[1]); }

  /// POST /spaces/{id}/<name> with a JSON body and a JSON answer.
  template <typename Fn>
  void json_route(const std::string& name, Fn fn) {
    server_.Post("/spaces/(.+)/" + name, guarded([this, fn](const httplib::Request& req, httplib::Response& res) {
      send_json(res, fn(space(req), body_json(req)));
    }));
  }

  void routes() {
    server_.Get("/spaces", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, ops::list_spaces(db_));
    }));

    server_.Post("/spaces/import", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, {{"imported", db_.import_space(body_bytes(req))}});
    }));

    server_.Get(R"(/spaces/(.+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto bytes = db_.export_space(space(req));
      res.set_content(std::string(bytes.begin(), bytes.end()), "application/octet-stream");
    }));

    server_.Post(R"(/spaces/(.+)/dvs)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const UlRef ul = space(req);
      const bool binary = req.get_header_value("Content-Type").rfind("application/octet-stream", 0) == 0;
      const auto dvs = binary ? ops::dvs_from_stream(db_, ul, body_bytes(req)) : ops::dvs_from_json(db_, ul, body_json(req));
      send_json(res, ops::inserted(db_.insert_many(dvs)), 201);
    }));

    const auto max_k = config_.max_k;
    json_route("search", [this, max_k](const UlRef& ul, const Json& b) { return ops::run_search(db_, ul, b, max_k); });
    json_route("stats", [this, max_k](const UlRef& ul, const Json& b) { return ops::run_stats(db_, ul, b, max_k); });
    json_route("suggest-dimensions",
               [this, max_k](const UlRef& ul, const Json& b) { return ops::run_suggest_dimensions(db_, ul, b, max_k); });
    json_route("suggest-intervals",
               [this, max_k](const UlRef& ul, const Json& b) { return ops::run_suggest_intervals(db_, ul, b, max_k); });
    json_route("evaluate-variants", [this](const UlRef& ul, const Json& b) { return ops::run_evaluate(db_, ul, b); });

    server_.Put(R"(/spaces/(.+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto def = definition_from_json(body_json(req));
      const std::string id = req.matches[1];
      UlRef addressed;
      try {
        addressed = ops::space_id(db_, id);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotFound) throw;
        addressed = parse_ul(id);
      }
      if (addressed != def.ul) {
        fail(ErrorCode::ValidationFailed,
             "path addresses " + to_text(addressed) + " but the body defines " + to_text(def.ul));
      }
      const auto out = db_.publish(std::move(def));
      send_json(res, ops::publish_result(db_, out), out.created ? 201 : 200);
    }));

    server_.Get(R"(/spaces/(.+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::optional<std::uint64_t> version;
      if (req.has_param("version")) version = detail::parse_u64(req.get_param_value("version"), "version");
      send_json(res, ops::describe_space(db_, space(req), version));
    }));

    server_.Get(R"(/dimensions/(.+)/usages)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, ops::usages(db_, parse_gid(std::string(req.matches[1]))));
    }));

    server_.Post("/federated/answer", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto freq = federated_request_from_json(body_json(req));
      freq.k_min = std::max(freq.k_min, config_.k_min);
      send_json(res, to_json(peer_answer(freq, db_)));
    }));

    // Body: the request fields (request_id and k_min optional) plus optional
    // "peers" (URL list) and "timeout_ms"; defaults come from the config.
    server_.Post("/federated/search", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto body = body_json(req);
      if (!body.is_object()) fail(ErrorCode::MalformedInput, "request must be an object");
      if (!body.contains("request_id")) body["request_id"] = new_request_id();
      if (!body.contains("k_min")) body["k_min"] = std::to_string(config_.k_min);
      const auto freq = federated_request_from_json(body);
      if (freq.k_min < config_.k_min) fail(ErrorCode::InvalidQuery, "k_min below the configured floor");
      std::vector<std::string> peers;
      if (body.contains("peers")) {
        peers = detail::get_as<std::vector<std::string>>(body.at("peers"), "peers");
      } else {
        for (const auto& p : config_.peers) peers.push_back(p.url);
      }
      auto timeout = config_.timeout;
      if (body.contains("timeout_ms")) timeout = std::chrono::milliseconds(json_count(body.at("timeout_ms"), "timeout_ms"));
      auto out = to_json(coordinate(freq, peers, timeout, transport_));
      out["request_id"] = freq.request_id;
      send_json(res, out);
    }));
  }

  std::string new_request_id() {
    std::lock_guard lock(rng_mu_);
    std::ostringstream s;
    s << std::hex << rng_() << rng_();
    return s.str();
  }

  Database& db_;
  ServiceConfig config_;
  PeerTransport transport_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex rng_mu_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace dvs
