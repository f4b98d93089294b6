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

// dvs: command-line front end over a local data directory.
//
//   dvs space publish def.json        dvs dv encode --space 0 in.json -o out.dvs
//   dvs space list                    dvs search --space 0 query.json
//   dvs serve --config node.conf      dvs federate --config node.conf req.json
//
// "-" reads stdin. Request files use the same JSON as the HTTP routes.

#include <pthread.h>
#include <signal.h>

#include <fstream>
#include <iostream>
#include <iterator>

#include <CLI11.hpp>

#include "dvs/service.hpp"

namespace {

using dvs::Json;

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path, std::ios::binary);
  if (!in) dvs::fail(dvs::ErrorCode::Io, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), {}};
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_input(path));
  } catch (const nlohmann::json::exception& e) {
    dvs::fail(dvs::ErrorCode::MalformedInput, path + ": " + e.what());
  }
}

dvs::ByteView view(const std::string& s) { return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}; }

void write_output(const std::string& path, const dvs::Bytes& bytes) {
  if (path == "-") {
    std::cout.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) dvs::fail(dvs::ErrorCode::Io, "cannot write " + path);
}

void print(const Json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain vector store"};
  app.require_subcommand(1);
  std::string data_dir = "dvs-data";
  bool no_sync = false;
  app.add_option("-d,--data", data_dir, "Data directory")->envname("DVS_DATA");
  app.add_flag("--no-sync", no_sync, "Skip fdatasync after appends");

  std::string file, space, output = "-", config_path;
  std::optional<std::uint64_t> version;
  bool binary = false;
  std::size_t max_k = 100000;

  auto* space_cmd = app.add_subcommand("space", "Publish and inspect definitions")->require_subcommand(1);
  auto* publish = space_cmd->add_subcommand("publish", "Publish a definition (JSON)");
  publish->add_option("file", file)->required();
  auto* validate = space_cmd->add_subcommand("validate", "Check a definition without publishing");
  validate->add_option("file", file)->required();
  space_cmd->add_subcommand("list", "List spaces");
  auto* show = space_cmd->add_subcommand("show", "Definition and flattened dimensions");
  show->add_option("space", space)->required();
  show->add_option("--version", version);
  auto* export_cmd = space_cmd->add_subcommand("export", "Write the export stream of a space");
  export_cmd->add_option("space", space)->required();
  export_cmd->add_option("-o,--output", output);
  auto* import_cmd = space_cmd->add_subcommand("import", "Load an export stream");
  import_cmd->add_option("file", file)->required();
  auto* usages_cmd = space_cmd->add_subcommand("usages", "Spaces that contain a dimension (<ul>@<index>)");
  usages_cmd->add_option("gid", space)->required();

  auto* dv_cmd = app.add_subcommand("dv", "Encode, decode and store vectors")->require_subcommand(1);
  auto* encode = dv_cmd->add_subcommand("encode", "JSON vectors to a binary stream");
  encode->add_option("--space", space)->required();
  encode->add_option("file", file)->required();
  encode->add_option("-o,--output", output);
  auto* decode = dv_cmd->add_subcommand("decode", "Binary stream to JSON vectors");
  decode->add_option("--space", space)->required();
  decode->add_option("file", file)->required();
  auto* insert = dv_cmd->add_subcommand("insert", "Store vectors (JSON, or a stream with --binary)");
  insert->add_option("--space", space)->required();
  insert->add_option("file", file)->required();
  auto* as_binary = insert->add_flag("--binary", binary, "Input is a binary vector stream");
  insert->add_flag("--json", "Input is a JSON array (default)")->excludes(as_binary);

  auto with_space = [&](CLI::App* cmd) {
    cmd->add_option("--space", space)->required();
    cmd->add_option("request", file)->required();
    cmd->add_option("--max-k", max_k);
    return cmd;
  };
  auto* search_cmd = with_space(app.add_subcommand("search", "k-NN and range search"));
  auto* stats_cmd = with_space(app.add_subcommand("stats", "Group statistics"));
  auto* suggest_cmd = app.add_subcommand("suggest", "Decision-support suggestions")->require_subcommand(1);
  auto* suggest_dims = with_space(suggest_cmd->add_subcommand("dimensions", "Rank dimensions by fill"));
  auto* suggest_ints = with_space(suggest_cmd->add_subcommand("intervals", "Intervals around chosen values"));
  auto* evaluate_cmd = with_space(app.add_subcommand("evaluate", "Outcome statistics per decision variant"));

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("-c,--config", config_path, "Config file")->envname("DVS_CONFIG");
  auto* federate = app.add_subcommand("federate", "Ask the configured peers and pool their answers");
  federate->add_option("-c,--config", config_path, "Config file")->envname("DVS_CONFIG")->required();
  federate->add_option("request", file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) {
      dvs::ServiceConfig config;
      if (!config_path.empty()) config = dvs::load_config(config_path);
      if (app.get_option("--data")->count() > 0) config.data_dir = data_dir;
      if (no_sync) config.sync = false;
      dvs::Database db(config.data_dir, {config.sync});
      db.set_fetcher(dvs::http_fetcher(config.timeout));
      if (db.recovered_bytes() > 0) std::cerr << "dropped " << db.recovered_bytes() << " torn bytes on recovery\n";
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
      dvs::Service service(db, config);
      const int port = service.start();
      std::cerr << "listening on " << config.host << ":" << port << "\n";
      int sig = 0;
      sigwait(&stop_signals, &sig);
      service.stop();
      return 0;
    }

    if (federate->parsed()) {
      const auto config = dvs::load_config(config_path);
      auto body = read_json(file);
      if (!body.contains("request_id")) body["request_id"] = "cli";
      if (!body.contains("k_min")) body["k_min"] = std::to_string(config.k_min);
      const auto req = dvs::federated_request_from_json(body);
      if (req.k_min < config.k_min) dvs::fail(dvs::ErrorCode::InvalidQuery, "k_min below the configured floor");
      std::vector<std::string> peers;
      for (const auto& p : config.peers) peers.push_back(p.url);
      print(dvs::to_json(dvs::coordinate(req, peers, config.timeout, dvs::http_transport())));
      return 0;
    }

    dvs::Database db(data_dir, {!no_sync});
    db.set_fetcher(dvs::http_fetcher(std::chrono::milliseconds(5000)));
    auto ul = [&] { return dvs::ops::space_id(db, space); };

    if (publish->parsed()) {
      print(dvs::ops::publish_result(db, db.publish(dvs::definition_from_json(read_json(file)))));
    } else if (validate->parsed()) {
      const auto prepared = db.registry().prepare(dvs::definition_from_json(read_json(file)));
      print({{"valid", true}, {"hash", dvs::to_hex(prepared.hash)}, {"already_published", prepared.existing.has_value()}});
    } else if (space_cmd->got_subcommand("list")) {
      print(dvs::ops::list_spaces(db));
    } else if (show->parsed()) {
      print(dvs::ops::describe_space(db, ul(), version));
    } else if (export_cmd->parsed()) {
      write_output(output, db.export_space(ul()));
    } else if (import_cmd->parsed()) {
      print({{"imported", db.import_space(view(read_input(file)))}});
    } else if (usages_cmd->parsed()) {
      print(dvs::ops::usages(db, dvs::parse_gid(space)));
    } else if (encode->parsed()) {
      const auto dvs_in = dvs::ops::dvs_from_json(db, ul(), read_json(file));
      write_output(output, dvs::ops::dvs_to_stream(db, dvs_in));
    } else if (decode->parsed()) {
      const auto bytes = read_input(file);
      print(dvs::ops::dvs_to_json(db, dvs::ops::dvs_from_stream(db, ul(), view(bytes))));
    } else if (insert->parsed()) {
      const auto target = ul();
      const auto dvs_in = binary ? dvs::ops::dvs_from_stream(db, target, view(read_input(file)))
                                 : dvs::ops::dvs_from_json(db, target, read_json(file));
      print(dvs::ops::inserted(db.insert_many(dvs_in)));
    } else if (search_cmd->parsed()) {
      print(dvs::ops::run_search(db, ul(), read_json(file), max_k));
    } else if (stats_cmd->parsed()) {
      print(dvs::ops::run_stats(db, ul(), read_json(file), max_k));
    } else if (suggest_dims->parsed()) {
      print(dvs::ops::run_suggest_dimensions(db, ul(), read_json(file), max_k));
    } else if (suggest_ints->parsed()) {
      print(dvs::ops::run_suggest_intervals(db, ul(), read_json(file), max_k));
    } else if (evaluate_cmd->parsed()) {
      print(dvs::ops::run_evaluate(db, ul(), read_json(file)));
    }
  } catch (const dvs::Error& e) {
    std::cerr << dvs::ops::error_json(e).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
