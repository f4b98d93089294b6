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

// Registry plus per-space append-only DV logs under one data directory.
//
//   <dir>/table.log          local UL table (TableEntry records)
//   <dir>/spaces/<h>.log     definitions and DVs of one space; h = hex prefix
//                            of SHA-256 over the UL text
//
// A DV record payload is: uint record_id | uint version | DV wire bytes.

#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <span>

#include "dvs/dv_codec.hpp"
#include "dvs/json_io.hpp"
#include "dvs/log_file.hpp"
#include "dvs/registry.hpp"

namespace dvs {

struct StoreOptions {
  /// fdatasync after every append. Off only for scratch stores.
  bool sync = true;
};

struct StoredRecord {
  std::uint64_t record_id = 0;
  std::uint64_t version = 0;
  std::vector<Value> values;
};

/// Slot j of a record; slots appended by later versions read as Absent.
inline const Value& slot(const StoredRecord& r, std::size_t j) {
  static const Value kAbsent{Absent{}};
  return j < r.values.size() ? r.values[j] : kAbsent;
}

/// Read view of one space. Holds the space's read lock while alive, so the
/// record list cannot change underneath a query.
class SpaceSnapshot {
 public:
  SpaceSnapshot(std::shared_lock<std::shared_mutex> lock, std::shared_ptr<const FlatSchema> schema,
                const std::vector<StoredRecord>* records)
      : lock_(std::move(lock)), schema_(std::move(schema)), records_(records) {}

  const FlatSchema& schema() const { return *schema_; }
  std::span<const StoredRecord> records() const { return *records_; }

 private:
  std::shared_lock<std::shared_mutex> lock_;
  std::shared_ptr<const FlatSchema> schema_;
  const std::vector<StoredRecord>* records_;
};

struct SpaceSummary {
  UlRef ul;
  std::uint64_t local_index = 0;
  std::uint64_t latest_version = 0;
  std::size_t dimension_count = 0;
  std::size_t record_count = 0;
  std::string content_hash;
};

/// Fetches a definition document for a FullUrl. Throws on failure.
using DefinitionFetcher = std::function<Bytes(const std::string& url)>;

inline constexpr char kExportMagic[4] = {'D', 'V', 'X', '1'};

class Database {
 public:
  explicit Database(std::filesystem::path dir, StoreOptions options = {})
      : dir_(std::move(dir)), options_(options) {
    std::filesystem::create_directories(dir_ / "spaces");
    recover();
  }

  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;

  const Registry& registry() const { return registry_; }
  const std::filesystem::path& directory() const { return dir_; }

  /// Bytes cut from torn log tails while opening.
  std::size_t recovered_bytes() const { return recovered_bytes_; }

  void set_fetcher(DefinitionFetcher f) { fetcher_ = std::move(f); }

  PublishOutcome publish(DomainDefinition def) {
    std::lock_guard publish_lock(publish_mu_);
    auto prepared = registry_.prepare(std::move(def));
    if (prepared.existing) return *prepared.existing;
    const UlRef ul = prepared.def.ul;
    SpaceData& space = space_for(ul);
    {
      std::lock_guard write_lock(space.write_mu);
      space.log.append(frame_record(RecordType::Definition, prepared.canonical));
    }
    const bool had_index = registry_.local_index(ul).has_value();
    auto out = registry_.add(std::move(prepared));
    if (!had_index) append_table_entry(ul);
    return out;
  }

  /// Global UL for any UL form; unknown FullUrls go through the fetch hook.
  UlRef resolve_ul(const UlRef& ul, const UlContext* context = nullptr) {
    UlRef global = registry_.global_ul(ul, context);
    if (!registry_.contains(global)) fetch(global);
    return global;
  }

  std::shared_ptr<const DomainDefinition> resolve(const UlRef& ul, std::optional<std::uint64_t> version = std::nullopt,
                                                  const UlContext* context = nullptr) {
    return registry_.version(resolve_ul(ul, context), version).def;
  }

  std::uint64_t insert(const DomainVector& dv) {
    return insert_many(std::span<const DomainVector>(&dv, 1)).front();
  }

  /// Validates every vector first; nothing is stored if any fails. Returns
  /// record ids in input order.
  std::vector<std::uint64_t> insert_many(std::span<const DomainVector> dvs) {
    std::map<std::string, std::vector<std::pair<std::size_t, Pending>>> by_space;
    for (std::size_t i = 0; i < dvs.size(); ++i) {
      const UlRef ul = resolve_ul(dvs[i].space);
      const auto versions = registry_.versions(ul);
      const PublishedVersion* chosen = &versions.back();
      for (auto it = versions.rbegin(); it != versions.rend(); ++it) {
        if (it->schema->size() == dvs[i].values.size()) {
          chosen = &*it;
          break;
        }
      }
      const auto violations = validate_dv(dvs[i], *chosen->schema);
      if (!violations.empty()) {
        std::string msg = "vector " + std::to_string(i) + " rejected:";
        for (const auto& v : violations) msg += "\n  " + v;
        fail(ErrorCode::ValidationFailed, msg);
      }
      by_space[to_text(ul)].push_back({i, Pending{ul, chosen->def->version, dvs[i].values}});
    }
    std::vector<std::uint64_t> ids(dvs.size());
    for (auto& [key, items] : by_space) {
      std::vector<Pending> batch;
      batch.reserve(items.size());
      for (auto& item : items) batch.push_back(std::move(item.second));
      const auto first = append_records(space_for(batch.front().ul), batch);
      for (std::size_t k = 0; k < items.size(); ++k) ids[items[k].first] = first + k;
    }
    return ids;
  }

  SpaceSnapshot snapshot(const UlRef& ul) {
    const UlRef global = resolve_ul(ul);
    SpaceData& space = existing_space(global);
    std::shared_lock lock(space.mu);
    return SpaceSnapshot(std::move(lock), registry_.version(global).schema, &space.records);
  }

  std::vector<SpaceSummary> list() const {
    std::vector<SpaceSummary> out;
    const auto table = registry_.local_table();
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (!registry_.contains(table[i])) continue;
      const auto latest = registry_.version(table[i]);
      SpaceSummary s;
      s.ul = table[i];
      s.local_index = i;
      s.latest_version = latest.def->version;
      s.dimension_count = latest.schema->size();
      s.content_hash = to_hex(latest.hash);
      if (const auto* space = find_space(table[i])) {
        std::shared_lock lock(space->mu);
        s.record_count = space->records.size();
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  /// Definitions (dependencies first, the space's own versions last) then
  /// the DV records as a UL-compressed stream.
  Bytes export_space(const UlRef& ul) {
    const UlRef global = resolve_ul(ul);
    std::vector<Bytes> defs;
    std::set<std::string> seen;
    collect_definitions(global, seen, defs);
    ByteWriter w;
    w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kExportMagic), 4));
    w.uint(defs.size());
    for (const auto& d : defs) w.blob(d);
    SpaceData& space = existing_space(global);
    std::shared_lock lock(space.mu);
    w.uint(space.records.size());
    UlContext ctx;
    for (const auto& r : space.records) {
      w.uint(r.version);
      encode_ul(ctx.has_previous() ? UlRef{SameAsBefore{}} : global, ctx.has_previous(), w.buffer());
      encode_dv_body({global, r.values}, *registry_.version(global, r.version).schema, w);
      ctx.advance(global);
    }
    return std::move(w).bytes();
  }

  /// Loads an export stream. The exported space must not hold records here;
  /// any definition already present must be identical. Returns the number of
  /// records imported.
  std::size_t import_space(ByteView stream) {
    ByteReader r(stream);
    const auto magic = r.raw(4);
    if (!std::equal(magic.begin(), magic.end(), kExportMagic)) {
      fail(ErrorCode::MalformedInput, "not a DVS export stream");
    }
    const auto def_count = r.uint();
    if (def_count == 0) fail(ErrorCode::MalformedInput, "export stream has no definitions");
    std::vector<DomainDefinition> defs;
    for (std::uint64_t i = 0; i < def_count; ++i) defs.push_back(parse_canonical(r.blob()));
    const UlRef target = defs.back().ul;
    if (const auto* space = find_space(target)) {
      std::shared_lock lock(space->mu);
      if (!space->records.empty()) fail(ErrorCode::Conflict, to_text(target) + " already holds records");
    }
    for (auto& d : defs) {
      if (const auto existing = registry_.find(d.ul, d.version)) {
        if (content_hash(*existing) != content_hash(d)) {
          fail(ErrorCode::Conflict, to_text(d.ul) + " version " + std::to_string(d.version) +
                                        " differs from the imported one");
        }
        continue;
      }
      const auto out = publish(std::move(d));
      if (!out.created) fail(ErrorCode::Conflict, "imported definition collides with " + to_text(out.ul));
    }
    const auto count = r.uint();
    std::vector<Pending> batch;
    UlContext ctx;
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto version = r.uint();
      const UlRef ul = ctx.resolve(decode_ul(r, ctx.has_previous()));
      ctx.advance(ul);
      if (ul != target) fail(ErrorCode::MalformedInput, "export record belongs to another space");
      const auto schema = registry_.version(target, version).schema;
      DomainVector dv{ul, decode_dv_body(r, *schema)};
      const auto violations = validate_dv(dv, *schema);
      if (!violations.empty()) fail(ErrorCode::ValidationFailed, "imported record: " + violations.front());
      batch.push_back({target, version, std::move(dv.values)});
    }
    if (!r.done()) fail(ErrorCode::MalformedInput, "trailing bytes after export stream");
    if (!batch.empty()) append_records(space_for(target), batch);
    return batch.size();
  }

 private:
  struct SpaceData {
    mutable std::shared_mutex mu;
    std::mutex write_mu;
    LogFile log;
    std::vector<StoredRecord> records;
  };

  struct Pending {
    UlRef ul;
    std::uint64_t version = 0;
    std::vector<Value> values;
  };

  std::filesystem::path space_path(const UlRef& ul) const {
    const auto text = to_text(ul);
    const auto h = to_hex(sha256(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size())));
    return dir_ / "spaces" / (h.substr(0, 32) + ".log");
  }

  const SpaceData* find_space(const UlRef& ul) const {
    std::shared_lock lock(spaces_mu_);
    const auto it = spaces_.find(to_text(ul));
    return it == spaces_.end() ? nullptr : it->second.get();
  }

  SpaceData& existing_space(const UlRef& ul) {
    const auto* s = find_space(ul);
    if (!s) fail(ErrorCode::NotFound, "unknown space " + to_text(ul));
    return const_cast<SpaceData&>(*s);
  }

  SpaceData& space_for(const UlRef& ul) {
    std::unique_lock lock(spaces_mu_);
    auto& slot = spaces_[to_text(ul)];
    if (!slot) {
      slot = std::make_unique<SpaceData>();
      recovered_bytes_ += slot->log.open(space_path(ul), options_.sync, [](RecordType, ByteView) {});
    }
    return *slot;
  }

  std::uint64_t append_records(SpaceData& space, std::vector<Pending>& batch) {
    std::lock_guard write_lock(space.write_mu);
    std::uint64_t first;
    {
      std::shared_lock lock(space.mu);
      first = space.records.size();
    }
    Bytes frames;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      ByteWriter w;
      w.uint(first + k);
      w.uint(batch[k].version);
      encode_dv({batch[k].ul, batch[k].values}, *registry_.version(batch[k].ul, batch[k].version).schema, false,
                w.buffer());
      const auto f = frame_record(RecordType::Vector, w.bytes());
      frames.insert(frames.end(), f.begin(), f.end());
    }
    space.log.append(frames);
    std::unique_lock lock(space.mu);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      space.records.push_back({first + k, batch[k].version, std::move(batch[k].values)});
    }
    return first;
  }

  void append_table_entry(const UlRef& ul) {
    std::lock_guard lock(table_mu_);
    table_log_.append(frame_record(RecordType::TableEntry, encode_ul(ul, false)));
  }

  void collect_definitions(const UlRef& ul, std::set<std::string>& seen, std::vector<Bytes>& out) {
    if (!seen.insert(to_text(ul)).second) return;
    const auto versions = registry_.versions(ul);
    for (const auto& v : versions) {
      for (const auto& c : v.def->components) {
        if (const auto* n = std::get_if<NestedSpace>(&c)) collect_definitions(n->space, seen, out);
      }
    }
    for (const auto& v : versions) out.push_back(v.canonical);
  }

  void fetch(const UlRef& ul) {
    const auto* url = std::get_if<FullUrl>(&ul);
    if (!url || !fetcher_) fail(ErrorCode::NotFound, "unknown space " + to_text(ul));
    Bytes doc;
    try {
      doc = fetcher_(url->url);
    } catch (const std::exception& e) {
      fail(ErrorCode::NotFound, "fetching " + url->url + " failed: " + e.what());
    }
    DomainDefinition def;
    try {
      if (!doc.empty() && doc.front() == '{') {
        def = definition_from_json(Json::parse(doc.begin(), doc.end()));
      } else {
        def = parse_canonical(doc);
      }
    } catch (const std::exception& e) {
      fail(ErrorCode::NotFound, "fetched definition for " + url->url + " is unusable: " + e.what());
    }
    if (def.ul != ul) fail(ErrorCode::NotFound, "fetched definition names " + to_text(def.ul));
    publish(std::move(def));
  }

  // Replays the table, then every space log. Definitions are registered in
  // dependency order; DV records are decoded last.
  void recover() {
    std::vector<UlRef> table;
    recovered_bytes_ += table_log_.open(dir_ / "table.log", options_.sync, [&](RecordType t, ByteView p) {
      if (t == RecordType::TableEntry) table.push_back(decode_ul(p, false));
    });
    for (const auto& ul : table) registry_.assign_local(ul);

    struct Raw {
      std::vector<DomainDefinition> defs;
      std::vector<Bytes> dvs;
    };
    std::map<std::string, Raw> raw;
    std::map<std::string, std::unique_ptr<SpaceData>> opened;
    for (const auto& entry : std::filesystem::directory_iterator(dir_ / "spaces")) {
      if (entry.path().extension() != ".log") continue;
      auto space = std::make_unique<SpaceData>();
      Raw r;
      recovered_bytes_ += space->log.open(entry.path(), options_.sync, [&](RecordType t, ByteView p) {
        if (t == RecordType::Definition) r.defs.push_back(parse_canonical(p));
        if (t == RecordType::Vector) r.dvs.emplace_back(p.begin(), p.end());
      });
      if (r.defs.empty()) continue;
      const auto key = to_text(r.defs.front().ul);
      opened[key] = std::move(space);
      raw[key] = std::move(r);
    }

    std::map<std::string, std::size_t> next;
    for (bool progress = true; progress;) {
      progress = false;
      for (auto& [key, r] : raw) {
        auto& i = next[key];
        while (i < r.defs.size()) {
          try {
            registry_.add(registry_.prepare(r.defs[i]));
          } catch (const Error& e) {
            if (e.code() != ErrorCode::ValidationFailed) throw;
            break;
          }
          ++i;
          progress = true;
        }
      }
    }
    for (auto& [key, r] : raw) {
      if (next[key] != r.defs.size()) {
        fail(ErrorCode::UnresolvedReference, "cannot restore definitions of " + key);
      }
    }

    std::set<std::string> persisted;
    for (const auto& ul : table) persisted.insert(to_text(ul));
    for (const auto& ul : registry_.local_table()) {
      if (!persisted.contains(to_text(ul))) append_table_entry(ul);
    }

    for (auto& [key, r] : raw) {
      auto& space = *opened[key];
      for (const auto& payload : r.dvs) {
        ByteReader reader(payload);
        const auto id = reader.uint();
        const auto version = reader.uint();
        if (id != space.records.size()) fail(ErrorCode::Io, "record ids out of sequence in " + key);
        const UlRef ul = decode_ul(reader, false);
        const auto values = decode_dv_body(reader, *registry_.version(ul, version).schema);
        space.records.push_back({id, version, values});
      }
      spaces_[key] = std::move(opened[key]);
    }
  }

  std::filesystem::path dir_;
  StoreOptions options_;
  Registry registry_;
  DefinitionFetcher fetcher_;
  std::mutex publish_mu_;
  std::mutex table_mu_;
  LogFile table_log_;
  mutable std::shared_mutex spaces_mu_;
  std::map<std::string, std::unique_ptr<SpaceData>> spaces_;
  std::size_t recovered_bytes_ = 0;
};

}  // namespace dvs
