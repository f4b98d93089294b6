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

// In-memory registry of published definitions and the local UL table.
// Persistence lives in store.hpp.

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "dvs/canonical.hpp"
#include "dvs/definition.hpp"

namespace dvs {

struct PublishedVersion {
  std::shared_ptr<const DomainDefinition> def;
  std::shared_ptr<const FlatSchema> schema;
  Digest hash{};
  Bytes canonical;
};

struct PublishOutcome {
  UlRef ul;
  std::uint64_t version = 0;
  Digest hash{};
  bool created = false;
};

/// A definition checked and ready to be recorded.
struct PreparedDefinition {
  DomainDefinition def;
  Digest hash{};
  Bytes canonical;
  /// Set when identical content is already published.
  std::optional<PublishOutcome> existing;
};

struct DimensionUsage {
  UlRef space;
  std::size_t index = 0;

  friend bool operator==(const DimensionUsage&, const DimensionUsage&) = default;
};

class Registry : public DefinitionSource {
 public:
  /// Pins unpinned nested references to the nested space's latest version,
  /// validates, and checks version sequencing and the append-only rule.
  PreparedDefinition prepare(DomainDefinition def) const {
    std::shared_lock lock(mu_);
    for (auto& c : def.components) {
      auto* n = std::get_if<NestedSpace>(&c);
      if (!n || n->version_pin) continue;
      if (auto found = find_locked(n->space, std::nullopt)) n->version_pin = found->version;
    }
    const auto violations = validate_definition(def, LockedView{*this});
    if (!violations.empty()) {
      std::string msg = "definition rejected:";
      for (const auto& v : violations) msg += "\n  " + v;
      fail(ErrorCode::ValidationFailed, msg);
    }
    PreparedDefinition out;
    out.canonical = canonical_bytes(def);
    out.hash = sha256(out.canonical);
    const auto it = spaces_.find(to_text(def.ul));
    if (it != spaces_.end()) {
      const auto& versions = it->second;
      for (const auto& v : versions) {
        if (v.hash == out.hash) {
          out.existing = PublishOutcome{def.ul, v.def->version, v.hash, false};
          out.def = std::move(def);
          return out;
        }
      }
      const auto latest = versions.back().def->version;
      if (def.version <= latest) {
        fail(ErrorCode::AppendOnlyViolation, to_text(def.ul) + " version " + std::to_string(def.version) +
                                                 " is already published with different content");
      }
      if (def.version != latest + 1) {
        fail(ErrorCode::ValidationFailed, "next version of " + to_text(def.ul) + " must be " +
                                              std::to_string(latest + 1));
      }
      if (!is_append_only_extension(*versions.back().def, def)) {
        fail(ErrorCode::AppendOnlyViolation,
             "version " + std::to_string(def.version) + " must keep all components of version " +
                 std::to_string(latest) + " unchanged and in order");
      }
    } else if (def.version != 1) {
      fail(ErrorCode::ValidationFailed, "first version of " + to_text(def.ul) + " must be 1");
    }
    out.def = std::move(def);
    return out;
  }

  /// Records a prepared definition. Returns the outcome and whether the
  /// space received a new local table index.
  PublishOutcome add(PreparedDefinition p) {
    if (p.existing) return *p.existing;
    std::unique_lock lock(mu_);
    auto& versions = spaces_[to_text(p.def.ul)];
    const std::uint64_t expected = versions.empty() ? 1 : versions.back().def->version + 1;
    if (p.def.version != expected) {
      fail(ErrorCode::Conflict, "concurrent publish of " + to_text(p.def.ul));
    }
    PublishedVersion v;
    v.schema = std::make_shared<const FlatSchema>(flatten(p.def, LockedView{*this}));
    v.def = std::make_shared<const DomainDefinition>(std::move(p.def));
    v.hash = p.hash;
    v.canonical = std::move(p.canonical);
    by_hash_[to_hex(v.hash)] = {v.def->ul, v.def->version};
    PublishOutcome out{v.def->ul, v.def->version, v.hash, true};
    if (!table_index_.contains(to_text(v.def->ul))) assign_local_locked(v.def->ul);
    versions.push_back(std::move(v));
    return out;
  }

  std::shared_ptr<const DomainDefinition> find(const UlRef& ul,
                                               std::optional<std::uint64_t> version) const override {
    std::shared_lock lock(mu_);
    return find_locked(ul, version);
  }

  /// Published version record; throws NotFound.
  PublishedVersion version(const UlRef& ul, std::optional<std::uint64_t> version = std::nullopt) const {
    std::shared_lock lock(mu_);
    const auto* v = version_locked(ul, version);
    if (!v) {
      fail(ErrorCode::NotFound, "no definition " + to_text(ul) +
                                    (version ? " version " + std::to_string(*version) : std::string()));
    }
    return *v;
  }

  std::vector<PublishedVersion> versions(const UlRef& ul) const {
    std::shared_lock lock(mu_);
    const auto it = spaces_.find(to_text(ul));
    if (it == spaces_.end()) return {};
    return it->second;
  }

  std::optional<std::pair<UlRef, std::uint64_t>> find_by_hash(const std::string& hex) const {
    std::shared_lock lock(mu_);
    const auto it = by_hash_.find(hex);
    if (it == by_hash_.end()) return std::nullopt;
    return it->second;
  }

  /// Maps a UL to its global form. LocalTableIndex goes through the table,
  /// SameAsBefore through `context`.
  UlRef global_ul(const UlRef& ul, const UlContext* context = nullptr) const {
    if (std::holds_alternative<SameAsBefore>(ul)) {
      if (!context) fail(ErrorCode::ContextMissing, "SameAsBefore without a preceding UL");
      return global_ul(context->resolve(ul), nullptr);
    }
    if (const auto* l = std::get_if<LocalTableIndex>(&ul)) {
      std::shared_lock lock(mu_);
      if (l->index >= table_.size()) {
        fail(ErrorCode::NotFound, "local table has no index " + std::to_string(l->index));
      }
      return table_[l->index];
    }
    return ul;
  }

  std::vector<UlRef> local_table() const {
    std::shared_lock lock(mu_);
    return table_;
  }

  std::optional<std::uint64_t> local_index(const UlRef& ul) const {
    std::shared_lock lock(mu_);
    const auto it = table_index_.find(to_text(ul));
    if (it == table_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Appends a UL to the local table unless present; returns its index.
  std::uint64_t assign_local(const UlRef& ul) {
    std::unique_lock lock(mu_);
    const auto it = table_index_.find(to_text(ul));
    if (it != table_index_.end()) return it->second;
    return assign_local_locked(ul);
  }

  bool contains(const UlRef& ul) const {
    std::shared_lock lock(mu_);
    return spaces_.contains(to_text(ul));
  }

  /// Every registered space (latest version) whose flattening has `gid`,
  /// one entry per slot, in local table order.
  std::vector<DimensionUsage> dimension_usages(const GlobalDimensionId& gid) const {
    std::shared_lock lock(mu_);
    std::vector<DimensionUsage> out;
    for (const auto& ul : table_) {
      const auto it = spaces_.find(to_text(ul));
      if (it == spaces_.end()) continue;
      const auto& dims = it->second.back().schema->dims;
      for (std::size_t j = 0; j < dims.size(); ++j) {
        if (dims[j].gid == gid) out.push_back({ul, j});
      }
    }
    return out;
  }

 private:
  // DefinitionSource over the registry for use while mu_ is already held.
  struct LockedView : DefinitionSource {
    const Registry& r;
    explicit LockedView(const Registry& reg) : r(reg) {}
    std::shared_ptr<const DomainDefinition> find(const UlRef& ul,
                                                 std::optional<std::uint64_t> version) const override {
      return r.find_locked(ul, version);
    }
  };

  const PublishedVersion* version_locked(const UlRef& ul, std::optional<std::uint64_t> version) const {
    const auto it = spaces_.find(to_text(ul));
    if (it == spaces_.end() || it->second.empty()) return nullptr;
    if (!version) return &it->second.back();
    if (*version < 1 || *version > it->second.size()) return nullptr;
    return &it->second[*version - 1];
  }

  std::shared_ptr<const DomainDefinition> find_locked(const UlRef& ul,
                                                      std::optional<std::uint64_t> version) const {
    const auto* v = version_locked(ul, version);
    return v ? v->def : nullptr;
  }

  std::uint64_t assign_local_locked(const UlRef& ul) {
    const auto index = static_cast<std::uint64_t>(table_.size());
    table_.push_back(ul);
    table_index_[to_text(ul)] = index;
    return index;
  }

  mutable std::shared_mutex mu_;
  std::map<std::string, std::vector<PublishedVersion>> spaces_;
  std::map<std::string, std::pair<UlRef, std::uint64_t>> by_hash_;
  std::vector<UlRef> table_;
  std::map<std::string, std::uint64_t> table_index_;
};

}  // namespace dvs
