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

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "dvs/definition.hpp"
#include "dvs/error.hpp"

namespace dvs::testing {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(-1);
}

inline DimensionDefinition int_dim(std::string keyword, std::optional<double> min = std::nullopt,
                                   std::optional<double> max = std::nullopt) {
  DimensionDefinition d;
  d.keyword = std::move(keyword);
  d.representation = Representation::Integer;
  d.min = min;
  d.max = max;
  return d;
}

inline DimensionDefinition list_dim(std::string keyword, std::size_t labels) {
  DimensionDefinition d;
  d.keyword = std::move(keyword);
  d.representation = Representation::List;
  for (std::size_t i = 0; i < labels; ++i) d.enum_labels.push_back({{"en", "label" + std::to_string(i)}});
  return d;
}

inline DimensionDefinition text_dim(std::string keyword) {
  DimensionDefinition d;
  d.keyword = std::move(keyword);
  d.representation = Representation::Text;
  return d;
}

inline DimensionDefinition money_dim(std::string keyword) {
  DimensionDefinition d;
  d.keyword = std::move(keyword);
  d.representation = Representation::Money;
  d.unit = "Euro";
  return d;
}

inline DomainDefinition make_def(std::string url, std::vector<SpaceComponent> components,
                                 std::uint64_t version = 1) {
  DomainDefinition d;
  d.ul = FullUrl{std::move(url)};
  d.version = version;
  d.name = {{"en", "test space"}};
  d.components = std::move(components);
  d.created = 1700000000;
  return d;
}

inline NestedSpace nest(std::string url, std::string label = "sub",
                        std::optional<std::uint64_t> pin = std::nullopt) {
  return NestedSpace{FullUrl{std::move(url)}, pin, std::move(label)};
}

/// Random flat definition covering every representation kind.
inline DomainDefinition random_definition(std::mt19937_64& rng, const std::string& url) {
  std::vector<SpaceComponent> comps;
  const std::size_t n = 1 + rng() % 20;
  for (std::size_t i = 0; i < n; ++i) {
    DimensionDefinition d;
    d.keyword = "d" + std::to_string(i);
    switch (rng() % 7) {
      case 0: d = list_dim(d.keyword, 1 + rng() % 12); break;
      case 1: d.representation = Representation::Text; break;
      case 2: d.representation = Representation::Integer; break;
      case 3: d.representation = Representation::Money; break;
      case 4: d.representation = Representation::FloatMedium; d.scale = rng() % 7; break;
      case 5: d.representation = Representation::FloatMax; break;
      case 6: d.representation = Representation::Integer; d.date_format = static_cast<DateFormat>(rng() % 8); break;
    }
    d.required = rng() % 5 == 0;
    d.weight = 0.5 + static_cast<double>(rng() % 8);
    comps.emplace_back(std::move(d));
  }
  return make_def(url, std::move(comps));
}

/// Random vector valid for a flat schema (no bounds declared by the
/// generator above, so any kind-correct value validates).
inline DomainVector random_dv(std::mt19937_64& rng, const FlatSchema& schema) {
  DomainVector dv{schema.space, {}};
  for (const auto& f : schema.dims) {
    if (!f.def.required && rng() % 3 == 0) {
      dv.values.emplace_back(Absent{});
      continue;
    }
    const auto wide = static_cast<std::int64_t>(rng() >> (4 + rng() % 60));
    const std::int64_t sval = (rng() & 1) ? wide : -wide;
    switch (value_kind(f.def)) {
      case ValueKind::Integer: dv.values.emplace_back(Integer{sval}); break;
      case ValueKind::Decimal: dv.values.emplace_back(Decimal{sval}); break;
      case ValueKind::Timestamp: dv.values.emplace_back(Timestamp{sval}); break;
      case ValueKind::Enum: dv.values.emplace_back(EnumIndex{rng() % f.def.enum_labels.size()}); break;
      case ValueKind::Text: {
        std::string s;
        const auto len = rng() % 12;
        for (std::size_t i = 0; i < len; ++i) s += static_cast<char>('a' + rng() % 26);
        if (rng() % 4 == 0) s += "\xC3\xA4";  // a-umlaut
        dv.values.emplace_back(Text{s});
        break;
      }
    }
  }
  return dv;
}

/// Temporary directory removed at scope exit.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dvs-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace dvs::testing
