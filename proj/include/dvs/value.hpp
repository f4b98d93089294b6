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

#include <compare>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dvs/ul.hpp"

namespace dvs {

struct Absent {
  friend auto operator<=>(const Absent&, const Absent&) = default;
};

struct Integer {
  std::int64_t value = 0;
  friend auto operator<=>(const Integer&, const Integer&) = default;
};

/// Fixed-scale decimal; the scale lives in the dimension definition.
struct Decimal {
  std::int64_t mantissa = 0;
  friend auto operator<=>(const Decimal&, const Decimal&) = default;
};

struct EnumIndex {
  std::uint64_t index = 0;
  friend auto operator<=>(const EnumIndex&, const EnumIndex&) = default;
};

/// Count of the dimension's date unit (seconds, minutes, days, ...) since
/// 1970-01-01, or since midnight for time-of-day formats.
struct Timestamp {
  std::int64_t count = 0;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct Text {
  std::string text;
  friend auto operator<=>(const Text&, const Text&) = default;
};

using Value = std::variant<Absent, Integer, Decimal, EnumIndex, Timestamp, Text>;

inline bool is_present(const Value& v) { return !std::holds_alternative<Absent>(v); }

/// One element of a Domain Space: the space's UL plus one slot per
/// flattened dimension.
struct DomainVector {
  UlRef space;
  std::vector<Value> values;

  friend bool operator==(const DomainVector&, const DomainVector&) = default;
};

}  // namespace dvs
