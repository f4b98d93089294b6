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

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dvs/self_extending.hpp"

namespace dvs {

inline bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

/// The four wire forms of a Uniform Locator.
struct FullUrl {
  std::string url;
  friend auto operator<=>(const FullUrl&, const FullUrl&) = default;
};

struct NumericHierarchic {
  std::vector<std::uint64_t> path;
  friend auto operator<=>(const NumericHierarchic&, const NumericHierarchic&) = default;
};

struct LocalTableIndex {
  std::uint64_t index = 0;
  friend auto operator<=>(const LocalTableIndex&, const LocalTableIndex&) = default;
};

struct SameAsBefore {
  friend auto operator<=>(const SameAsBefore&, const SameAsBefore&) = default;
};

using UlRef = std::variant<SameAsBefore, FullUrl, NumericHierarchic, LocalTableIndex>;

enum class UlTag : std::uint8_t {
  SameAsBefore = 0,
  FullUrl = 1,
  NumericHierarchic = 2,
  LocalTableIndex = 3,
};

/// FullUrl and NumericHierarchic identify a space globally; the other two
/// forms are abbreviations that only mean something in context.
inline bool is_global(const UlRef& ul) {
  return std::holds_alternative<FullUrl>(ul) || std::holds_alternative<NumericHierarchic>(ul);
}

// Text form used in JSON, URLs and map keys:
//   ul:same               SameAsBefore
//   ul:local/<n>          LocalTableIndex
//   ul:n/<a>.<b>.<c>      NumericHierarchic
//   anything else         FullUrl
inline std::string to_text(const UlRef& ul) {
  struct Visitor {
    std::string operator()(const SameAsBefore&) const { return "ul:same"; }
    std::string operator()(const FullUrl& u) const { return u.url; }
    std::string operator()(const LocalTableIndex& l) const {
      return "ul:local/" + std::to_string(l.index);
    }
    std::string operator()(const NumericHierarchic& n) const {
      std::string s = "ul:n/";
      for (std::size_t i = 0; i < n.path.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(n.path[i]);
      }
      return s;
    }
  };
  return std::visit(Visitor{}, ul);
}

namespace detail {
inline std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    fail(ErrorCode::MalformedInput, "bad number in " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}
}  // namespace detail

inline UlRef parse_ul(std::string_view text) {
  if (text == "ul:same") return SameAsBefore{};
  if (text.starts_with("ul:local/")) {
    return LocalTableIndex{detail::parse_u64(text.substr(9), "local UL")};
  }
  if (text.starts_with("ul:n/")) {
    NumericHierarchic n;
    auto rest = text.substr(5);
    while (true) {
      const auto dot = rest.find('.');
      n.path.push_back(detail::parse_u64(rest.substr(0, dot), "numeric UL"));
      if (dot == std::string_view::npos) break;
      rest = rest.substr(dot + 1);
    }
    return n;
  }
  if (text.starts_with("ul:")) fail(ErrorCode::MalformedInput, "unknown UL form: " + std::string(text));
  if (text.empty()) fail(ErrorCode::MalformedInput, "empty UL");
  return FullUrl{std::string(text)};
}

inline void check_ul(const UlRef& ul) {
  if (const auto* u = std::get_if<FullUrl>(&ul)) {
    if (u->url.empty()) fail(ErrorCode::MalformedInput, "FullUrl must be non-empty");
    if (!is_valid_utf8(u->url)) fail(ErrorCode::MalformedInput, "FullUrl must be valid UTF-8");
    if (u->url.starts_with("ul:")) fail(ErrorCode::MalformedInput, "FullUrl may not use the reserved 'ul:' prefix");
  } else if (const auto* n = std::get_if<NumericHierarchic>(&ul)) {
    if (n->path.empty()) fail(ErrorCode::MalformedInput, "NumericHierarchic path must be non-empty");
  }
}

/// Tracks whether a preceding UL exists in the current stream, and which.
struct UlContext {
  std::optional<UlRef> previous;

  bool has_previous() const { return previous.has_value(); }

  /// Replaces SameAsBefore by the UL it stands for.
  UlRef resolve(const UlRef& ul) const {
    if (std::holds_alternative<SameAsBefore>(ul)) {
      if (!previous) fail(ErrorCode::ContextMissing, "SameAsBefore without a preceding UL");
      return *previous;
    }
    return ul;
  }

  void advance(const UlRef& ul) { previous = resolve(ul); }
};

inline void encode_ul(const UlRef& ul, bool previous_present, Bytes& out) {
  check_ul(ul);
  struct Visitor {
    bool previous_present;
    ByteWriter w;
    void operator()(const SameAsBefore&) {
      if (!previous_present) fail(ErrorCode::ContextMissing, "SameAsBefore at stream start");
      w.byte(static_cast<std::uint8_t>(UlTag::SameAsBefore));
    }
    void operator()(const FullUrl& u) {
      w.byte(static_cast<std::uint8_t>(UlTag::FullUrl));
      w.text(u.url);
    }
    void operator()(const NumericHierarchic& n) {
      w.byte(static_cast<std::uint8_t>(UlTag::NumericHierarchic));
      w.uint(n.path.size());
      for (auto seg : n.path) w.uint(seg);
    }
    void operator()(const LocalTableIndex& l) {
      w.byte(static_cast<std::uint8_t>(UlTag::LocalTableIndex));
      w.uint(l.index);
    }
  };
  Visitor v{previous_present, {}};
  std::visit(v, ul);
  out.insert(out.end(), v.w.bytes().begin(), v.w.bytes().end());
}

inline Bytes encode_ul(const UlRef& ul, bool previous_present) {
  Bytes out;
  encode_ul(ul, previous_present, out);
  return out;
}

inline UlRef decode_ul(ByteReader& r, bool previous_present) {
  const auto tag = r.byte();
  switch (static_cast<UlTag>(tag)) {
    case UlTag::SameAsBefore:
      if (!previous_present) fail(ErrorCode::ContextMissing, "SameAsBefore at stream start");
      return SameAsBefore{};
    case UlTag::FullUrl: {
      FullUrl u{r.text()};
      check_ul(u);
      return u;
    }
    case UlTag::NumericHierarchic: {
      const auto count = r.uint();
      if (count == 0) fail(ErrorCode::MalformedInput, "NumericHierarchic path must be non-empty");
      if (count > r.remaining()) fail(ErrorCode::Truncated, "path longer than remaining input");
      NumericHierarchic n;
      n.path.reserve(static_cast<std::size_t>(count));
      for (std::uint64_t i = 0; i < count; ++i) n.path.push_back(r.uint());
      return n;
    }
    case UlTag::LocalTableIndex:
      return LocalTableIndex{r.uint()};
  }
  fail(ErrorCode::MalformedInput, "unknown UL tag " + std::to_string(tag));
}

inline UlRef decode_ul(ByteView bytes, bool previous_present) {
  ByteReader r(bytes);
  return decode_ul(r, previous_present);
}

}  // namespace dvs
