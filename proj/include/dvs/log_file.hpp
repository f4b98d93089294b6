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

// Append-only record log.
//
//   "DVS1" | frame*
//   frame = u32 LE body length | body | u32 LE CRC32(body)
//   body  = type byte | payload
//
// On open, a torn or corrupt tail (short frame or CRC mismatch) is cut off;
// everything before it was acknowledged and is kept.

#pragma once

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>

#include "dvs/error.hpp"
#include "dvs/self_extending.hpp"

namespace dvs {

enum class RecordType : std::uint8_t {
  Definition = 0,
  Vector = 1,
  TableEntry = 2,
};

inline constexpr char kLogMagic[4] = {'D', 'V', 'S', '1'};

inline std::uint32_t crc32_of(ByteView bytes) {
  return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

inline void put_u32le(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline Bytes frame_record(RecordType type, ByteView payload) {
  Bytes body;
  body.reserve(payload.size() + 1);
  body.push_back(static_cast<std::uint8_t>(type));
  body.insert(body.end(), payload.begin(), payload.end());
  Bytes out;
  out.reserve(body.size() + 8);
  put_u32le(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  put_u32le(out, crc32_of(body));
  return out;
}

class LogFile {
 public:
  using Visitor = std::function<void(RecordType, ByteView)>;

  LogFile() = default;
  LogFile(const LogFile&) = delete;
  LogFile& operator=(const LogFile&) = delete;
  LogFile(LogFile&& other) noexcept
      : path_(std::move(other.path_)), fd_(std::exchange(other.fd_, -1)), sync_(other.sync_) {}
  LogFile& operator=(LogFile&& other) noexcept {
    if (this != &other) {
      close();
      path_ = std::move(other.path_);
      fd_ = std::exchange(other.fd_, -1);
      sync_ = other.sync_;
    }
    return *this;
  }
  ~LogFile() { close(); }

  /// Opens (creating if needed), replays intact records through `visit`, and
  /// truncates any torn tail. Returns the number of bytes discarded.
  std::size_t open(const std::filesystem::path& path, bool sync, const Visitor& visit) {
    close();
    path_ = path;
    sync_ = sync;
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) fail(ErrorCode::Io, "open " + path.string() + ": " + std::strerror(errno));
    const Bytes content = read_all();
    std::size_t good = 0;
    if (content.empty()) {
      append_raw(ByteView(reinterpret_cast<const std::uint8_t*>(kLogMagic), 4));
      flush();
      return 0;
    }
    if (content.size() < 4 || std::memcmp(content.data(), kLogMagic, 4) != 0) {
      fail(ErrorCode::Io, path.string() + " is not a DVS1 log");
    }
    good = 4;
    while (content.size() - good >= 8) {
      const std::uint32_t len = get_u32le(content.data() + good);
      if (len == 0 || content.size() - good - 8 < len) break;
      ByteView body(content.data() + good + 4, len);
      if (crc32_of(body) != get_u32le(content.data() + good + 4 + len)) break;
      if (body[0] > static_cast<std::uint8_t>(RecordType::TableEntry)) break;
      visit(static_cast<RecordType>(body[0]), body.subspan(1));
      good += 8 + len;
    }
    const std::size_t dropped = content.size() - good;
    if (dropped > 0) {
      if (::ftruncate(fd_, static_cast<off_t>(good)) != 0) fail(ErrorCode::Io, "truncate " + path.string());
      flush();
    }
    if (::lseek(fd_, 0, SEEK_END) < 0) fail(ErrorCode::Io, "seek " + path.string());
    return dropped;
  }

  /// Appends framed records; durable (per the sync setting) on return.
  void append(ByteView frames) {
    append_raw(frames);
    flush();
  }

  bool is_open() const { return fd_ >= 0; }
  const std::filesystem::path& path() const { return path_; }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  Bytes read_all() {
    Bytes out;
    if (::lseek(fd_, 0, SEEK_SET) < 0) fail(ErrorCode::Io, "seek " + path_.string());
    std::uint8_t buf[1 << 16];
    while (true) {
      const auto n = ::read(fd_, buf, sizeof buf);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::Io, "read " + path_.string() + ": " + std::strerror(errno));
      }
      if (n == 0) break;
      out.insert(out.end(), buf, buf + n);
    }
    return out;
  }

  void append_raw(ByteView bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const auto n = ::write(fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::Io, "write " + path_.string() + ": " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  void flush() {
    if (sync_ && ::fdatasync(fd_) != 0) fail(ErrorCode::Io, "sync " + path_.string());
  }

  std::filesystem::path path_;
  int fd_ = -1;
  bool sync_ = true;
};

}  // namespace dvs
