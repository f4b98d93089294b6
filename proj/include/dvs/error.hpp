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

#include <stdexcept>
#include <string>
#include <string_view>

namespace dvs {

enum class ErrorCode {
  ValueOutOfRange,
  Truncated,
  NonCanonical,
  ContextMissing,
  SchemaMismatch,
  MalformedInput,
  UnresolvedReference,
  CycleDetected,
  ValidationFailed,
  AppendOnlyViolation,
  NotFound,
  Conflict,
  InvalidQuery,
  NonPositiveWeight,
  NoContributingPeers,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::NonCanonical: return "NonCanonical";
    case ErrorCode::ContextMissing: return "ContextMissing";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::UnresolvedReference: return "UnresolvedReference";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::AppendOnlyViolation: return "AppendOnlyViolation";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::InvalidQuery: return "InvalidQuery";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::NoContributingPeers: return "NoContributingPeers";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// service maps codes onto HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace dvs
