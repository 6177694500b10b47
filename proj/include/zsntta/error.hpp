/*
 * Copyright 2026 The zsntta Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zsntta {

enum class ErrorCode {
  kZeroVector,
  kNonFinite,
  kNotUnitNorm,
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedPayload,
  kTrailingBytes,
  kLabelOutOfRange,
  kIoFailure,
  kBadSpec,
  kInsufficientRecords,
  kDimMismatch,
  kEmptyQueue,
  kEmptyBatch,
  kShapeMismatch,
  kEmptyBank,
  kInjectedRecord,
  kOneClassOnly,
  kEmptyLog,
  kBadConfig,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNotUnitNorm: return "NotUnitNorm";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kTrailingBytes: return "TrailingBytes";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kBadSpec: return "BadSpec";
    case ErrorCode::kInsufficientRecords: return "InsufficientRecords";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kEmptyQueue: return "EmptyQueue";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyBank: return "EmptyBank";
    case ErrorCode::kInjectedRecord: return "InjectedRecord";
    case ErrorCode::kOneClassOnly: return "OneClassOnly";
    case ErrorCode::kEmptyLog: return "EmptyLog";
    case ErrorCode::kBadConfig: return "BadConfig";
  }
  return "Unknown";
}

// Every failure in the library is reported through this type; `code()` is
// the stable, testable part and `what()` carries context for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace zsntta
