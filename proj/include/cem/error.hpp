// Copyright 2026 The CEM Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
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

namespace cem {

enum class ErrorKind {
  kNonPositiveDefinite,
  kDegenerateData,
  kStaleState,
  kShapeMismatch,
  kStaleTape,
  kNonFinite,
  kLabelOutOfRange,
  kUnknownDefense,
  kIo,
  kParse,
  kMissingArtifact,
  kInvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorKind::kDegenerateData: return "DegenerateData";
    case ErrorKind::kStaleState: return "StaleState";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kStaleTape: return "StaleTape";
    case ErrorKind::kNonFinite: return "NonFinite";
    case ErrorKind::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::kUnknownDefense: return "UnknownDefense";
    case ErrorKind::kIo: return "Io";
    case ErrorKind::kParse: return "Parse";
    case ErrorKind::kMissingArtifact: return "MissingArtifact";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace cem
