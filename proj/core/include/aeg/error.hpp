#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aeg {

enum class ErrorCode {
  InvalidInput,
  InvalidBox,
  DuplicateId,
  NoVisibleFrame,
  MissingCentroids,
  SchemaViolation,
  MixedRooms,
  TooFewNodes,
  NonConvergent,
  MissingSlot,
  PromptTooLong,
  ParseFailure,
  Transport,
  AuthMissing,
  RateLimited,
  Precondition,
  GraphNotEnhanced,
  MissingProfile,
  MissingAffordance,
  NonNumericScore,
  RetrievalDegraded,
  InvalidK,
  EmptyInput,
  NoReceptacles,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `code()` classifies the failure;
/// the message carries the detail (field path, node id, HTTP status, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aeg
