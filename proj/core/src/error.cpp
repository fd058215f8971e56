#include "aeg/error.hpp"

namespace aeg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NoVisibleFrame: return "NoVisibleFrame";
    case ErrorCode::MissingCentroids: return "MissingCentroids";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::MixedRooms: return "MixedRooms";
    case ErrorCode::TooFewNodes: return "TooFewNodes";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::MissingSlot: return "MissingSlot";
    case ErrorCode::PromptTooLong: return "PromptTooLong";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::AuthMissing: return "AuthMissing";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::Precondition: return "Precondition";
    case ErrorCode::GraphNotEnhanced: return "GraphNotEnhanced";
    case ErrorCode::MissingProfile: return "MissingProfile";
    case ErrorCode::MissingAffordance: return "MissingAffordance";
    case ErrorCode::NonNumericScore: return "NonNumericScore";
    case ErrorCode::RetrievalDegraded: return "RetrievalDegraded";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoReceptacles: return "NoReceptacles";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace aeg
