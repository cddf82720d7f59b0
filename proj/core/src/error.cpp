#include "altprobe/error.hpp"

namespace altprobe {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateVerb: return "DuplicateVerb";
    case ErrorCode::UnknownFrame: return "UnknownFrame";
    case ErrorCode::UnknownSplit: return "UnknownSplit";
    case ErrorCode::UnknownAlternation: return "UnknownAlternation";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NoSupport: return "NoSupport";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TooFewExamples: return "TooFewExamples";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::DegenerateFrame: return "DegenerateFrame";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::AxisMismatch: return "AxisMismatch";
  }
  return "Unknown";
}

}  // namespace altprobe
