#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace altprobe {

enum class ErrorCode {
  // datasets
  MalformedRow,
  DuplicateVerb,
  UnknownFrame,
  UnknownSplit,
  UnknownAlternation,
  // embedding store
  BadMagic,
  TruncatedRecord,
  DimMismatch,
  IoError,
  NoSupport,
  EmptyMask,
  // probes
  RankTooLarge,
  EmptyEvaluation,
  InvalidConfig,
  // experiments and reports
  TooFewExamples,
  EmptySplit,
  DegenerateFrame,
  EmptyResults,
  AxisMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace altprobe
