#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opencon {

enum class ErrorCode {
  DegenerateVector,
  InvalidTemperature,
  EmptyScores,
  InvalidDimension,
  InvalidArgument,
  EmptyLabeledSet,
  BatchTooLarge,
  ParseError,
  DimensionMismatch,
  TapeMismatch,
  ShapeMismatch,
  EmptyPositiveSet,
  InvalidPrior,
  UnknownVariant,
  EmptyEvaluationSet,
  Corrupt,
  VersionMismatch,
  IoError,
  NonFiniteLoss,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace opencon
