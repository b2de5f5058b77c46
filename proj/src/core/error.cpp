#include "opencon/core/error.hpp"

namespace opencon {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::InvalidTemperature: return "InvalidTemperature";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyLabeledSet: return "EmptyLabeledSet";
    case ErrorCode::BatchTooLarge: return "BatchTooLarge";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TapeMismatch: return "TapeMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyPositiveSet: return "EmptyPositiveSet";
    case ErrorCode::InvalidPrior: return "InvalidPrior";
    case ErrorCode::UnknownVariant: return "UnknownVariant";
    case ErrorCode::EmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorCode::Corrupt: return "Corrupt";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

}  // namespace opencon
