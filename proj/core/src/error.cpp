#include "bitshift/error.hpp"

namespace bitshift {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonStochastic: return "NonStochastic";
    case ErrorCode::kReducible: return "Reducible";
    case ErrorCode::kBadParams: return "BadParams";
    case ErrorCode::kBadProbabilities: return "BadProbabilities";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kLetterOutOfRange: return "LetterOutOfRange";
    case ErrorCode::kConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::kNotALeaf: return "NotALeaf";
    case ErrorCode::kEmptyPartition: return "EmptyPartition";
    case ErrorCode::kResourceLimit: return "ResourceLimit";
    case ErrorCode::kDegenerateRenewal: return "DegenerateRenewal";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace bitshift
