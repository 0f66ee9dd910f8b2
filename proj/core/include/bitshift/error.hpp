#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bitshift {

enum class ErrorCode {
  kNonStochastic,
  kReducible,
  kBadParams,
  kBadProbabilities,
  kDomainError,
  kLetterOutOfRange,
  kConvergenceFailure,
  kNotALeaf,
  kEmptyPartition,
  kResourceLimit,
  kDegenerateRenewal,
};

std::string_view to_string(ErrorCode code);

// Single exception type for every library failure; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bitshift
