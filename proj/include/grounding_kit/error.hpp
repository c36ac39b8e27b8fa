#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gk {

enum class ErrorCode {
  kZeroVector,
  kDimensionMismatch,
  kWeightOutOfRange,
  kInvalidArgument,
  kEncoderFailure,
  kGradientsUnsupported,
  kSurgeryUnsupported,
  kEmptyMask,
  kShapeMismatch,
  kMalformedParse,
  kSelectionImpossible,
  kMalformedRle,
  kSchemaError,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (CLI exit codes, Python exceptions) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace gk
