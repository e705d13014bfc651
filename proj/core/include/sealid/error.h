#ifndef SEALID_ERROR_H_
#define SEALID_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sealid {

enum class ErrorCode {
  kInvalidDesign,
  kDegenerateFrame,
  kOutOfRange,
  kEmptyDataset,
  kDegenerateColumn,
  kTooFewRows,
  kUnknownClass,
  kSchemaMismatch,
  kCorruptRow,
  kShapeMismatch,
  kNoCachedActivations,
  kDiverged,
  kDegenerateTruth,
  kEmptyClass,
  kMissingNormSpec,
  kIncompatibleForward,
  kNormSpecMismatch,
  kOutOfRangeTarget,
  kLineSearchFailed,
  kMethodFailed,
  kIo,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

// Every recoverable failure in the library is reported as an Error carrying a
// machine-readable code; the CLI maps codes to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sealid

#endif  // SEALID_ERROR_H_
