#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ggp {

enum class ErrorKind {
  kUnknownPhrase,
  kEmptyGroup,
  kInvalidPlan,
  kInvalidCollection,
  kMissingPlan,
  kEmptyCorpus,
  kPhraseTooLong,
  kShapeMismatch,
  kDegeneratePlan,
  kNonFiniteLoss,
  kConfigInvalid,
  kFileNotFound,
  kFormat,
  kVersionMismatch,
};

std::string_view error_kind_name(ErrorKind kind);

/// Every failure raised by the library. `kind()` is stable and machine-readable;
/// the CLI maps it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ggp
