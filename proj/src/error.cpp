#include "ggp/error.hpp"

namespace ggp {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnknownPhrase: return "UnknownPhrase";
    case ErrorKind::kEmptyGroup: return "EmptyGroup";
    case ErrorKind::kInvalidPlan: return "InvalidPlan";
    case ErrorKind::kInvalidCollection: return "InvalidCollection";
    case ErrorKind::kMissingPlan: return "MissingPlan";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kPhraseTooLong: return "PhraseTooLong";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kDegeneratePlan: return "DegeneratePlan";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kConfigInvalid: return "ConfigInvalid";
    case ErrorKind::kFileNotFound: return "FileNotFound";
    case ErrorKind::kFormat: return "FormatError";
    case ErrorKind::kVersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

}  // namespace ggp
