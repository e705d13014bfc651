#include "sealid/error.h"

namespace sealid {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDesign: return "InvalidDesign";
    case ErrorCode::kDegenerateFrame: return "DegenerateFrame";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kDegenerateColumn: return "DegenerateColumn";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kUnknownClass: return "UnknownClass";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kCorruptRow: return "CorruptRow";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNoCachedActivations: return "NoCachedActivations";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kDegenerateTruth: return "DegenerateTruth";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kMissingNormSpec: return "MissingNormSpec";
    case ErrorCode::kIncompatibleForward: return "IncompatibleForward";
    case ErrorCode::kNormSpecMismatch: return "NormSpecMismatch";
    case ErrorCode::kOutOfRangeTarget: return "OutOfRangeTarget";
    case ErrorCode::kLineSearchFailed: return "LineSearchFailed";
    case ErrorCode::kMethodFailed: return "MethodFailed";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace sealid
