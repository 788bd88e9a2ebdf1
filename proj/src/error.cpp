#include "lf/error.hpp"

namespace lf {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kFormat: return "format-error";
    case ErrorCode::kMissingView: return "missing-view";
    case ErrorCode::kInconsistent: return "inconsistency-error";
    case ErrorCode::kOutOfRange: return "range-error";
    case ErrorCode::kInvalidParam: return "parameter-error";
    case ErrorCode::kGeometry: return "geometry-error";
    case ErrorCode::kNoStructure: return "no-structure";
    case ErrorCode::kInsufficientFeatures: return "insufficient-features";
    case ErrorCode::kDegenerate: return "degenerate-geometry";
    case ErrorCode::kAmbiguous: return "ambiguous-decomposition";
    case ErrorCode::kEstimation: return "estimation-error";
  }
  return "unknown-error";
}

}  // namespace lf
