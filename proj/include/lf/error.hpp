#pragma once

#include <stdexcept>
#include <string>

namespace lf {

// Error taxonomy shared by the library and the CLI exit-code mapping.
enum class ErrorCode {
  kIo,                    // unreadable/unwritable files
  kFormat,                // malformed manifest or image file
  kMissingView,           // manifest declares a view that is absent
  kInconsistent,          // mismatched dimensions across views/inputs
  kOutOfRange,            // index or slice outside bounds
  kInvalidParam,          // bad user-supplied parameter
  kGeometry,              // impossible geometric configuration
  kNoStructure,           // no usable line structure in EPIs
  kInsufficientFeatures,  // too few correspondences for estimation
  kDegenerate,            // degenerate configuration for a solver
  kAmbiguous,             // estimation cannot disambiguate candidates
  kEstimation,            // generic estimation failure
};

const char* error_code_name(ErrorCode code);

class LfError : public std::runtime_error {
 public:
  LfError(ErrorCode code, std::string stage, std::string detail)
      : std::runtime_error(std::string(error_code_name(code)) + " [" + stage +
                           "]: " + detail),
        code_(code),
        stage_(std::move(stage)),
        detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const std::string& stage() const { return stage_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

}  // namespace lf
