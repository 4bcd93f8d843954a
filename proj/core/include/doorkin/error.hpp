#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace doorkin {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateNormal,
  kEmptyRoi,
  kTooFewPoints,
  kDegenerateInput,
  kEmptyInput,
  kNoOutliers,
  kNoDoors,
  kCoincidentPoints,
  kCollinearPoints,
  kDegenerateInliers,
  kTooFewObservations,
  kAllOutliers,
  kNonpositiveTravel,
  kNonpositiveSweep,
  kRpySingularity,
  kLimitReached,
  kParse,
  kIo,
  kCorruptStore,
};

/// Stable, machine-readable name of an error code (used on diagnostics streams).
std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace doorkin
