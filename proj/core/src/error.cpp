#include "doorkin/error.hpp"

namespace doorkin {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateNormal: return "DegenerateNormal";
    case ErrorCode::kEmptyRoi: return "EmptyROI";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNoOutliers: return "NoOutliers";
    case ErrorCode::kNoDoors: return "NoDoors";
    case ErrorCode::kCoincidentPoints: return "CoincidentPoints";
    case ErrorCode::kCollinearPoints: return "CollinearPoints";
    case ErrorCode::kDegenerateInliers: return "DegenerateInliers";
    case ErrorCode::kTooFewObservations: return "TooFewObservations";
    case ErrorCode::kAllOutliers: return "AllOutliers";
    case ErrorCode::kNonpositiveTravel: return "NonpositiveTravel";
    case ErrorCode::kNonpositiveSweep: return "NonpositiveSweep";
    case ErrorCode::kRpySingularity: return "RPYSingularity";
    case ErrorCode::kLimitReached: return "LimitReached";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kCorruptStore: return "CorruptStore";
  }
  return "Unknown";
}

}  // namespace doorkin
