#include "ains/errors.hpp"

namespace ains {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateLine: return "DegenerateLine";
    case ErrorCode::DegeneratePlane: return "DegeneratePlane";
    case ErrorCode::SingularElevation: return "SingularElevation";
    case ErrorCode::EmptySampleSeq: return "EmptySampleSeq";
    case ErrorCode::IntervalNotCovered: return "IntervalNotCovered";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::ZeroRange: return "ZeroRange";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::CaseMismatch: return "CaseMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::CovarianceNotPSD: return "CovarianceNotPSD";
    case ErrorCode::SingularInnovation: return "SingularInnovation";
    case ErrorCode::RankDeficientHf: return "RankDeficientHf";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

}  // namespace ains
