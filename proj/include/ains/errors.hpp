#pragma once

#include <stdexcept>
#include <string>

namespace ains {

enum class ErrorCode {
  DegenerateLine,
  DegeneratePlane,
  SingularElevation,
  EmptySampleSeq,
  IntervalNotCovered,
  BehindCamera,
  ZeroRange,
  DegenerateProjection,
  CaseMismatch,
  DimensionMismatch,
  CovarianceNotPSD,
  SingularInnovation,
  RankDeficientHf,
  InvalidSpec,
  PlacementFailure,
  InvalidConfig,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ains
