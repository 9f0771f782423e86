#include "doaloc/error.hpp"

namespace doaloc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDegenerateDisplacement: return "degenerate displacement";
    case ErrorCode::kInsufficientMeasurements: return "insufficient measurements";
    case ErrorCode::kNongenericTrajectory: return "nongeneric trajectory";
    case ErrorCode::kSolverFailed: return "solver failed";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kDegenerateExtraction: return "degenerate extraction";
    case ErrorCode::kIllDefinedProjection: return "ill-defined projection";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kParse: return "parse error";
  }
  return "unknown error";
}

}  // namespace doaloc
