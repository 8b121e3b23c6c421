#include "vio_integrity/error.hpp"

namespace vio_integrity {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DepthNonPositive: return "DepthNonPositive";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::DivergedBehindCamera: return "DivergedBehindCamera";
    case ErrorCode::InsufficientRedundancy: return "InsufficientRedundancy";
    case ErrorCode::Unmonitorable: return "Unmonitorable";
    case ErrorCode::SingularFaultProjection: return "SingularFaultProjection";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::EmptySampleSet: return "EmptySampleSet";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::InfeasibleScene: return "InfeasibleScene";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

DepthError::DepthError(int landmark_id, double depth)
    : Error(ErrorCode::DepthNonPositive,
            "point depth " + std::to_string(depth) +
                " is at or behind the camera plane" +
                (landmark_id == kUnknownLandmark
                     ? std::string()
                     : " (landmark " + std::to_string(landmark_id) + ")")),
      landmark_id_(landmark_id),
      depth_(depth) {}

}  // namespace vio_integrity
