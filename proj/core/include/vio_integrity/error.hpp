#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vio_integrity {

/// Failure categories surfaced by the library. The CLI prints the category
/// name verbatim so callers can parse it.
enum class ErrorCode {
  DepthNonPositive,
  DegenerateGeometry,
  DivergedBehindCamera,
  InsufficientRedundancy,
  Unmonitorable,
  SingularFaultProjection,
  InvalidProbability,
  NotPositiveDefinite,
  EmptySampleSet,
  NoSolution,
  InfeasibleScene,
  InvalidArgument,
  IoError,
  FormatError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown by projection and linearization when a point sits at or behind the
/// camera plane. Carries the offending landmark when one is known.
class DepthError : public Error {
 public:
  DepthError(int landmark_id, double depth);

  int landmark_id() const noexcept { return landmark_id_; }
  double depth() const noexcept { return depth_; }

 private:
  int landmark_id_;
  double depth_;
};

inline constexpr int kUnknownLandmark = -1;

}  // namespace vio_integrity
