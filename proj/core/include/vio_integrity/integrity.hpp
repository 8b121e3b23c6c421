#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vio_integrity/constants.hpp"
#include "vio_integrity/error.hpp"
#include "vio_integrity/estimation.hpp"
#include "vio_integrity/geometry.hpp"

namespace vio_integrity {

enum class Axis { X = 0, Y = 1, Z = 2 };
inline constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};

std::string_view to_string(Axis axis);

enum class IntegrityStatus { Nominal, OutliersExcluded, Unsafe, Unmonitorable };

std::string_view to_string(IntegrityStatus status);
/// Inverse of to_string(IntegrityStatus); throws FormatError.
IntegrityStatus parse_status(std::string_view text);

/// True when a protection level was computed for the frame.
inline bool is_monitored(IntegrityStatus status) {
  return status == IntegrityStatus::Nominal || status == IntegrityStatus::OutliersExcluded;
}

/// How the inner rejection loop of ipsor() updates the test after dropping a
/// feature.
enum class IpsorUpdate {
  /// Re-fit the weighted least squares step on the survivors (same
  /// linearization point) and recompute lambda from the new residual.
  Refit,
  /// Subtract the dropped feature's contribution from lambda, keeping the
  /// contributions of the first fit.
  Decrement,
};

std::string_view to_string(IpsorUpdate update);
IpsorUpdate parse_ipsor_update(std::string_view text);

struct DetectionConfig {
  double false_alarm_probability = kDefaultFalseAlarmProbability;
  double k_sigma = kDefaultNoiseSigmaMultiplier;
  /// Minimum surviving features; unset means max(6, ceil(N / 2)).
  std::optional<int> min_inlier_count;
  int max_ipsor_rounds = 20;
  IpsorUpdate ipsor_update = IpsorUpdate::Refit;

  void validate() const;
  int resolved_min_inliers(std::size_t feature_count) const;
};

/// Per-feature contributions eps_j^T W_j eps_j to the test statistic.
Eigen::VectorXd feature_contributions(const Eigen::VectorXd& residual,
                                      std::span<const Eigen::Matrix3d> information);

/// Weighted sum of squared residuals eps^T W eps.
double test_statistic(const Eigen::VectorXd& residual,
                      std::span<const Eigen::Matrix3d> information);

/// 1 - p_fa quantile of chi-squared with 3N - 6 dof. Throws
/// InsufficientRedundancy when 3N - 6 < 1.
double detection_threshold(std::size_t feature_count, double false_alarm_probability);

struct DetectionResult {
  double lambda = 0.0;
  double delta = 0.0;
  bool consistent = true;
  Eigen::VectorXd residual;
};

DetectionResult detect(const StackedSystem& system, double false_alarm_probability);

struct IpsorResult {
  IntegrityStatus status = IntegrityStatus::Nominal;
  Frame inliers;
  std::vector<int> outlier_ids;
  Pose pose;
  /// System linearized at `pose` over the surviving features.
  StackedSystem system;
  double lambda = 0.0;
  double delta = 0.0;
  int rounds = 0;
};

/// Iterative parity-space outlier rejection.
///
/// Expects `initial` to be an optimized pose for the full frame. Each round
/// drops the feature with the largest contribution to lambda, updates lambda
/// (see IpsorUpdate) and shrinks the threshold to the new feature count,
/// until lambda <= delta; it then re-solves the pose on the survivors and
/// re-tests. Stops as Unsafe once fewer than the minimum inlier count remain
/// or the round budget is spent. Ties go to the lowest feature index.
IpsorResult ipsor(const Frame& frame, const LandmarkMap& map, const Pose& initial,
                  const StereoIntrinsics& intrinsics, const DetectionConfig& detection,
                  const SolverConfig& solver);

/// Precomputed pieces of the single-feature fault analysis of a system.
///
/// With G = W H and Sigma = (H^T W H)^-1:
///   S   = W - G Sigma G^T          (residual sensitivity)
///   D_i = G Sigma a_i^T a_i Sigma G^T  for position axis i
/// and the 3x3 blocks on the diagonal of both are what a single faulty
/// feature sees.
class FaultProjector {
 public:
  explicit FaultProjector(const StackedSystem& system);

  std::size_t feature_count() const { return information_.size(); }
  const Matrix6d& covariance() const { return covariance_; }

  /// P_j^T S P_j
  Eigen::Matrix3d parity_block(std::size_t feature) const;
  /// P_j^T D_i P_j
  Eigen::Matrix3d extraction_block(Axis axis, std::size_t feature) const;

  /// Dense 3N x 3N versions, for inspection and testing.
  Eigen::MatrixXd parity_matrix() const;
  Eigen::MatrixXd extraction_matrix(Axis axis) const;

 private:
  std::vector<Eigen::Matrix3d> information_;
  Eigen::MatrixXd weighted_jacobian_;  // G = W H
  Matrix6d covariance_;
};

/// Largest position error along `axis` that a fault on one feature can cause
/// while keeping its residual contribution at delta:
///   sqrt(lambda_max(P^T D_i P (P^T S P)^-1) * delta).
/// Throws SingularFaultProjection when P^T S P is ill conditioned.
double fault_induced_error(const FaultProjector& projector, double delta, Axis axis,
                           std::size_t feature);
double fault_induced_error(const StackedSystem& system, double delta, Axis axis,
                           std::size_t feature);

struct AxisProtection {
  Axis axis = Axis::X;
  double fault_error = 0.0;  // eps_f
  double noise_error = 0.0;  // eps_n
  double level = 0.0;        // eps_f + eps_n
  int worst_landmark_id = kUnknownLandmark;
};

struct ProtectionLevels {
  std::array<AxisProtection, 3> axes{};
  /// Features skipped because their parity block was singular.
  int singular_projections = 0;
};

/// Per-axis protection levels over every feature of the (inlier) system.
ProtectionLevels protection_level(const StackedSystem& system, double delta,
                                  const DetectionConfig& config);

struct IntegrityReport {
  IntegrityStatus status = IntegrityStatus::Unmonitorable;
  double lambda = 0.0;
  double delta = 0.0;
  std::vector<int> inlier_ids;
  std::vector<int> outlier_ids;
  /// Valid for Nominal and OutliersExcluded.
  std::array<AxisProtection, 3> protection{};
  int singular_projections = 0;
  Pose pose;
  /// Estimator covariance (H^T W H)^-1 of the final system, when available.
  std::optional<Matrix6d> covariance;
  /// Reason for Unsafe or Unmonitorable.
  std::string failure;

  double test_statistic() const;
};

/// Full pipeline for one frame: robust solve, consistency test, outlier
/// rejection when needed, protection levels on the final inlier set.
/// Invalid input (unknown landmarks, bad covariances, bad configs) throws;
/// numerical failures are reported through the status.
IntegrityReport monitor_frame(const Frame& frame, const LandmarkMap& map, const Pose& initial,
                              const StereoIntrinsics& intrinsics, const DetectionConfig& detection,
                              const SolverConfig& solver);

}  // namespace vio_integrity
