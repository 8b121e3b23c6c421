#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <map>
#include <vector>

#include "vio_integrity/constants.hpp"
#include "vio_integrity/geometry.hpp"

namespace vio_integrity {

/// One stereo feature observation: measured (u_left, v_left, disparity) and
/// its 3x3 covariance in pixels^2.
struct Observation {
  int landmark_id = 0;
  Eigen::Vector3d measurement = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
};

struct Frame {
  std::vector<Observation> observations;

  std::size_t size() const { return observations.size(); }
};

/// Fixed landmark map keyed by id.
class LandmarkMap {
 public:
  LandmarkMap() = default;

  /// Throws InvalidArgument on a duplicate id.
  void insert(const Landmark& landmark);

  bool contains(int id) const { return points_.count(id) != 0; }
  /// Throws InvalidArgument for an unknown id.
  const Eigen::Vector3d& at(int id) const;
  std::size_t size() const { return points_.size(); }

  std::vector<Landmark> landmarks() const;

  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

 private:
  std::map<int, Eigen::Vector3d> points_;
};

/// Linearized measurement model dy = H dx + e, stacked over N features.
///
/// The information matrix W = Q^-1 is block diagonal and kept as its N 3x3
/// blocks; dense_information() expands it.
struct StackedSystem {
  Eigen::MatrixXd jacobian;                  // 3N x 6
  std::vector<Eigen::Matrix3d> information;  // N blocks
  Eigen::VectorXd shifted;                   // dy, 3N
  std::vector<int> landmark_ids;             // observation order

  std::size_t feature_count() const { return information.size(); }
  Eigen::MatrixXd dense_information() const;
  /// H^T W H
  Matrix6d normal_matrix() const;
  /// H^T W dy
  Vector6d information_vector() const;
};

/// Condition-number ceiling for H^T W H and similar small SPD solves.
inline constexpr double kMaxConditionNumber = 1e12;

struct SolverConfig {
  /// Huber threshold on the weighted squared error e^T Q^-1 e of a feature.
  double huber_threshold = kDefaultHuberThreshold;
  /// When false the plain quadratic objective is minimized.
  bool robust = true;
  int max_iterations = 100;
  /// Convergence threshold on the norm of the tangent-space step.
  double convergence_tol = 1e-9;
  double min_depth = kDefaultMinDepth;

  void validate() const;
};

struct PoseSolution {
  Pose pose;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  /// Objective at the initial pose followed by every accepted iterate.
  std::vector<double> objective_trace;
};

/// Information matrix of one feature. Throws NotPositiveDefinite when the
/// covariance is not symmetric positive definite.
Eigen::Matrix3d information_from_covariance(const Eigen::Matrix3d& covariance);

/// Throws InvalidArgument for unknown landmarks or malformed covariances.
void validate_frame(const Frame& frame, const LandmarkMap& map);

StackedSystem linearize(const Frame& frame, const LandmarkMap& map, const Pose& linearization_point,
                        const StereoIntrinsics& intrinsics, double min_depth = kDefaultMinDepth);

/// (H^T W H)^-1 with the conditioning guard. Throws DegenerateGeometry.
Matrix6d covariance(const StackedSystem& system);

/// Weighted least squares step (H^T W H)^-1 H^T W dy. Throws
/// DegenerateGeometry when H^T W H is ill conditioned.
Vector6d wls_solve(const StackedSystem& system);

/// dy - H dx
Eigen::VectorXd residual(const StackedSystem& system, const Vector6d& dx);

/// Huber loss on a weighted squared error s, and its derivative d rho / d s.
double huber_loss(double squared_error, double threshold);
double huber_weight(double squared_error, double threshold);

/// Robust pose optimization by iteratively reweighted Gauss-Newton. A
/// Levenberg damping term is switched on only after a step fails to decrease
/// the objective.
PoseSolution solve_pose(const Frame& frame, const LandmarkMap& map, const Pose& initial,
                        const StereoIntrinsics& intrinsics, const SolverConfig& config = {});

}  // namespace vio_integrity
