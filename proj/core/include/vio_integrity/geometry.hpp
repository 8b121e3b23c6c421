#pragma once

#include <Eigen/Core>

namespace vio_integrity {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix36d = Eigen::Matrix<double, 3, 6>;

/// Default cutoff below which a camera-frame depth is treated as invalid (m).
inline constexpr double kDefaultMinDepth = 1e-6;

/// Rigid transform from the inertial frame to the camera frame.
///
/// A world point p maps to camera coordinates as rotation * (p - translation),
/// so `translation` is the camera centre expressed in the inertial frame and
/// `rotation` rotates inertial vectors into the camera frame.
struct Pose {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  static Pose identity() { return {}; }

  /// Pose whose transform undoes this one: inverse().apply(apply(p)) == p.
  Pose inverse() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& point_world) const {
    return rotation * (point_world - translation);
  }
};

struct StereoIntrinsics {
  double fu = 0.0;
  double fv = 0.0;
  double cu = 0.0;
  double cv = 0.0;
  double baseline = 0.0;

  /// Throws InvalidArgument unless fu, fv and baseline are positive.
  void validate() const;
};

struct Landmark {
  int id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// Tangent-space update of a Pose. Components 0..2 are the translation
/// increment (m, inertial frame), 3..5 the rotation increment (rad).
///
/// Convention shared by retract() and measurement_jacobian():
///   translation <- translation + dt
///   rotation    <- exp(-[dtheta]x) * rotation
/// The rotation increment therefore acts on the camera side, and the first
/// three columns of the measurement Jacobian are derivatives with respect to
/// the camera position in the inertial frame.
struct PosePerturbation {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();

  PosePerturbation() = default;
  PosePerturbation(const Eigen::Vector3d& dt, const Eigen::Vector3d& dtheta)
      : translation(dt), rotation(dtheta) {}
  explicit PosePerturbation(const Vector6d& dx)
      : translation(dx.head<3>()), rotation(dx.tail<3>()) {}

  Vector6d stacked() const {
    Vector6d dx;
    dx << translation, rotation;
    return dx;
  }
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// SO(3) exponential map (Rodrigues), with a second-order series near zero.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& rotation_vector);

/// Closest rotation matrix in the Frobenius sense (polar decomposition).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

Eigen::Vector3d transform_to_camera(const Pose& pose, const Eigen::Vector3d& point_world);
inline Eigen::Vector3d transform_to_camera(const Pose& pose, const Landmark& landmark) {
  return transform_to_camera(pose, landmark.position);
}

/// Rectified stereo projection to (u_left, v_left, disparity) in pixels.
/// Throws DepthError when the point depth is <= min_depth.
Eigen::Vector3d project_stereo(const Eigen::Vector3d& point_camera,
                               const StereoIntrinsics& intrinsics,
                               double min_depth = kDefaultMinDepth);

/// Noise-free measurement h(x) of a world point.
Eigen::Vector3d predict_measurement(const Pose& pose, const Eigen::Vector3d& point_world,
                                    const StereoIntrinsics& intrinsics,
                                    double min_depth = kDefaultMinDepth);

/// d h(retract(pose, dx)) / d dx at dx = 0.
Matrix36d measurement_jacobian(const Pose& pose, const Eigen::Vector3d& point_world,
                               const StereoIntrinsics& intrinsics,
                               double min_depth = kDefaultMinDepth);
inline Matrix36d measurement_jacobian(const Pose& pose, const Landmark& landmark,
                                      const StereoIntrinsics& intrinsics,
                                      double min_depth = kDefaultMinDepth) {
  return measurement_jacobian(pose, landmark.position, intrinsics, min_depth);
}

/// Applies a perturbation and re-orthonormalizes the rotation.
Pose retract(const Pose& pose, const PosePerturbation& dx);

}  // namespace vio_integrity
