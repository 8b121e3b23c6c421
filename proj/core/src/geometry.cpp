#include "vio_integrity/geometry.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>

#include "vio_integrity/error.hpp"

namespace vio_integrity {

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -rotation * translation;
  return inv;
}

void StereoIntrinsics::validate() const {
  if (!(fu > 0.0) || !(fv > 0.0) || !(baseline > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "stereo intrinsics require fu, fv and baseline > 0");
  }
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& rotation_vector) {
  const double theta = rotation_vector.norm();
  const Eigen::Matrix3d k = skew(rotation_vector);
  if (theta < 1e-8) {
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
  }
  return u * v.transpose();
}

Eigen::Vector3d transform_to_camera(const Pose& pose, const Eigen::Vector3d& point_world) {
  return pose.apply(point_world);
}

Eigen::Vector3d project_stereo(const Eigen::Vector3d& point_camera,
                               const StereoIntrinsics& intrinsics, double min_depth) {
  const double z = point_camera.z();
  if (!(z > min_depth)) {
    throw DepthError(kUnknownLandmark, z);
  }
  const double inv_z = 1.0 / z;
  return {intrinsics.fu * point_camera.x() * inv_z + intrinsics.cu,
          intrinsics.fv * point_camera.y() * inv_z + intrinsics.cv,
          intrinsics.fu * intrinsics.baseline * inv_z};
}

Eigen::Vector3d predict_measurement(const Pose& pose, const Eigen::Vector3d& point_world,
                                    const StereoIntrinsics& intrinsics, double min_depth) {
  return project_stereo(transform_to_camera(pose, point_world), intrinsics, min_depth);
}

Matrix36d measurement_jacobian(const Pose& pose, const Eigen::Vector3d& point_world,
                               const StereoIntrinsics& intrinsics, double min_depth) {
  const Eigen::Vector3d pc = transform_to_camera(pose, point_world);
  const double z = pc.z();
  if (!(z > min_depth)) {
    throw DepthError(kUnknownLandmark, z);
  }
  const double inv_z = 1.0 / z;
  const double inv_z2 = inv_z * inv_z;

  Eigen::Matrix3d d_proj;
  d_proj << intrinsics.fu * inv_z, 0.0, -intrinsics.fu * pc.x() * inv_z2,
            0.0, intrinsics.fv * inv_z, -intrinsics.fv * pc.y() * inv_z2,
            0.0, 0.0, -intrinsics.fu * intrinsics.baseline * inv_z2;

  // pc(dx) ~= pc - C dt + [pc]x dtheta
  Matrix36d d_point;
  d_point.leftCols<3>() = -pose.rotation;
  d_point.rightCols<3>() = skew(pc);
  return d_proj * d_point;
}

Pose retract(const Pose& pose, const PosePerturbation& dx) {
  Pose out;
  out.translation = pose.translation + dx.translation;
  out.rotation = nearest_rotation(so3_exp(-dx.rotation) * pose.rotation);
  return out;
}

}  // namespace vio_integrity
