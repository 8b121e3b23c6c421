#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "vio_integrity/estimation.hpp"
#include "vio_integrity/geometry.hpp"

namespace fixtures {

inline vio_integrity::StereoIntrinsics euroc_intrinsics() {
  return {435.0, 435.0, 367.0, 248.0, 0.11};
}

inline Eigen::Vector3d random_rotation_vector(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_angle);
  return Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized() * u(rng);
}

inline vio_integrity::Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> t(-5.0, 5.0);
  vio_integrity::Pose pose;
  pose.translation = Eigen::Vector3d(t(rng), t(rng), t(rng));
  pose.rotation = vio_integrity::so3_exp(random_rotation_vector(rng, 3.0));
  return pose;
}

/// World point that lands at pixel-space coordinates inside the image at the
/// given depth range when seen from `pose`.
inline Eigen::Vector3d random_visible_point(std::mt19937_64& rng, const vio_integrity::Pose& pose,
                                            const vio_integrity::StereoIntrinsics& k,
                                            double zmin = 2.0, double zmax = 20.0) {
  std::uniform_real_distribution<double> uu(0.0, 2.0 * k.cu);
  std::uniform_real_distribution<double> vv(0.0, 2.0 * k.cv);
  std::uniform_real_distribution<double> zz(zmin, zmax);
  const double z = zz(rng);
  const Eigen::Vector3d pc((uu(rng) - k.cu) * z / k.fu, (vv(rng) - k.cv) * z / k.fv, z);
  return pose.rotation.transpose() * pc + pose.translation;
}

struct RandomProblem {
  vio_integrity::Pose truth;
  vio_integrity::LandmarkMap map;
  vio_integrity::Frame frame;
  vio_integrity::StereoIntrinsics intrinsics;
};

/// `n` visible landmarks observed with Gaussian noise of covariance
/// sigma^2 diag(1, 1, 2); `noisy = false` gives exact measurements.
inline RandomProblem random_problem(std::mt19937_64& rng, int n, double sigma = 1.0,
                                    bool noisy = true) {
  RandomProblem p;
  p.truth = random_pose(rng);
  p.intrinsics = euroc_intrinsics();
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::Vector3d scale(sigma, sigma, sigma * std::sqrt(2.0));
  for (int id = 0; id < n; ++id) {
    const Eigen::Vector3d pw = random_visible_point(rng, p.truth, p.intrinsics);
    p.map.insert({id, pw});
    vio_integrity::Observation obs;
    obs.landmark_id = id;
    obs.measurement = vio_integrity::predict_measurement(p.truth, pw, p.intrinsics);
    if (noisy) obs.measurement += scale.cwiseProduct(Eigen::Vector3d(g(rng), g(rng), g(rng)));
    obs.covariance = scale.cwiseAbs2().asDiagonal();
    p.frame.observations.push_back(obs);
  }
  return p;
}

/// Random system with a general SPD block per feature, linearized at truth.
inline vio_integrity::StackedSystem random_system(std::mt19937_64& rng, int n) {
  RandomProblem p = random_problem(rng, n);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& obs : p.frame.observations) {
    Eigen::Matrix3d a;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) a(r, c) = 0.4 * g(rng);
    obs.covariance = a * a.transpose() + Eigen::Matrix3d::Identity();
  }
  return vio_integrity::linearize(p.frame, p.map, p.truth, p.intrinsics);
}

}  // namespace fixtures
