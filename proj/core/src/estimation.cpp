#include "vio_integrity/estimation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

#include "vio_integrity/error.hpp"

namespace vio_integrity {

void LandmarkMap::insert(const Landmark& landmark) {
  if (!points_.emplace(landmark.id, landmark.position).second) {
    throw Error(ErrorCode::InvalidArgument,
                "duplicate landmark id " + std::to_string(landmark.id));
  }
}

const Eigen::Vector3d& LandmarkMap::at(int id) const {
  const auto it = points_.find(id);
  if (it == points_.end()) {
    throw Error(ErrorCode::InvalidArgument, "unknown landmark id " + std::to_string(id));
  }
  return it->second;
}

std::vector<Landmark> LandmarkMap::landmarks() const {
  std::vector<Landmark> out;
  out.reserve(points_.size());
  for (const auto& [id, position] : points_) out.push_back({id, position});
  return out;
}

Eigen::MatrixXd StackedSystem::dense_information() const {
  const auto n = static_cast<Eigen::Index>(information.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    w.block<3, 3>(3 * j, 3 * j) = information[static_cast<std::size_t>(j)];
  }
  return w;
}

Matrix6d StackedSystem::normal_matrix() const {
  Matrix6d m = Matrix6d::Zero();
  for (std::size_t j = 0; j < information.size(); ++j) {
    const auto hj = jacobian.middleRows<3>(3 * static_cast<Eigen::Index>(j));
    m.noalias() += hj.transpose() * information[j] * hj;
  }
  return 0.5 * (m + m.transpose());
}

Vector6d StackedSystem::information_vector() const {
  Vector6d g = Vector6d::Zero();
  for (std::size_t j = 0; j < information.size(); ++j) {
    const auto row = 3 * static_cast<Eigen::Index>(j);
    g.noalias() += jacobian.middleRows<3>(row).transpose() * information[j] *
                   shifted.segment<3>(row);
  }
  return g;
}

void SolverConfig::validate() const {
  if (!(huber_threshold > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "huber_threshold must be > 0");
  }
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (!(convergence_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "convergence_tol must be > 0");
  }
  if (!(min_depth >= 0.0)) throw Error(ErrorCode::InvalidArgument, "min_depth must be >= 0");
}

Eigen::Matrix3d information_from_covariance(const Eigen::Matrix3d& covariance) {
  if (!covariance.allFinite() ||
      (covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
          1e-12 * std::max(1.0, covariance.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::NotPositiveDefinite, "covariance is not symmetric");
  }
  const Eigen::LLT<Eigen::Matrix3d> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "covariance is not positive definite");
  }
  Eigen::Matrix3d w = llt.solve(Eigen::Matrix3d::Identity());
  return 0.5 * (w + w.transpose());
}

void validate_frame(const Frame& frame, const LandmarkMap& map) {
  for (const auto& obs : frame.observations) {
    if (!map.contains(obs.landmark_id)) {
      throw Error(ErrorCode::InvalidArgument,
                  "observation references unknown landmark " + std::to_string(obs.landmark_id));
    }
    if (!obs.measurement.allFinite()) {
      throw Error(ErrorCode::InvalidArgument,
                  "non-finite measurement for landmark " + std::to_string(obs.landmark_id));
    }
    information_from_covariance(obs.covariance);
  }
}

StackedSystem linearize(const Frame& frame, const LandmarkMap& map, const Pose& linearization_point,
                        const StereoIntrinsics& intrinsics, double min_depth) {
  const auto n = static_cast<Eigen::Index>(frame.size());
  StackedSystem sys;
  sys.jacobian.resize(3 * n, 6);
  sys.shifted.resize(3 * n);
  sys.information.reserve(frame.size());
  sys.landmark_ids.reserve(frame.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& obs = frame.observations[static_cast<std::size_t>(j)];
    const Eigen::Vector3d& point = map.at(obs.landmark_id);
    try {
      sys.jacobian.middleRows<3>(3 * j) =
          measurement_jacobian(linearization_point, point, intrinsics, min_depth);
      sys.shifted.segment<3>(3 * j) =
          obs.measurement - predict_measurement(linearization_point, point, intrinsics, min_depth);
    } catch (const DepthError& e) {
      throw DepthError(obs.landmark_id, e.depth());
    }
    sys.information.push_back(information_from_covariance(obs.covariance));
    sys.landmark_ids.push_back(obs.landmark_id);
  }
  return sys;
}

namespace {

// Cholesky of a 6x6 normal matrix after checking its spectral condition.
Eigen::LLT<Matrix6d> guarded_factor(const Matrix6d& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !(hi / lo <= kMaxConditionNumber)) {
    throw Error(ErrorCode::DegenerateGeometry,
                "normal matrix is singular or ill conditioned (condition " +
                    std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) +
                    ")");
  }
  Eigen::LLT<Matrix6d> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::DegenerateGeometry, "normal matrix factorization failed");
  }
  return llt;
}

}  // namespace

Matrix6d covariance(const StackedSystem& system) {
  Matrix6d cov = guarded_factor(system.normal_matrix()).solve(Matrix6d::Identity());
  return 0.5 * (cov + cov.transpose());
}

Vector6d wls_solve(const StackedSystem& system) {
  return guarded_factor(system.normal_matrix()).solve(system.information_vector());
}

Eigen::VectorXd residual(const StackedSystem& system, const Vector6d& dx) {
  return system.shifted - system.jacobian * dx;
}

double huber_loss(double squared_error, double threshold) {
  if (squared_error <= threshold) return squared_error;
  return 2.0 * std::sqrt(threshold * squared_error) - threshold;
}

double huber_weight(double squared_error, double threshold) {
  if (squared_error <= threshold) return 1.0;
  return std::sqrt(threshold / squared_error);
}

namespace {

struct Evaluation {
  double objective = 0.0;
  Matrix6d hessian = Matrix6d::Zero();
  Vector6d gradient = Vector6d::Zero();
};

// Returns false instead of throwing when a landmark falls behind the camera,
// so a trial step can be rejected.
bool evaluate(const Frame& frame, const std::vector<Eigen::Vector3d>& points,
              const std::vector<Eigen::Matrix3d>& information, const Pose& pose,
              const StereoIntrinsics& intrinsics, const SolverConfig& cfg, bool with_derivatives,
              Evaluation& out, int& failing_landmark) {
  out = Evaluation{};
  for (std::size_t j = 0; j < points.size(); ++j) {
    const Eigen::Vector3d pc = pose.apply(points[j]);
    if (!(pc.z() > cfg.min_depth)) {
      failing_landmark = frame.observations[j].landmark_id;
      return false;
    }
    const Eigen::Vector3d e =
        frame.observations[j].measurement - project_stereo(pc, intrinsics, cfg.min_depth);
    const double s = e.dot(information[j] * e);
    out.objective += cfg.robust ? huber_loss(s, cfg.huber_threshold) : s;
    if (with_derivatives) {
      const double w = cfg.robust ? huber_weight(s, cfg.huber_threshold) : 1.0;
      const Matrix36d h = measurement_jacobian(pose, points[j], intrinsics, cfg.min_depth);
      out.hessian.noalias() += w * h.transpose() * information[j] * h;
      out.gradient.noalias() += w * h.transpose() * information[j] * e;
    }
  }
  return true;
}

}  // namespace

PoseSolution solve_pose(const Frame& frame, const LandmarkMap& map, const Pose& initial,
                        const StereoIntrinsics& intrinsics, const SolverConfig& config) {
  config.validate();
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Matrix3d> information;
  points.reserve(frame.size());
  information.reserve(frame.size());
  for (const auto& obs : frame.observations) {
    points.push_back(map.at(obs.landmark_id));
    information.push_back(information_from_covariance(obs.covariance));
  }

  PoseSolution sol;
  sol.pose = initial;
  Evaluation current;
  int failing = kUnknownLandmark;
  if (!evaluate(frame, points, information, sol.pose, intrinsics, config, true, current,
                failing)) {
    throw DepthError(failing, sol.pose.apply(map.at(failing)).z());
  }

  sol.objective_trace.push_back(current.objective);

  constexpr double kInitialDamping = 1e-4;
  constexpr double kMaxDamping = 1e8;
  double damping = 0.0;
  bool hit_invalid_depth = false;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    sol.iterations = iter;
    const Matrix6d h = 0.5 * (current.hessian + current.hessian.transpose());
    const auto factor = guarded_factor(h);
    const Vector6d step = factor.solve(current.gradient);
    if (step.norm() < config.convergence_tol) {
      sol.converged = true;
      break;
    }
    Vector6d dx = step;
    if (damping > 0.0) {
      Matrix6d lhs = h;
      lhs.diagonal() += damping * h.diagonal();
      dx = guarded_factor(lhs).solve(current.gradient);
    }

    const Pose trial = retract(sol.pose, PosePerturbation(dx));
    Evaluation next;
    const bool valid =
        evaluate(frame, points, information, trial, intrinsics, config, true, next, failing);
    if (valid && next.objective <= current.objective) {
      sol.pose = trial;
      current = next;
      sol.objective_trace.push_back(current.objective);
      damping = damping > kInitialDamping ? damping / 10.0 : 0.0;
      continue;
    }
    hit_invalid_depth = hit_invalid_depth || !valid;
    damping = damping == 0.0 ? kInitialDamping : damping * 10.0;
    if (damping > kMaxDamping) {
      if (hit_invalid_depth) {
        throw Error(ErrorCode::DivergedBehindCamera,
                    "pose optimization pushed landmark " + std::to_string(failing) +
                        " behind the camera");
      }
      break;
    }
  }
  sol.objective = current.objective;
  return sol;
}

}  // namespace vio_integrity
