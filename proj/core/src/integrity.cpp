#include "vio_integrity/integrity.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "vio_integrity/error.hpp"
#include "vio_integrity/metrics.hpp"

namespace vio_integrity {

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

std::string_view to_string(IntegrityStatus status) {
  switch (status) {
    case IntegrityStatus::Nominal: return "nominal";
    case IntegrityStatus::OutliersExcluded: return "outliers_excluded";
    case IntegrityStatus::Unsafe: return "unsafe";
    case IntegrityStatus::Unmonitorable: return "unmonitorable";
  }
  return "?";
}

IntegrityStatus parse_status(std::string_view text) {
  for (const auto status : {IntegrityStatus::Nominal, IntegrityStatus::OutliersExcluded,
                            IntegrityStatus::Unsafe, IntegrityStatus::Unmonitorable}) {
    if (text == to_string(status)) return status;
  }
  throw Error(ErrorCode::FormatError, "unknown status '" + std::string(text) + "'");
}

std::string_view to_string(IpsorUpdate update) {
  return update == IpsorUpdate::Refit ? "refit" : "decrement";
}

IpsorUpdate parse_ipsor_update(std::string_view text) {
  if (text == "refit") return IpsorUpdate::Refit;
  if (text == "decrement") return IpsorUpdate::Decrement;
  throw Error(ErrorCode::FormatError, "unknown ipsor update '" + std::string(text) + "'");
}

void DetectionConfig::validate() const {
  if (!(false_alarm_probability > 0.0 && false_alarm_probability < 1.0)) {
    throw Error(ErrorCode::InvalidProbability, "p_fa must lie strictly between 0 and 1");
  }
  if (!(k_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "k_sigma must be > 0");
  if (min_inlier_count && *min_inlier_count < 3) {
    throw Error(ErrorCode::InvalidArgument, "min_inlier_count must be >= 3");
  }
  if (max_ipsor_rounds < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_ipsor_rounds must be >= 1");
  }
}

int DetectionConfig::resolved_min_inliers(std::size_t feature_count) const {
  if (min_inlier_count) return *min_inlier_count;
  const int half = static_cast<int>((feature_count + 1) / 2);
  return std::max(6, half);
}

Eigen::VectorXd feature_contributions(const Eigen::VectorXd& residual,
                                      std::span<const Eigen::Matrix3d> information) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(information.size()));
  for (std::size_t j = 0; j < information.size(); ++j) {
    const Eigen::Vector3d e = residual.segment<3>(3 * static_cast<Eigen::Index>(j));
    out(static_cast<Eigen::Index>(j)) = e.dot(information[j] * e);
  }
  return out;
}

double test_statistic(const Eigen::VectorXd& residual,
                      std::span<const Eigen::Matrix3d> information) {
  return feature_contributions(residual, information).sum();
}

double detection_threshold(std::size_t feature_count, double false_alarm_probability) {
  const long dof = 3 * static_cast<long>(feature_count) - 6;
  if (dof < 1) {
    throw Error(ErrorCode::InsufficientRedundancy,
                std::to_string(feature_count) + " features leave no residual degrees of freedom");
  }
  return chi2_quantile(static_cast<int>(dof), 1.0 - false_alarm_probability);
}

DetectionResult detect(const StackedSystem& system, double false_alarm_probability) {
  DetectionResult out;
  out.delta = detection_threshold(system.feature_count(), false_alarm_probability);
  out.residual = residual(system, wls_solve(system));
  out.lambda = test_statistic(out.residual, system.information);
  out.consistent = out.lambda <= out.delta;
  return out;
}

namespace {

StackedSystem drop_feature(const StackedSystem& system, std::size_t feature) {
  const auto n = static_cast<Eigen::Index>(system.feature_count());
  const auto j = static_cast<Eigen::Index>(feature);
  StackedSystem out;
  out.jacobian.resize(3 * (n - 1), 6);
  out.jacobian << system.jacobian.topRows(3 * j), system.jacobian.bottomRows(3 * (n - j - 1));
  out.shifted.resize(3 * (n - 1));
  out.shifted << system.shifted.head(3 * j), system.shifted.tail(3 * (n - j - 1));
  out.information = system.information;
  out.information.erase(out.information.begin() + j);
  out.landmark_ids = system.landmark_ids;
  out.landmark_ids.erase(out.landmark_ids.begin() + j);
  return out;
}

}  // namespace

IpsorResult ipsor(const Frame& frame, const LandmarkMap& map, const Pose& initial,
                  const StereoIntrinsics& intrinsics, const DetectionConfig& detection,
                  const SolverConfig& solver) {
  detection.validate();
  const std::size_t total = frame.size();
  if (total < 3) {
    throw Error(ErrorCode::Unmonitorable, "at least 3 features are needed for outlier rejection");
  }
  const auto min_inliers = static_cast<std::size_t>(detection.resolved_min_inliers(total));
  const double p_fa = detection.false_alarm_probability;

  IpsorResult out;
  out.inliers = frame;
  out.pose = initial;
  out.system = linearize(out.inliers, map, out.pose, intrinsics, solver.min_depth);
  DetectionResult test = detect(out.system, p_fa);
  out.lambda = test.lambda;
  out.delta = test.delta;

  while (out.lambda > out.delta) {
    if (out.rounds >= detection.max_ipsor_rounds) {
      out.status = IntegrityStatus::Unsafe;
      return out;
    }
    ++out.rounds;

    std::vector<std::size_t> survivors(out.inliers.size());
    for (std::size_t j = 0; j < survivors.size(); ++j) survivors[j] = j;
    Eigen::VectorXd contributions = feature_contributions(test.residual, out.system.information);
    StackedSystem reduced;
    if (detection.ipsor_update == IpsorUpdate::Refit) reduced = out.system;

    while (out.lambda > out.delta && survivors.size() > 3) {
      Eigen::Index worst = 0;
      for (Eigen::Index k = 1; k < contributions.size(); ++k) {
        if (contributions(k) > contributions(worst)) worst = k;
      }
      const auto position = static_cast<std::size_t>(worst);
      out.outlier_ids.push_back(out.inliers.observations[survivors[position]].landmark_id);
      survivors.erase(survivors.begin() + worst);
      out.delta = detection_threshold(survivors.size(), p_fa);

      if (detection.ipsor_update == IpsorUpdate::Decrement) {
        out.lambda -= contributions(worst);
        Eigen::VectorXd rest(contributions.size() - 1);
        rest << contributions.head(worst), contributions.tail(contributions.size() - worst - 1);
        contributions = std::move(rest);
      } else {
        reduced = drop_feature(reduced, position);
        const Eigen::VectorXd eps = residual(reduced, wls_solve(reduced));
        contributions = feature_contributions(eps, reduced.information);
        out.lambda = contributions.sum();
      }
    }

    Frame kept;
    kept.observations.reserve(survivors.size());
    for (const std::size_t j : survivors) kept.observations.push_back(out.inliers.observations[j]);
    out.inliers = std::move(kept);

    if (out.inliers.size() < min_inliers) {
      out.status = IntegrityStatus::Unsafe;
      return out;
    }

    out.pose = solve_pose(out.inliers, map, out.pose, intrinsics, solver).pose;
    out.system = linearize(out.inliers, map, out.pose, intrinsics, solver.min_depth);
    test = detect(out.system, p_fa);
    out.lambda = test.lambda;
    out.delta = test.delta;
  }
  out.status = out.outlier_ids.empty() ? IntegrityStatus::Nominal
                                       : IntegrityStatus::OutliersExcluded;
  return out;
}

FaultProjector::FaultProjector(const StackedSystem& system)
    : information_(system.information), covariance_(vio_integrity::covariance(system)) {
  const auto rows = system.jacobian.rows();
  weighted_jacobian_.resize(rows, 6);
  for (std::size_t j = 0; j < information_.size(); ++j) {
    const auto r = 3 * static_cast<Eigen::Index>(j);
    weighted_jacobian_.middleRows<3>(r).noalias() =
        information_[j] * system.jacobian.middleRows<3>(r);
  }
}

Eigen::Matrix3d FaultProjector::parity_block(std::size_t feature) const {
  const auto g = weighted_jacobian_.middleRows<3>(3 * static_cast<Eigen::Index>(feature));
  Eigen::Matrix3d block = information_[feature] - g * covariance_ * g.transpose();
  return 0.5 * (block + block.transpose());
}

Eigen::Matrix3d FaultProjector::extraction_block(Axis axis, std::size_t feature) const {
  const auto g = weighted_jacobian_.middleRows<3>(3 * static_cast<Eigen::Index>(feature));
  const Eigen::Vector3d v = g * covariance_.col(static_cast<Eigen::Index>(axis));
  return v * v.transpose();
}

Eigen::MatrixXd FaultProjector::parity_matrix() const {
  Eigen::MatrixXd s = -weighted_jacobian_ * covariance_ * weighted_jacobian_.transpose();
  for (std::size_t j = 0; j < information_.size(); ++j) {
    const auto r = 3 * static_cast<Eigen::Index>(j);
    s.block<3, 3>(r, r) += information_[j];
  }
  return s;
}

Eigen::MatrixXd FaultProjector::extraction_matrix(Axis axis) const {
  const Eigen::VectorXd v = weighted_jacobian_ * covariance_.col(static_cast<Eigen::Index>(axis));
  return v * v.transpose();
}

double fault_induced_error(const FaultProjector& projector, double delta, Axis axis,
                           std::size_t feature) {
  if (feature >= projector.feature_count()) {
    throw Error(ErrorCode::InvalidArgument, "fault hypothesis index out of range");
  }
  const Eigen::Matrix3d parity = projector.parity_block(feature);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(parity, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !(hi / lo <= kMaxConditionNumber)) {
    throw Error(ErrorCode::SingularFaultProjection,
                "residual projection of feature " + std::to_string(feature) + " is degenerate");
  }
  const double lambda_max = max_eig_3x3_pair(projector.extraction_block(axis, feature), parity);
  return std::sqrt(lambda_max * delta);
}

double fault_induced_error(const StackedSystem& system, double delta, Axis axis,
                           std::size_t feature) {
  return fault_induced_error(FaultProjector(system), delta, axis, feature);
}

ProtectionLevels protection_level(const StackedSystem& system, double delta,
                                  const DetectionConfig& config) {
  config.validate();
  const FaultProjector projector(system);
  ProtectionLevels out;
  std::array<double, 3> worst{-1.0, -1.0, -1.0};

  for (std::size_t j = 0; j < projector.feature_count(); ++j) {
    std::array<double, 3> candidate{};
    try {
      for (const Axis axis : kAxes) {
        candidate[static_cast<std::size_t>(axis)] = fault_induced_error(projector, delta, axis, j);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularFaultProjection) throw;
      ++out.singular_projections;
      continue;
    }
    for (const Axis axis : kAxes) {
      const auto i = static_cast<std::size_t>(axis);
      if (candidate[i] > worst[i]) {
        worst[i] = candidate[i];
        out.axes[i].worst_landmark_id = system.landmark_ids[j];
      }
    }
  }
  if (worst[0] < 0.0) {
    throw Error(ErrorCode::DegenerateGeometry, "every fault hypothesis is degenerate");
  }

  for (const Axis axis : kAxes) {
    const auto i = static_cast<std::size_t>(axis);
    auto& level = out.axes[i];
    level.axis = axis;
    level.fault_error = worst[i];
    level.noise_error = config.k_sigma * std::sqrt(projector.covariance()(static_cast<Eigen::Index>(i),
                                                                          static_cast<Eigen::Index>(i)));
    level.level = level.fault_error + level.noise_error;
  }
  return out;
}

double IntegrityReport::test_statistic() const { return std::sqrt(std::max(0.0, lambda)); }

namespace {

std::vector<int> ids_of(const Frame& frame) {
  std::vector<int> ids;
  ids.reserve(frame.size());
  for (const auto& obs : frame.observations) ids.push_back(obs.landmark_id);
  return ids;
}

}  // namespace

IntegrityReport monitor_frame(const Frame& frame, const LandmarkMap& map, const Pose& initial,
                              const StereoIntrinsics& intrinsics, const DetectionConfig& detection,
                              const SolverConfig& solver) {
  detection.validate();
  solver.validate();
  intrinsics.validate();
  validate_frame(frame, map);

  IntegrityReport report;
  report.pose = initial;
  report.inlier_ids = ids_of(frame);
  if (frame.size() < 3) {
    report.status = IntegrityStatus::Unmonitorable;
    report.failure = "InsufficientRedundancy: fewer than 3 features";
    return report;
  }

  try {
    const PoseSolution solved = solve_pose(frame, map, initial, intrinsics, solver);
    report.pose = solved.pose;
    StackedSystem system = linearize(frame, map, solved.pose, intrinsics, solver.min_depth);
    const DetectionResult test = detect(system, detection.false_alarm_probability);
    report.lambda = test.lambda;
    report.delta = test.delta;
    report.status = IntegrityStatus::Nominal;

    if (!test.consistent) {
      IpsorResult rejected = ipsor(frame, map, solved.pose, intrinsics, detection, solver);
      report.pose = rejected.pose;
      report.lambda = rejected.lambda;
      report.delta = rejected.delta;
      report.inlier_ids = ids_of(rejected.inliers);
      report.outlier_ids = rejected.outlier_ids;
      report.status = rejected.status;
      if (rejected.status == IntegrityStatus::Unsafe) {
        report.failure = "too many outliers: " + std::to_string(rejected.inliers.size()) +
                         " features survive rejection";
        return report;
      }
      system = std::move(rejected.system);
    }

    const ProtectionLevels levels = protection_level(system, report.delta, detection);
    report.protection = levels.axes;
    report.singular_projections = levels.singular_projections;
    report.covariance = covariance(system);
  } catch (const Error& e) {
    report.status = IntegrityStatus::Unmonitorable;
    report.failure = std::string(to_string(e.code())) + ": " + e.what();
  }
  return report;
}

}  // namespace vio_integrity
