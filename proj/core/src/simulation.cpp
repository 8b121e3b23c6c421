#include "vio_integrity/simulation.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include "vio_integrity/error.hpp"

namespace vio_integrity {
namespace {

constexpr int kMaxSceneAttempts = 1000;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

const Pose kStaticPose{};

std::vector<Pose> distinct_poses(const ScenarioConfig& cfg) {
  if (cfg.waypoints.empty()) return {kStaticPose};
  return cfg.waypoints;
}

bool in_view(const Eigen::Vector3d& pc, const ScenarioConfig& cfg) {
  if (pc.z() < cfg.depth_min || pc.z() > cfg.depth_max) return false;
  const auto& k = cfg.intrinsics;
  const double u = k.fu * pc.x() / pc.z() + k.cu;
  const double v = k.fv * pc.y() / pc.z() + k.cv;
  return u >= 0.0 && u <= 2.0 * k.cu && v >= 0.0 && v <= 2.0 * k.cv;
}

}  // namespace

void ScenarioConfig::validate() const {
  intrinsics.validate();
  if (!(intrinsics.cu > 0.0) || !(intrinsics.cv > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "principal point must be positive (image spans 2c)");
  }
  if (n_landmarks < 1) throw Error(ErrorCode::InvalidArgument, "n_landmarks must be >= 1");
  if (n_frames < 0) throw Error(ErrorCode::InvalidArgument, "n_frames must be >= 0");
  if (!(depth_min > 0.0) || !(depth_max >= depth_min)) {
    throw Error(ErrorCode::InvalidArgument, "depth range must satisfy 0 < min <= max");
  }
  if (!(pixel_sigma_base > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "pixel_sigma_base must be > 0");
  }
  if (sigma_levels.empty()) throw Error(ErrorCode::InvalidArgument, "sigma_levels is empty");
  for (const double level : sigma_levels) {
    if (!(level > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma levels must be > 0");
  }
  if (!(outlier_rate >= 0.0 && outlier_rate < 1.0)) {
    throw Error(ErrorCode::InvalidProbability, "outlier_rate must lie in [0, 1)");
  }
  if (!(outlier_min >= 0.0) || !(outlier_max >= outlier_min)) {
    throw Error(ErrorCode::InvalidArgument, "outlier magnitude range must satisfy 0 <= min <= max");
  }
}

const Pose& ScenarioConfig::pose_at(int frame_index) const {
  if (waypoints.empty()) return kStaticPose;
  return waypoints[static_cast<std::size_t>(frame_index) % waypoints.size()];
}

std::vector<int> visible_landmarks(const Pose& pose, const LandmarkMap& map,
                                   const ScenarioConfig& config) {
  std::vector<int> ids;
  for (const auto& [id, position] : map) {
    if (in_view(pose.apply(position), config)) ids.push_back(id);
  }
  return ids;
}

Scene generate_scene(const ScenarioConfig& config, int min_visible) {
  config.validate();
  const std::vector<Pose> anchors = distinct_poses(config);
  std::mt19937_64 rng(splitmix64(config.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& k = config.intrinsics;

  for (int attempt = 0; attempt < kMaxSceneAttempts; ++attempt) {
    Scene scene;
    int next_id = 0;
    for (const Pose& anchor : anchors) {
      const Pose camera_to_world = anchor.inverse();
      for (int i = 0; i < config.n_landmarks; ++i) {
        const double u = 2.0 * k.cu * unit(rng);
        const double v = 2.0 * k.cv * unit(rng);
        const double z = config.depth_min + (config.depth_max - config.depth_min) * unit(rng);
        const Eigen::Vector3d pc((u - k.cu) * z / k.fu, (v - k.cv) * z / k.fv, z);
        scene.map.insert({next_id++, camera_to_world.apply(pc)});
      }
    }
    bool feasible = true;
    for (const Pose& anchor : anchors) {
      if (static_cast<int>(visible_landmarks(anchor, scene.map, config).size()) < min_visible) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    scene.poses.reserve(static_cast<std::size_t>(config.n_frames));
    for (int f = 0; f < config.n_frames; ++f) scene.poses.push_back(config.pose_at(f));
    return scene;
  }
  throw Error(ErrorCode::InfeasibleScene,
              "could not place " + std::to_string(min_visible) + " visible landmarks per pose in " +
                  std::to_string(kMaxSceneAttempts) + " attempts");
}

SyntheticFrame synthesize_frame(const Pose& pose, const LandmarkMap& map,
                                const ScenarioConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> level(0, config.sigma_levels.size() - 1);

  SyntheticFrame out;
  for (const int id : visible_landmarks(pose, map, config)) {
    const double sigma = config.pixel_sigma_base * config.sigma_levels[level(rng)];
    Observation obs;
    obs.landmark_id = id;
    obs.covariance = sigma * sigma * Eigen::Vector3d(1.0, 1.0, 2.0).asDiagonal();
    const Eigen::Vector3d white(normal(rng), normal(rng), normal(rng));
    const Eigen::Vector3d noise(sigma * white.x(), sigma * white.y(),
                                sigma * std::numbers::sqrt2 * white.z());
    obs.measurement = predict_measurement(pose, map.at(id), config.intrinsics) + noise;

    if (unit(rng) < config.outlier_rate) {
      const double magnitude =
          config.outlier_min + (config.outlier_max - config.outlier_min) * unit(rng);
      Eigen::Vector3d direction(normal(rng), normal(rng), normal(rng));
      while (direction.norm() < 1e-12) direction = {normal(rng), normal(rng), normal(rng)};
      obs.measurement += magnitude * direction.normalized();
      out.injected_outlier_ids.push_back(id);
    }
    out.frame.observations.push_back(obs);
  }
  return out;
}

std::uint64_t frame_seed(std::uint64_t campaign_seed, int frame_index) {
  return splitmix64(campaign_seed +
                    0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(frame_index) + 1));
}

PosePerturbation initial_guess_offset() {
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  return {0.05 * inv_sqrt3 * Eigen::Vector3d(1.0, 1.0, 1.0),
          0.02 * inv_sqrt3 * Eigen::Vector3d(1.0, -1.0, 1.0)};
}

unsigned default_worker_count() {
  if (const char* env = std::getenv("VIO_INTEGRITY_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

TrialRecord run_trial(const Scene& scene, int index, const ScenarioConfig& scenario,
                      const DetectionConfig& detection, const SolverConfig& solver) {
  TrialRecord rec;
  rec.frame_index = index;
  rec.true_error.fill(kNaN);
  rec.pl.fill(kNaN);
  rec.three_sigma.fill(kNaN);
  rec.sigma.fill(kNaN);

  const Pose& truth = scene.poses[static_cast<std::size_t>(index)];
  try {
    const SyntheticFrame synth =
        synthesize_frame(truth, scene.map, scenario, frame_seed(scenario.seed, index));
    rec.injected_outlier_ids = synth.injected_outlier_ids;
    for (const auto& obs : synth.frame.observations) rec.observed_ids.push_back(obs.landmark_id);

    const Pose initial = retract(truth, initial_guess_offset());
    const IntegrityReport report = monitor_frame(synth.frame, scene.map, initial,
                                                 scenario.intrinsics, detection, solver);
    rec.status = report.status;
    rec.removed_ids = report.outlier_ids;
    if (report.status != IntegrityStatus::Unmonitorable) {
      const Eigen::Vector3d err = report.pose.translation - truth.translation;
      for (std::size_t i = 0; i < 3; ++i) rec.true_error[i] = std::abs(err(static_cast<Eigen::Index>(i)));
    }
    if (is_monitored(report.status) && report.covariance) {
      for (std::size_t i = 0; i < 3; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        rec.sigma[i] = std::sqrt((*report.covariance)(ii, ii));
        rec.three_sigma[i] = 3.0 * rec.sigma[i];
        rec.pl[i] = report.protection[i].level;
      }
    }
  } catch (const Error&) {
    rec.status = IntegrityStatus::Unmonitorable;
  }
  return rec;
}

}  // namespace

std::vector<TrialRecord> run_monte_carlo(const ScenarioConfig& scenario,
                                         const DetectionConfig& detection,
                                         const SolverConfig& solver, unsigned workers) {
  scenario.validate();
  detection.validate();
  solver.validate();
  const Scene scene = generate_scene(scenario, detection.min_inlier_count.value_or(6));

  std::vector<TrialRecord> records(static_cast<std::size_t>(scenario.n_frames));
  if (workers == 0) workers = default_worker_count();
  workers = std::min<unsigned>(workers, std::max(1, scenario.n_frames));

  std::atomic<int> next{0};
  const auto work = [&] {
    for (int i = next++; i < scenario.n_frames; i = next++) {
      records[static_cast<std::size_t>(i)] = run_trial(scene, i, scenario, detection, solver);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return records;
}

}  // namespace vio_integrity
