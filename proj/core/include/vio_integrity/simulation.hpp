#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vio_integrity/estimation.hpp"
#include "vio_integrity/geometry.hpp"
#include "vio_integrity/integrity.hpp"

namespace vio_integrity {

struct ScenarioConfig {
  std::uint64_t seed = 1;
  /// Landmarks sampled inside the frustum of each distinct trajectory pose.
  int n_landmarks = 50;
  double depth_min = 2.0;
  double depth_max = 20.0;
  int n_frames = 100;
  /// Camera poses visited in order (cyclically). Empty means a static camera
  /// at the identity pose.
  std::vector<Pose> waypoints;
  double pixel_sigma_base = 1.0;
  /// Scale multipliers of pixel_sigma_base; each feature draws one uniformly.
  std::vector<double> sigma_levels{1.0};
  double outlier_rate = 0.0;
  double outlier_min = 30.0;
  double outlier_max = 100.0;
  /// EuRoC-like rectified stereo rig. The image spans [0, 2cu] x [0, 2cv].
  StereoIntrinsics intrinsics{435.0, 435.0, 367.0, 248.0, 0.11};

  void validate() const;
  /// Trajectory pose of a frame.
  const Pose& pose_at(int frame_index) const;
};

struct Scene {
  LandmarkMap map;
  /// Ground-truth pose of every frame.
  std::vector<Pose> poses;
};

/// Landmarks visible from a pose: in front of the camera within the depth
/// range and inside the image. Ordered by id.
std::vector<int> visible_landmarks(const Pose& pose, const LandmarkMap& map,
                                   const ScenarioConfig& config);

/// Throws InfeasibleScene if some pose cannot see `min_visible` landmarks
/// after 1000 sampling attempts.
Scene generate_scene(const ScenarioConfig& config, int min_visible = 6);

struct SyntheticFrame {
  Frame frame;
  std::vector<int> injected_outlier_ids;
};

/// Noisy stereo measurements of the visible landmarks. Feature covariance is
/// sigma^2 diag(1, 1, 2) with sigma = pixel_sigma_base * level; outliers are
/// shifted by a uniform magnitude in [outlier_min, outlier_max] along a
/// uniformly distributed direction in (u, v, d).
SyntheticFrame synthesize_frame(const Pose& pose, const LandmarkMap& map,
                                const ScenarioConfig& config, std::uint64_t frame_seed);

/// Seed of frame `index` in a campaign: splitmix64(seed + (index + 1) * golden).
std::uint64_t frame_seed(std::uint64_t campaign_seed, int frame_index);

/// Perturbation applied to the ground truth to form the solver's initial
/// guess: 0.05 m along (1, 1, 1) / sqrt(3) and 0.02 rad about (1, -1, 1) / sqrt(3).
PosePerturbation initial_guess_offset();

struct TrialRecord {
  int frame_index = 0;
  /// |estimate - truth| of the camera position, per axis (m).
  std::array<double, 3> true_error{};
  std::array<double, 3> pl{};
  std::array<double, 3> three_sigma{};
  std::array<double, 3> sigma{};
  IntegrityStatus status = IntegrityStatus::Unmonitorable;
  std::vector<int> injected_outlier_ids;
  std::vector<int> removed_ids;
  std::vector<int> observed_ids;
};

/// Worker count from VIO_INTEGRITY_THREADS, else the hardware concurrency.
unsigned default_worker_count();

/// Runs monitor_frame on every synthesized frame. Frames are independent and
/// seeded individually, so the result does not depend on `workers`
/// (0 = default_worker_count()). Values that were not computed for a frame
/// (PL of Unsafe frames, everything of Unmonitorable frames) are NaN.
std::vector<TrialRecord> run_monte_carlo(const ScenarioConfig& scenario,
                                         const DetectionConfig& detection,
                                         const SolverConfig& solver, unsigned workers = 0);

}  // namespace vio_integrity
