#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "vio_integrity/error.hpp"
#include "vio_integrity/simulation.hpp"

using namespace vio_integrity;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig cfg;
  cfg.seed = 42;
  cfg.n_landmarks = 40;
  cfg.n_frames = 60;
  return cfg;
}

bool same_records(const std::vector<TrialRecord>& a, const std::vector<TrialRecord>& b) {
  if (a.size() != b.size()) return false;
  const auto eq = [](double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
  };
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      if (!eq(a[k].true_error[i], b[k].true_error[i]) || !eq(a[k].pl[i], b[k].pl[i]) ||
          !eq(a[k].three_sigma[i], b[k].three_sigma[i]) || !eq(a[k].sigma[i], b[k].sigma[i])) {
        return false;
      }
    }
    if (a[k].status != b[k].status || a[k].removed_ids != b[k].removed_ids) return false;
  }
  return true;
}

}  // namespace

TEST(Simulation, SceneIsDeterministic) {
  const ScenarioConfig cfg = small_scenario();
  const Scene a = generate_scene(cfg);
  const Scene b = generate_scene(cfg);
  ASSERT_EQ(a.map.size(), b.map.size());
  for (const auto& [id, p] : a.map) EXPECT_EQ(p, b.map.at(id));
  const SyntheticFrame fa = synthesize_frame(a.poses[0], a.map, cfg, frame_seed(cfg.seed, 0));
  const SyntheticFrame fb = synthesize_frame(b.poses[0], b.map, cfg, frame_seed(cfg.seed, 0));
  ASSERT_EQ(fa.frame.size(), fb.frame.size());
  for (std::size_t j = 0; j < fa.frame.size(); ++j) {
    EXPECT_EQ(fa.frame.observations[j].measurement, fb.frame.observations[j].measurement);
  }
}

TEST(Simulation, DifferentSeedsDiffer) {
  ScenarioConfig cfg = small_scenario();
  const Scene a = generate_scene(cfg);
  cfg.seed = 43;
  const Scene b = generate_scene(cfg);
  EXPECT_NE(a.map.at(0), b.map.at(0));
  EXPECT_NE(frame_seed(1, 0), frame_seed(1, 1));
  EXPECT_NE(frame_seed(1, 0), frame_seed(2, 0));
}

TEST(Simulation, LandmarksRespectDepthRange) {
  ScenarioConfig cfg = small_scenario();
  cfg.waypoints = {Pose::identity(),
                   retract(Pose::identity(), PosePerturbation(Eigen::Vector3d(1.0, 0.0, 0.5),
                                                              Eigen::Vector3d(0.0, 0.3, 0.0)))};
  const Scene scene = generate_scene(cfg);
  EXPECT_EQ(scene.map.size(), 80u);
  for (const Pose& pose : scene.poses) {
    const auto visible = visible_landmarks(pose, scene.map, cfg);
    EXPECT_GE(visible.size(), 6u);
    for (int id : visible) {
      const double z = pose.apply(scene.map.at(id)).z();
      EXPECT_GE(z, cfg.depth_min);
      EXPECT_LE(z, cfg.depth_max);
    }
  }
}

TEST(Simulation, NoiseHasConfiguredSpread) {
  ScenarioConfig cfg = small_scenario();
  cfg.pixel_sigma_base = 1.5;
  const Scene scene = generate_scene(cfg);
  Eigen::Vector3d sum_sq = Eigen::Vector3d::Zero();
  std::size_t count = 0;
  for (int f = 0; f < 400; ++f) {
    const SyntheticFrame sf = synthesize_frame(scene.poses[0], scene.map, cfg, frame_seed(9, f));
    for (const auto& obs : sf.frame.observations) {
      const Eigen::Vector3d e =
          obs.measurement - predict_measurement(scene.poses[0], scene.map.at(obs.landmark_id),
                                                cfg.intrinsics);
      sum_sq += e.cwiseAbs2();
      ++count;
      EXPECT_NEAR(obs.covariance(0, 0), 2.25, 1e-12);
      EXPECT_NEAR(obs.covariance(2, 2), 4.5, 1e-12);
    }
  }
  const Eigen::Vector3d sd = (sum_sq / static_cast<double>(count)).cwiseSqrt();
  EXPECT_NEAR(sd(0) / 1.5, 1.0, 0.02);
  EXPECT_NEAR(sd(1) / 1.5, 1.0, 0.02);
  EXPECT_NEAR(sd(2) / (1.5 * std::sqrt(2.0)), 1.0, 0.02);
}

TEST(Simulation, OutlierCountIsBinomial) {
  ScenarioConfig cfg = small_scenario();
  cfg.outlier_rate = 0.1;
  const Scene scene = generate_scene(cfg);
  std::size_t outliers = 0;
  std::size_t total = 0;
  for (int f = 0; f < 500; ++f) {
    const SyntheticFrame sf = synthesize_frame(scene.poses[0], scene.map, cfg, frame_seed(5, f));
    outliers += sf.injected_outlier_ids.size();
    total += sf.frame.size();
    for (int id : sf.injected_outlier_ids) {
      for (const auto& obs : sf.frame.observations) {
        if (obs.landmark_id != id) continue;
        const double shift =
            (obs.measurement -
             predict_measurement(scene.poses[0], scene.map.at(id), cfg.intrinsics))
                .norm();
        EXPECT_GT(shift, cfg.outlier_min - 10.0);
        EXPECT_LT(shift, cfg.outlier_max + 10.0);
      }
    }
  }
  const double n = static_cast<double>(total);
  EXPECT_NEAR(static_cast<double>(outliers), 0.1 * n, 4.0 * std::sqrt(n * 0.1 * 0.9));
}

TEST(Simulation, CleanCampaignIsBounded) {
  const ScenarioConfig cfg = small_scenario();
  const auto records = run_monte_carlo(cfg, {}, {}, 1);
  ASSERT_EQ(records.size(), 60u);
  std::array<int, 3> pl_ok{}, sigma_ok{};
  int monitored = 0;
  for (const auto& r : records) {
    if (!is_monitored(r.status)) continue;
    ++monitored;
    for (std::size_t i = 0; i < 3; ++i) {
      pl_ok[i] += r.true_error[i] <= r.pl[i];
      sigma_ok[i] += r.true_error[i] <= r.three_sigma[i];
      EXPECT_DOUBLE_EQ(r.three_sigma[i], 3.0 * r.sigma[i]);
      EXPECT_GT(r.pl[i], r.three_sigma[i]);
    }
  }
  ASSERT_GT(monitored, 50);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_GE(pl_ok[i], 0.95 * monitored);
    EXPECT_GE(sigma_ok[i], 0.95 * monitored);
  }
}

TEST(Simulation, DoublingNoiseDoublesThreeSigma) {
  ScenarioConfig a = small_scenario();
  a.n_frames = 10;
  ScenarioConfig b = a;
  b.pixel_sigma_base = 2.0;
  const auto ra = run_monte_carlo(a, {}, {}, 1);
  const auto rb = run_monte_carlo(b, {}, {}, 1);
  for (std::size_t k = 0; k < ra.size(); ++k) {
    if (!is_monitored(ra[k].status) || !is_monitored(rb[k].status)) continue;
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(rb[k].three_sigma[i] / ra[k].three_sigma[i], 2.0, 1e-2);
    }
  }
}

TEST(Simulation, WorkerCountDoesNotChangeResults) {
  ScenarioConfig cfg = small_scenario();
  cfg.outlier_rate = 0.1;
  const auto one = run_monte_carlo(cfg, {}, {}, 1);
  const auto eight = run_monte_carlo(cfg, {}, {}, 8);
  EXPECT_TRUE(same_records(one, eight));
}

TEST(Simulation, ConfigValidation) {
  ScenarioConfig cfg;
  cfg.depth_min = 30.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ScenarioConfig{};
  cfg.outlier_rate = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ScenarioConfig{};
  cfg.n_landmarks = 3;
  cfg.depth_min = 19.9;
  try {
    generate_scene(cfg, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleScene);
  }
}
