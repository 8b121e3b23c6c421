#include <benchmark/benchmark.h>

#include "vio_integrity/integrity.hpp"
#include "vio_integrity/simulation.hpp"

using namespace vio_integrity;

namespace {

struct Workload {
  ScenarioConfig cfg;
  Scene scene;
  SyntheticFrame frame;
  Pose start;
};

Workload make_workload(int landmarks, double outlier_rate) {
  Workload w;
  w.cfg.seed = 99;
  w.cfg.n_landmarks = landmarks;
  w.cfg.outlier_rate = outlier_rate;
  w.scene = generate_scene(w.cfg);
  w.frame = synthesize_frame(w.scene.poses[0], w.scene.map, w.cfg, frame_seed(w.cfg.seed, 0));
  w.start = retract(w.scene.poses[0], initial_guess_offset());
  return w;
}

void BM_MonitorFrame(benchmark::State& state) {
  const Workload w = make_workload(static_cast<int>(state.range(0)), 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        monitor_frame(w.frame.frame, w.scene.map, w.start, w.cfg.intrinsics, {}, {}));
  }
}
BENCHMARK(BM_MonitorFrame)->Arg(20)->Arg(50)->Arg(150)->Unit(benchmark::kMicrosecond);

void BM_ProtectionLevel(benchmark::State& state) {
  const Workload w = make_workload(static_cast<int>(state.range(0)), 0.0);
  const StackedSystem sys =
      linearize(w.frame.frame, w.scene.map, w.scene.poses[0], w.cfg.intrinsics);
  const double delta = detection_threshold(sys.feature_count(), kDefaultFalseAlarmProbability);
  for (auto _ : state) {
    benchmark::DoNotOptimize(protection_level(sys, delta, DetectionConfig{}));
  }
}
BENCHMARK(BM_ProtectionLevel)->Arg(20)->Arg(50)->Arg(150)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
