// Command-line harness: Monte Carlo campaigns, monitoring of external logs,
// bound summaries and the RBT penalty derivation.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "vio_integrity/error.hpp"
#include "vio_integrity/harness.hpp"
#include "vio_integrity/metrics.hpp"

namespace vi = vio_integrity;

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vi::Error(vi::ErrorCode::IoError, "cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw vi::Error(vi::ErrorCode::IoError, "write failure on '" + path + "'");
}

std::string default_cdf_path(const std::string& summary_path) {
  const auto dot = summary_path.find_last_of('.');
  const auto slash = summary_path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return summary_path + ".cdf.csv";
  }
  return summary_path.substr(0, dot) + ".cdf.csv";
}

int run_simulate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed, unsigned threads) {
  vi::RunConfig cfg = vi::load_config(config_path);
  if (seed) cfg.scenario.seed = *seed;
  const auto trials = vi::run_monte_carlo(cfg.scenario, cfg.detection, cfg.solver, threads);
  vi::write_trials(out_path, vi::to_log_records(trials));
  return 0;
}

int run_monitor(const std::string& frames_path, const std::string& map_path,
                const std::string& config_path, const std::string& out_path,
                const std::string& poses_path) {
  const vi::RunConfig cfg = vi::load_config(config_path);
  const vi::LandmarkMap map = vi::read_map(map_path);
  const auto frames = vi::read_frames(frames_path);
  std::map<int, vi::Pose> guesses;
  if (!poses_path.empty()) guesses = vi::read_poses(poses_path);

  // Without explicit guesses each frame starts from the previous estimate.
  vi::Pose previous = vi::Pose::identity();
  std::map<int, vi::IntegrityReport> reports;
  for (const auto& [index, frame] : frames) {
    vi::Pose initial = previous;
    if (!guesses.empty()) {
      const auto it = guesses.find(index);
      if (it == guesses.end()) {
        throw vi::Error(vi::ErrorCode::FormatError,
                        "no initial pose for frame " + std::to_string(index));
      }
      initial = it->second;
    }
    auto report = vi::monitor_frame(frame, map, initial, cfg.scenario.intrinsics, cfg.detection,
                                     cfg.solver);
    if (report.status != vi::IntegrityStatus::Unmonitorable) previous = report.pose;
    reports.emplace(index, std::move(report));
  }
  auto out = open_output(out_path);
  vi::write_reports(out, reports);
  finish(out, out_path);
  return 0;
}

int run_summarize(const std::string& trials_path, double pd, std::optional<double> tau,
                  const std::string& out_path, std::string cdf_path) {
  const auto records = vi::read_trials(trials_path);
  vi::RbtConfig cfg;
  cfg.detection_probability = pd;
  cfg.tau = tau;
  const auto summary = vi::summarize(records, cfg);
  auto out = open_output(out_path);
  vi::write_summary(out, summary);
  finish(out, out_path);
  if (cdf_path.empty()) cdf_path = default_cdf_path(out_path);
  auto cdf = open_output(cdf_path);
  vi::write_cdf(cdf, summary);
  finish(cdf, cdf_path);
  return 0;
}

int run_tau(double pd, double step) {
  const double tau = vi::solve_tau(pd);
  const double ideal = vi::ideal_bound(pd);
  const double minimizer = vi::rbt_grid_minimizer(tau, 2.0 * ideal, step);
  std::cout << "p_d=" << vi::format_double(pd) << '\n'
            << "tau=" << vi::format_double(tau) << '\n'
            << "ideal_bound=" << vi::format_double(ideal) << '\n'
            << "grid_minimizer=" << vi::format_double(minimizer) << '\n'
            << "residual=" << vi::format_double(std::abs(minimizer - ideal)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrity monitoring for stereo visual localization"};
  app.require_subcommand(1);

  std::string config_path, out_path, frames_path, map_path, poses_path, trials_path, cdf_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  double pd = 0.9973;
  std::optional<double> tau;
  double step = 1e-4;

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo campaign");
  simulate->add_option("--config", config_path, "Scenario config file")->required();
  simulate->add_option("--out", out_path, "Output trials.csv")->required();
  simulate->add_option("--seed", seed, "Override the campaign seed");
  simulate->add_option("--threads", threads,
                       "Worker count (default: VIO_INTEGRITY_THREADS or all cores)");

  auto* monitor = app.add_subcommand("monitor", "Monitor an externally supplied frame log");
  monitor->add_option("--frames", frames_path, "frames.csv")->required();
  monitor->add_option("--map", map_path, "map.csv")->required();
  monitor->add_option("--config", config_path, "Config with intrinsics and detector settings")
      ->required();
  monitor->add_option("--out", out_path, "Output reports.csv")->required();
  monitor->add_option("--poses", poses_path, "Optional initial guesses per frame");
  monitor->add_option("--seed", seed, "Accepted for interface uniformity; monitoring is deterministic");

  auto* summarize = app.add_subcommand("summarize", "Bounding rates, RBT scores and CDF tables");
  summarize->add_option("--trials", trials_path, "trials.csv")->required();
  summarize->add_option("--pd", pd, "Detection probability")->capture_default_str();
  summarize->add_option("--tau", tau, "Override the derived RBT penalty");
  summarize->add_option("--out", out_path, "Output summary.csv")->required();
  summarize->add_option("--cdf", cdf_path, "Output CDF table (default: <out>.cdf.csv)");

  auto* tau_cmd = app.add_subcommand("tau", "Derive the RBT penalty for a detection probability");
  tau_cmd->add_option("--pd", pd, "Detection probability")->capture_default_str();
  tau_cmd->add_option("--step", step, "Grid step of the verification search")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_simulate(config_path, out_path, seed, threads);
    if (*monitor) return run_monitor(frames_path, map_path, config_path, out_path, poses_path);
    if (*summarize) return run_summarize(trials_path, pd, tau, out_path, cdf_path);
    if (*tau_cmd) return run_tau(pd, step);
  } catch (const vi::Error& e) {
    std::cerr << "error: " << vi::to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
