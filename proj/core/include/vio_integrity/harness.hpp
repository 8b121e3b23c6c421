#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vio_integrity/estimation.hpp"
#include "vio_integrity/integrity.hpp"
#include "vio_integrity/metrics.hpp"
#include "vio_integrity/simulation.hpp"

namespace vio_integrity {

// ---------------------------------------------------------------------------
// Numbers
// ---------------------------------------------------------------------------

/// Shortest decimal that parses back to the same double ("nan", "inf" and
/// "-inf" for non-finite values).
std::string format_double(double value);
/// Strict parse of a whole field; throws FormatError.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

// ---------------------------------------------------------------------------
// trials.csv: frame,axis,error,pl,three_sigma,sigma,status
// ---------------------------------------------------------------------------

/// One frame/axis row of a bound comparison log.
///
/// Rows of monitored frames carry finite values with sigma > 0. Unsafe and
/// Unmonitorable rows may hold NaN where a quantity was not computed; they
/// are excluded from summaries.
struct FrameLogRecord {
  int frame = 0;
  Axis axis = Axis::X;
  double error = 0.0;
  double pl = 0.0;
  double three_sigma = 0.0;
  double sigma = 1.0;
  IntegrityStatus status = IntegrityStatus::Nominal;

  /// Equality that treats NaN fields as equal to NaN.
  bool same_as(const FrameLogRecord& other) const;
};

inline constexpr std::string_view kTrialsHeader = "frame,axis,error,pl,three_sigma,sigma,status";

std::vector<FrameLogRecord> to_log_records(std::span<const TrialRecord> trials);

void write_trials(std::ostream& out, std::span<const FrameLogRecord> records);
std::vector<FrameLogRecord> read_trials(std::istream& in);
void write_trials(const std::filesystem::path& path, std::span<const FrameLogRecord> records);
std::vector<FrameLogRecord> read_trials(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// map.csv / frames.csv / poses.csv for externally supplied logs
// ---------------------------------------------------------------------------

inline constexpr std::string_view kMapHeader = "landmark_id,px,py,pz";
inline constexpr std::string_view kFramesHeader = "frame,landmark_id,u,v,d,q11,q12,q13,q22,q23,q33";
/// Optional initial guesses: translation and rotation vector of the rotation.
inline constexpr std::string_view kPosesHeader = "frame,tx,ty,tz,rx,ry,rz";

void write_map(std::ostream& out, const LandmarkMap& map);
LandmarkMap read_map(std::istream& in);
LandmarkMap read_map(const std::filesystem::path& path);

/// Frames keyed by frame index; observations keep file order.
void write_frames(std::ostream& out, const std::map<int, Frame>& frames);
std::map<int, Frame> read_frames(std::istream& in);
std::map<int, Frame> read_frames(const std::filesystem::path& path);

std::map<int, Pose> read_poses(std::istream& in);
std::map<int, Pose> read_poses(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// reports.csv: one row per frame and axis of an IntegrityReport
// ---------------------------------------------------------------------------

inline constexpr std::string_view kReportsHeader =
    "frame,status,lambda,delta,inliers,outliers,tx,ty,tz,axis,eps_f,eps_n,pl,worst_landmark_id";

void write_reports(std::ostream& out, const std::map<int, IntegrityReport>& reports);

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

enum class BoundMethod { ProtectionLevel, ThreeSigma };
std::string_view to_string(BoundMethod method);

struct MethodSummary {
  Axis axis = Axis::X;
  BoundMethod method = BoundMethod::ProtectionLevel;
  double bounding_rate = 0.0;
  double rbt = 0.0;
  std::size_t n = 0;
};

struct CdfPoint {
  BoundMethod method = BoundMethod::ProtectionLevel;
  Axis axis = Axis::X;
  double diff = 0.0;  // bound - error
  double cum_fraction = 0.0;
};

struct SummaryReport {
  double tau = 1.0;
  /// Axis-major, protection level before 3-sigma.
  std::vector<MethodSummary> rows;
  /// Sorted ascending by diff within each (method, axis) block.
  std::vector<CdfPoint> cdf;

  const MethodSummary& find(Axis axis, BoundMethod method) const;
};

inline constexpr std::string_view kSummaryHeader = "axis,method,bounding_rate,rbt,n";
inline constexpr std::string_view kCdfHeader = "method,axis,diff,cum_fraction";

/// Bounding rate, RBT score and CDF of (bound - error) per axis and method,
/// over rows of monitored frames. Throws EmptySampleSet if there are none.
SummaryReport summarize(std::span<const FrameLogRecord> records, const RbtConfig& config);

void write_summary(std::ostream& out, const SummaryReport& summary);
void write_cdf(std::ostream& out, const SummaryReport& summary);

// ---------------------------------------------------------------------------
// Run configuration: flat "key = value" text, '#' starts a comment.
// ---------------------------------------------------------------------------

struct RunConfig {
  ScenarioConfig scenario;
  DetectionConfig detection;
  SolverConfig solver;
};

/// Unknown keys, duplicate keys and malformed values raise FormatError with
/// the line number.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace vio_integrity
