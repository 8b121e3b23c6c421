#include "vio_integrity/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "vio_integrity/error.hpp"

namespace vio_integrity {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void format_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::FormatError, "line " + std::to_string(line) + ": " + what);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  return in;
}

// Reads a CSV stream with a fixed header and hands each data row to `row`.
template <typename RowFn>
void read_csv(std::istream& in, std::string_view header, std::size_t columns, RowFn row) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (!have_header) {
      if (text != header) {
        format_error(line_no, "expected header '" + std::string(header) + "'");
      }
      have_header = true;
      continue;
    }
    const auto fields = split(text, ',');
    if (fields.size() != columns) {
      format_error(line_no, "expected " + std::to_string(columns) + " columns, found " +
                                std::to_string(fields.size()));
    }
    try {
      row(fields);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::FormatError) throw;
      format_error(line_no, e.what());
    }
  }
  if (in.bad()) throw Error(ErrorCode::IoError, "read failure");
  if (!have_header) format_error(line_no, "missing header '" + std::string(header) + "'");
}

Axis parse_axis(std::string_view text) {
  for (const Axis axis : kAxes) {
    if (text == to_string(axis)) return axis;
  }
  throw Error(ErrorCode::FormatError, "unknown axis '" + std::string(text) + "'");
}

int parse_int32(std::string_view text) {
  const long long v = parse_integer(text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::FormatError, "integer out of range '" + std::string(text) + "'");
  }
  return static_cast<int>(v);
}

bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::FormatError, "malformed number '" + std::string(text) + "'");
  }
  return value;
}

long long parse_integer(std::string_view text) {
  text = trim(text);
  long long value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::FormatError, "malformed integer '" + std::string(text) + "'");
  }
  return value;
}

bool FrameLogRecord::same_as(const FrameLogRecord& o) const {
  return frame == o.frame && axis == o.axis && status == o.status && same_double(error, o.error) &&
         same_double(pl, o.pl) && same_double(three_sigma, o.three_sigma) &&
         same_double(sigma, o.sigma);
}

std::vector<FrameLogRecord> to_log_records(std::span<const TrialRecord> trials) {
  std::vector<FrameLogRecord> out;
  out.reserve(3 * trials.size());
  for (const auto& t : trials) {
    for (const Axis axis : kAxes) {
      const auto i = static_cast<std::size_t>(axis);
      out.push_back({t.frame_index, axis, t.true_error[i], t.pl[i], t.three_sigma[i], t.sigma[i],
                     t.status});
    }
  }
  return out;
}

void write_trials(std::ostream& out, std::span<const FrameLogRecord> records) {
  out << kTrialsHeader << '\n';
  for (const auto& r : records) {
    out << r.frame << ',' << to_string(r.axis) << ',' << format_double(r.error) << ','
        << format_double(r.pl) << ',' << format_double(r.three_sigma) << ','
        << format_double(r.sigma) << ',' << to_string(r.status) << '\n';
  }
}

std::vector<FrameLogRecord> read_trials(std::istream& in) {
  std::vector<FrameLogRecord> out;
  read_csv(in, kTrialsHeader, 7, [&](const std::vector<std::string_view>& f) {
    FrameLogRecord r;
    r.frame = parse_int32(f[0]);
    r.axis = parse_axis(f[1]);
    r.error = parse_double(f[2]);
    r.pl = parse_double(f[3]);
    r.three_sigma = parse_double(f[4]);
    r.sigma = parse_double(f[5]);
    r.status = parse_status(f[6]);
    if (is_monitored(r.status)) {
      if (!std::isfinite(r.error) || !std::isfinite(r.pl) || !std::isfinite(r.three_sigma) ||
          !std::isfinite(r.sigma)) {
        throw Error(ErrorCode::FormatError, "monitored row has non-finite values");
      }
      if (!(r.sigma > 0.0)) throw Error(ErrorCode::FormatError, "sigma must be > 0");
    }
    out.push_back(r);
  });
  return out;
}

void write_trials(const std::filesystem::path& path, std::span<const FrameLogRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  write_trials(out, records);
  if (!out) throw Error(ErrorCode::IoError, "write failure on '" + path.string() + "'");
}

std::vector<FrameLogRecord> read_trials(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_trials(in);
}

void write_map(std::ostream& out, const LandmarkMap& map) {
  out << kMapHeader << '\n';
  for (const auto& [id, p] : map) {
    out << id << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ','
        << format_double(p.z()) << '\n';
  }
}

LandmarkMap read_map(std::istream& in) {
  LandmarkMap map;
  read_csv(in, kMapHeader, 4, [&](const std::vector<std::string_view>& f) {
    const int id = parse_int32(f[0]);
    if (map.contains(id)) {
      throw Error(ErrorCode::FormatError, "duplicate landmark id " + std::to_string(id));
    }
    const Eigen::Vector3d p(parse_double(f[1]), parse_double(f[2]), parse_double(f[3]));
    if (!p.allFinite()) throw Error(ErrorCode::FormatError, "non-finite landmark position");
    map.insert({id, p});
  });
  return map;
}

LandmarkMap read_map(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_map(in);
}

void write_frames(std::ostream& out, const std::map<int, Frame>& frames) {
  out << kFramesHeader << '\n';
  for (const auto& [index, frame] : frames) {
    for (const auto& obs : frame.observations) {
      const auto& y = obs.measurement;
      const auto& q = obs.covariance;
      out << index << ',' << obs.landmark_id << ',' << format_double(y(0)) << ','
          << format_double(y(1)) << ',' << format_double(y(2)) << ',' << format_double(q(0, 0))
          << ',' << format_double(q(0, 1)) << ',' << format_double(q(0, 2)) << ','
          << format_double(q(1, 1)) << ',' << format_double(q(1, 2)) << ','
          << format_double(q(2, 2)) << '\n';
    }
  }
}

std::map<int, Frame> read_frames(std::istream& in) {
  std::map<int, Frame> frames;
  read_csv(in, kFramesHeader, 11, [&](const std::vector<std::string_view>& f) {
    Observation obs;
    const int index = parse_int32(f[0]);
    obs.landmark_id = parse_int32(f[1]);
    obs.measurement = {parse_double(f[2]), parse_double(f[3]), parse_double(f[4])};
    const double q11 = parse_double(f[5]), q12 = parse_double(f[6]), q13 = parse_double(f[7]);
    const double q22 = parse_double(f[8]), q23 = parse_double(f[9]), q33 = parse_double(f[10]);
    obs.covariance << q11, q12, q13, q12, q22, q23, q13, q23, q33;
    if (!obs.measurement.allFinite() || !obs.covariance.allFinite()) {
      throw Error(ErrorCode::FormatError, "non-finite observation");
    }
    frames[index].observations.push_back(obs);
  });
  return frames;
}

std::map<int, Frame> read_frames(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_frames(in);
}

std::map<int, Pose> read_poses(std::istream& in) {
  std::map<int, Pose> poses;
  read_csv(in, kPosesHeader, 7, [&](const std::vector<std::string_view>& f) {
    const int index = parse_int32(f[0]);
    Pose pose;
    pose.translation = {parse_double(f[1]), parse_double(f[2]), parse_double(f[3])};
    const Eigen::Vector3d rv(parse_double(f[4]), parse_double(f[5]), parse_double(f[6]));
    if (!pose.translation.allFinite() || !rv.allFinite()) {
      throw Error(ErrorCode::FormatError, "non-finite pose");
    }
    pose.rotation = so3_exp(rv);
    if (!poses.emplace(index, pose).second) {
      throw Error(ErrorCode::FormatError, "duplicate pose for frame " + std::to_string(index));
    }
  });
  return poses;
}

std::map<int, Pose> read_poses(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_poses(in);
}

void write_reports(std::ostream& out, const std::map<int, IntegrityReport>& reports) {
  out << kReportsHeader << '\n';
  for (const auto& [index, r] : reports) {
    const bool monitored = is_monitored(r.status);
    for (const Axis axis : kAxes) {
      const auto& level = r.protection[static_cast<std::size_t>(axis)];
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out << index << ',' << to_string(r.status) << ',' << format_double(r.lambda) << ','
          << format_double(r.delta) << ',' << r.inlier_ids.size() << ',' << r.outlier_ids.size()
          << ',' << format_double(r.pose.translation.x()) << ','
          << format_double(r.pose.translation.y()) << ','
          << format_double(r.pose.translation.z()) << ',' << to_string(axis) << ','
          << format_double(monitored ? level.fault_error : nan) << ','
          << format_double(monitored ? level.noise_error : nan) << ','
          << format_double(monitored ? level.level : nan) << ','
          << (monitored ? level.worst_landmark_id : kUnknownLandmark) << '\n';
    }
  }
}

std::string_view to_string(BoundMethod method) {
  return method == BoundMethod::ProtectionLevel ? "pl" : "three_sigma";
}

const MethodSummary& SummaryReport::find(Axis axis, BoundMethod method) const {
  for (const auto& row : rows) {
    if (row.axis == axis && row.method == method) return row;
  }
  throw Error(ErrorCode::EmptySampleSet, "no summary for axis " + std::string(to_string(axis)));
}

SummaryReport summarize(std::span<const FrameLogRecord> records, const RbtConfig& config) {
  std::vector<FrameLogRecord> rows;
  for (const auto& r : records) {
    if (is_monitored(r.status)) rows.push_back(r);
  }
  if (rows.empty()) throw Error(ErrorCode::EmptySampleSet, "no monitored frames to summarize");
  // Canonical order keeps floating-point sums independent of input order.
  const auto key = [](const FrameLogRecord& r) {
    return std::make_tuple(static_cast<int>(r.axis), r.frame, r.error, r.pl, r.three_sigma,
                           r.sigma);
  };
  std::sort(rows.begin(), rows.end(),
            [&](const FrameLogRecord& a, const FrameLogRecord& b) { return key(a) < key(b); });

  SummaryReport report;
  report.tau = config.resolved_tau();
  for (const Axis axis : kAxes) {
    for (const BoundMethod method : {BoundMethod::ProtectionLevel, BoundMethod::ThreeSigma}) {
      std::vector<BoundSample> samples;
      for (const auto& r : rows) {
        if (r.axis != axis) continue;
        const double bound = method == BoundMethod::ProtectionLevel ? r.pl : r.three_sigma;
        samples.push_back({bound, std::abs(r.error), r.sigma});
      }
      if (samples.empty()) continue;

      MethodSummary summary{axis, method, 0.0, rbt(samples, report.tau), samples.size()};
      std::vector<double> diffs;
      diffs.reserve(samples.size());
      std::size_t bounded = 0;
      for (const auto& s : samples) {
        if (s.bound >= s.error) ++bounded;
        diffs.push_back(s.bound - s.error);
      }
      summary.bounding_rate = static_cast<double>(bounded) / static_cast<double>(samples.size());
      report.rows.push_back(summary);

      std::sort(diffs.begin(), diffs.end());
      for (std::size_t i = 0; i < diffs.size(); ++i) {
        report.cdf.push_back({method, axis, diffs[i],
                              static_cast<double>(i + 1) / static_cast<double>(diffs.size())});
      }
    }
  }
  return report;
}

void write_summary(std::ostream& out, const SummaryReport& summary) {
  out << kSummaryHeader << '\n';
  for (const auto& r : summary.rows) {
    out << to_string(r.axis) << ',' << to_string(r.method) << ',' << format_double(r.bounding_rate)
        << ',' << format_double(r.rbt) << ',' << r.n << '\n';
  }
}

void write_cdf(std::ostream& out, const SummaryReport& summary) {
  out << kCdfHeader << '\n';
  for (const auto& p : summary.cdf) {
    out << to_string(p.method) << ',' << to_string(p.axis) << ',' << format_double(p.diff) << ','
        << format_double(p.cum_fraction) << '\n';
  }
}

namespace {

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  for (const auto item : split(text, ',')) out.push_back(parse_double(item));
  return out;
}

std::vector<Pose> parse_trajectory(std::string_view text) {
  if (text == "static") return {};
  std::vector<Pose> poses;
  for (const auto item : split(text, ';')) {
    if (item.empty()) continue;
    const auto v = parse_list(item);
    if (v.size() != 6) {
      throw Error(ErrorCode::FormatError, "trajectory waypoints need 6 values: x,y,z,rx,ry,rz");
    }
    Pose pose;
    pose.translation = {v[0], v[1], v[2]};
    pose.rotation = so3_exp(Eigen::Vector3d(v[3], v[4], v[5]));
    poses.push_back(pose);
  }
  if (poses.empty()) throw Error(ErrorCode::FormatError, "empty trajectory");
  return poses;
}

bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error(ErrorCode::FormatError, "expected true or false, got '" + std::string(text) + "'");
}

std::uint64_t parse_seed(std::string_view text) {
  std::uint64_t value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::FormatError, "malformed seed '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  auto& sc = cfg.scenario;
  auto& det = cfg.detection;
  auto& sol = cfg.solver;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) format_error(line_no, "expected 'key = value'");
    const std::string key(trim(text.substr(0, eq)));
    const std::string_view value = trim(text.substr(eq + 1));
    if (!seen.insert(key).second) format_error(line_no, "duplicate key '" + key + "'");
    try {
      if (key == "seed") sc.seed = parse_seed(value);
      else if (key == "n_landmarks") sc.n_landmarks = parse_int32(value);
      else if (key == "depth_min") sc.depth_min = parse_double(value);
      else if (key == "depth_max") sc.depth_max = parse_double(value);
      else if (key == "n_frames") sc.n_frames = parse_int32(value);
      else if (key == "trajectory") sc.waypoints = parse_trajectory(value);
      else if (key == "pixel_sigma_base") sc.pixel_sigma_base = parse_double(value);
      else if (key == "sigma_levels") sc.sigma_levels = parse_list(value);
      else if (key == "outlier_rate") sc.outlier_rate = parse_double(value);
      else if (key == "outlier_min") sc.outlier_min = parse_double(value);
      else if (key == "outlier_max") sc.outlier_max = parse_double(value);
      else if (key == "fu") sc.intrinsics.fu = parse_double(value);
      else if (key == "fv") sc.intrinsics.fv = parse_double(value);
      else if (key == "cu") sc.intrinsics.cu = parse_double(value);
      else if (key == "cv") sc.intrinsics.cv = parse_double(value);
      else if (key == "baseline") sc.intrinsics.baseline = parse_double(value);
      else if (key == "p_fa") det.false_alarm_probability = parse_double(value);
      else if (key == "k_sigma") det.k_sigma = parse_double(value);
      else if (key == "min_inlier_count") det.min_inlier_count = parse_int32(value);
      else if (key == "max_ipsor_rounds") det.max_ipsor_rounds = parse_int32(value);
      else if (key == "ipsor_update") det.ipsor_update = parse_ipsor_update(value);
      else if (key == "huber_threshold") sol.huber_threshold = parse_double(value);
      else if (key == "robust") sol.robust = parse_bool(value);
      else if (key == "max_iterations") sol.max_iterations = parse_int32(value);
      else if (key == "convergence_tol") sol.convergence_tol = parse_double(value);
      else if (key == "min_depth") sol.min_depth = parse_double(value);
      else format_error(line_no, "unknown key '" + key + "'");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::FormatError) throw;
      if (std::string_view(e.what()).starts_with("line ")) throw;
      format_error(line_no, e.what());
    }
  }
  try {
    sc.validate();
    det.validate();
    sol.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_config(in);
}

}  // namespace vio_integrity
