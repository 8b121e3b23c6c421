#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "vio_integrity/error.hpp"
#include "vio_integrity/harness.hpp"

using namespace vio_integrity;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<FrameLogRecord> random_records(std::mt19937_64& rng, int frames) {
  std::lognormal_distribution<double> ln(-3.0, 1.0);
  std::vector<FrameLogRecord> out;
  for (int f = 0; f < frames; ++f) {
    const bool unsafe = f % 17 == 5;
    for (Axis axis : kAxes) {
      FrameLogRecord r;
      r.frame = f;
      r.axis = axis;
      r.error = ln(rng);
      r.sigma = ln(rng);
      r.three_sigma = 3.0 * r.sigma;
      r.pl = unsafe ? kNan : 9.0 * r.sigma;
      r.status = unsafe ? IntegrityStatus::Unsafe
                        : (f % 3 ? IntegrityStatus::Nominal : IntegrityStatus::OutliersExcluded);
      out.push_back(r);
    }
  }
  return out;
}

FrameLogRecord row(int frame, Axis axis, double error, double pl, double sigma) {
  return {frame, axis, error, pl, 3.0 * sigma, sigma, IntegrityStatus::Nominal};
}

}  // namespace

TEST(Harness, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
  EXPECT_EQ(format_double(kNan), "nan");
  EXPECT_TRUE(std::isnan(parse_double("nan")));
  EXPECT_EQ(parse_double("-inf"), -std::numeric_limits<double>::infinity());
  EXPECT_THROW(parse_double("1.0x"), Error);
  EXPECT_THROW(parse_double(""), Error);
  EXPECT_THROW(parse_integer("3.5"), Error);
}

TEST(Harness, TrialsRoundTripIsLossless) {
  std::mt19937_64 rng(2);
  const auto records = random_records(rng, 100);
  std::stringstream first;
  write_trials(first, records);
  const auto back = read_trials(first);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_TRUE(back[i].same_as(records[i])) << i;
  std::stringstream second;
  write_trials(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(Harness, MalformedTrialsAreRejectedWithLineNumbers) {
  const std::string header = std::string(kTrialsHeader) + "\n";
  const auto expect_format_error = [](const std::string& text, const std::string& fragment) {
    std::istringstream in(text);
    try {
      read_trials(in);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::FormatError);
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_format_error("", "missing header");
  expect_format_error("frame,axis\n", "expected header");
  expect_format_error(header + "0,x,1,2,3,1\n", "line 2");
  expect_format_error(header + "0,w,1,2,3,1,nominal\n", "unknown axis");
  expect_format_error(header + "0,x,1,2,3,1,nominal\n0,x,abc,2,3,1,nominal\n", "line 3");
  expect_format_error(header + "0,x,nan,2,3,1,nominal\n", "non-finite");
  expect_format_error(header + "0,x,1,2,3,0,nominal\n", "sigma");
  expect_format_error(header + "0,x,1,2,3,1,ok\n", "line 2");
  std::istringstream ok(header + "0,x,nan,nan,nan,nan,unmonitorable\n");
  EXPECT_EQ(read_trials(ok).size(), 1u);
}

TEST(Harness, SummaryHandExample) {
  const std::vector<FrameLogRecord> rows{
      row(0, Axis::X, 1.0, 4.0, 1.0),  // pl gap 3, 3-sigma gap 2
      row(1, Axis::X, 4.0, 5.0, 1.0),  // pl gap 1, 3-sigma fails by 1
      {2, Axis::X, 9.0, kNan, 1.0, 1.0, IntegrityStatus::Unsafe},
  };
  RbtConfig cfg;
  cfg.tau = 10.0;
  const SummaryReport s = summarize(rows, cfg);
  ASSERT_EQ(s.rows.size(), 2u);
  const MethodSummary& pl = s.find(Axis::X, BoundMethod::ProtectionLevel);
  const MethodSummary& ts = s.find(Axis::X, BoundMethod::ThreeSigma);
  EXPECT_EQ(pl.n, 2u);
  EXPECT_DOUBLE_EQ(pl.bounding_rate, 1.0);
  EXPECT_NEAR(pl.rbt, std::sqrt((9.0 + 1.0) / 2.0), 1e-15);
  EXPECT_DOUBLE_EQ(ts.bounding_rate, 0.5);
  EXPECT_NEAR(ts.rbt, std::sqrt((4.0 + 10.0) / 2.0), 1e-15);
  EXPECT_THROW(s.find(Axis::Y, BoundMethod::ThreeSigma), Error);

  std::ostringstream out;
  write_summary(out, s);
  EXPECT_EQ(out.str().substr(0, kSummaryHeader.size()), kSummaryHeader);
  std::ostringstream cdf;
  write_cdf(cdf, s);
  EXPECT_NE(cdf.str().find("three_sigma,x,-1,0.5"), std::string::npos) << cdf.str();
}

TEST(Harness, SummaryIsPermutationInvariant) {
  std::mt19937_64 rng(3);
  auto records = random_records(rng, 200);
  const RbtConfig cfg;
  std::ostringstream a;
  write_summary(a, summarize(records, cfg));
  std::shuffle(records.begin(), records.end(), rng);
  std::ostringstream b;
  write_summary(b, summarize(records, cfg));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Harness, SummaryOfUnmonitoredRowsIsEmpty) {
  const std::vector<FrameLogRecord> rows{
      {0, Axis::X, kNan, kNan, kNan, kNan, IntegrityStatus::Unmonitorable}};
  try {
    summarize(rows, RbtConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySampleSet);
  }
}

TEST(Harness, MapAndFramesRoundTrip) {
  LandmarkMap map;
  map.insert({3, Eigen::Vector3d(0.1, -2.5, 7.0)});
  map.insert({9, Eigen::Vector3d(1.0 / 3.0, 2.0, 11.0)});
  std::stringstream ms;
  write_map(ms, map);
  const LandmarkMap back = read_map(ms);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at(9), map.at(9));

  std::map<int, Frame> frames;
  Observation obs;
  obs.landmark_id = 9;
  obs.measurement = Eigen::Vector3d(300.25, 200.125, 4.5);
  obs.covariance << 1.0, 0.1, 0.0, 0.1, 1.5, 0.2, 0.0, 0.2, 2.0;
  frames[4].observations.push_back(obs);
  obs.landmark_id = 3;
  frames[4].observations.push_back(obs);
  std::stringstream fs;
  write_frames(fs, frames);
  const auto fback = read_frames(fs);
  ASSERT_EQ(fback.count(4), 1u);
  ASSERT_EQ(fback.at(4).size(), 2u);
  EXPECT_EQ(fback.at(4).observations[0].landmark_id, 9);
  EXPECT_EQ(fback.at(4).observations[1].covariance, obs.covariance);

  std::istringstream dup(std::string(kMapHeader) + "\n1,0,0,1\n1,0,0,2\n");
  EXPECT_THROW(read_map(dup), Error);
}

TEST(Harness, PosesAreParsed) {
  std::istringstream in(std::string(kPosesHeader) + "\n2,1,2,3,0,0,1.5707963267948966\n");
  const auto poses = read_poses(in);
  ASSERT_EQ(poses.count(2), 1u);
  EXPECT_EQ(poses.at(2).translation, Eigen::Vector3d(1, 2, 3));
  EXPECT_NEAR(poses.at(2).rotation(1, 0), 1.0, 1e-15);
}

TEST(Harness, ConfigParsing) {
  std::istringstream in(
      "# campaign\n"
      "seed = 7\n"
      "n_frames = 12   # short\n"
      "outlier_rate = 0.1\n"
      "sigma_levels = 1, 2\n"
      "trajectory = 0,0,0,0,0,0; 1,0,0,0,0.1,0\n"
      "p_fa = 0.01\n"
      "ipsor_update = decrement\n"
      "robust = false\n");
  const RunConfig cfg = parse_config(in);
  EXPECT_EQ(cfg.scenario.seed, 7u);
  EXPECT_EQ(cfg.scenario.n_frames, 12);
  EXPECT_EQ(cfg.scenario.sigma_levels, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(cfg.scenario.waypoints.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.detection.false_alarm_probability, 0.01);
  EXPECT_EQ(cfg.detection.ipsor_update, IpsorUpdate::Decrement);
  EXPECT_FALSE(cfg.solver.robust);
}

TEST(Harness, ConfigErrors) {
  const auto expect_error = [](const std::string& text, const std::string& fragment) {
    std::istringstream in(text);
    try {
      parse_config(in);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::FormatError);
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("seed = 1\nbogus = 2\n", "line 2");
  expect_error("seed = 1\nseed = 2\n", "duplicate");
  expect_error("n_frames = ten\n", "line 1");
  expect_error("p_fa = 2\n", "invalid configuration");
  expect_error("just text\n", "line 1");
}
