#include "vio_integrity/metrics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vio_integrity/error.hpp"

namespace vio_integrity {
namespace {

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::InvalidProbability,
                "probability must lie strictly between 0 and 1, got " + std::to_string(p));
  }
}

template <typename F>
double integrate(F f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
}

// Upper integration limit standing in for +infinity under a unit Gaussian.
constexpr double kTailSpan = 14.0;

}  // namespace

double chi2_cdf(double x, int dof) {
  if (dof < 1) throw Error(ErrorCode::InvalidArgument, "chi-squared dof must be >= 1");
  if (std::isnan(x)) return x;
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(int dof, double p) {
  if (dof < 1) throw Error(ErrorCode::InvalidArgument, "chi-squared dof must be >= 1");
  check_probability(p);
  // Bracket geometrically, then refine with TOMS 748 on the regularized
  // lower incomplete gamma function.
  const auto residual = [&](double x) { return chi2_cdf(x, dof) - p; };
  double hi = std::max(1.0, static_cast<double>(dof));
  while (residual(hi) < 0.0) hi *= 2.0;
  double lo = hi / 2.0;
  while (lo > 1e-300 && residual(lo) > 0.0) lo /= 2.0;
  if (residual(lo) > 0.0) lo = 0.0;

  std::uintmax_t max_iter = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(52);
  const auto [a, b] = boost::math::tools::toms748_solve(residual, lo, hi, tol, max_iter);
  return 0.5 * (a + b);
}

double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double gaussian_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double gaussian_quantile(double p) {
  check_probability(p);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double max_eig_3x3_pair(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::LLT<Eigen::Matrix3d> llt(b);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
  }
  const Eigen::Matrix3d l = llt.matrixL();
  // c = L^-1 a L^-T, symmetric and similar to a b^-1.
  Eigen::Matrix3d c = l.triangularView<Eigen::Lower>().solve(a);
  c = l.triangularView<Eigen::Lower>().solve(c.transpose().eval());
  c = 0.5 * (c + c.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(c, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

double RbtConfig::resolved_tau() const {
  if (tau) {
    if (!(*tau >= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must be >= 1");
    return *tau;
  }
  return solve_tau(detection_probability);
}

double ideal_bound(double detection_probability) {
  check_probability(detection_probability);
  return gaussian_quantile(1.0 - (1.0 - detection_probability) / 2.0);
}

double rbt(std::span<const BoundSample> samples, double tau) {
  if (samples.empty()) throw Error(ErrorCode::EmptySampleSet, "RBT needs at least one sample");
  if (!(tau >= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must be >= 1");
  double sum = 0.0;
  for (const auto& s : samples) {
    if (!(s.sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be > 0");
    const double gap = (s.bound - s.error) / s.sigma;
    const double weight = s.bound >= s.error ? 1.0 : tau;
    sum += weight * gap * gap;
  }
  return std::sqrt(sum / static_cast<double>(samples.size()));
}

// |e| is half-normal with density 2 phi(e) on [0, inf).
double expected_rbt_objective(double bound, double tau) {
  const double held = integrate(
      [bound](double e) { return (bound - e) * (bound - e) * 2.0 * gaussian_pdf(e); }, 0.0,
      bound);
  const double lower = std::max(bound, 0.0);
  const double failed = integrate(
      [bound](double e) { return (e - bound) * (e - bound) * 2.0 * gaussian_pdf(e); }, lower,
      lower + kTailSpan);
  return held + tau * failed;
}

double expected_rbt_slope(double bound, double tau) {
  // The weight switches where the integrand vanishes, so no boundary terms.
  const double held =
      integrate([bound](double e) { return (bound - e) * 2.0 * gaussian_pdf(e); }, 0.0, bound);
  const double lower = std::max(bound, 0.0);
  const double failed = integrate(
      [bound](double e) { return (e - bound) * 2.0 * gaussian_pdf(e); }, lower,
      lower + kTailSpan);
  return 2.0 * (held - tau * failed);
}

double solve_tau(double detection_probability) {
  check_probability(detection_probability);
  const double target = ideal_bound(detection_probability);
  const auto slope = [target](double tau) { return expected_rbt_slope(target, tau); };

  // The slope is affine and decreasing in tau; a root with tau >= 1 exists
  // only if the slope is still non-negative at tau = 1.
  if (slope(1.0) < 0.0) {
    throw Error(ErrorCode::NoSolution,
                "no tau >= 1 makes the ideal bound optimal for p_d = " +
                    std::to_string(detection_probability));
  }
  double hi = 2.0;
  while (slope(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e300) throw Error(ErrorCode::NoSolution, "tau bracket diverged");
  }
  std::uintmax_t max_iter = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(50);
  const auto [a, b] = boost::math::tools::toms748_solve(slope, 1.0, hi, tol, max_iter);
  return 0.5 * (a + b);
}

double rbt_grid_minimizer(double tau, double upper, double step) {
  if (!(step > 0.0) || !(upper > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "grid needs positive upper limit and step");
  }
  double best_bound = 0.0;
  double best_value = std::numeric_limits<double>::infinity();
  const auto n = static_cast<long>(std::floor(upper / step));
  for (long i = 0; i <= n; ++i) {
    const double bound = static_cast<double>(i) * step;
    const double value = expected_rbt_objective(bound, tau);
    if (value < best_value) {
      best_value = value;
      best_bound = bound;
    }
  }
  return best_bound;
}

}  // namespace vio_integrity
