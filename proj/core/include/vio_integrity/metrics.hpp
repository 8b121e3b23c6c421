#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>

namespace vio_integrity {

// Central chi-squared distribution.
double chi2_cdf(double x, int dof);
/// Inverse of chi2_cdf. Throws InvalidProbability unless 0 < p < 1 and
/// InvalidArgument for dof < 1.
double chi2_quantile(int dof, double p);

// Standard normal distribution.
double gaussian_cdf(double x);
double gaussian_pdf(double x);
double gaussian_quantile(double p);

/// Largest eigenvalue of a * inverse(b) for symmetric PSD `a` and SPD `b`.
///
/// Solved as the symmetric problem L^-1 a L^-T with b = L L^T, so the result
/// is real. Tiny negative values produced by rounding are clamped to zero.
/// Throws NotPositiveDefinite if the Cholesky factorization of `b` fails.
double max_eig_3x3_pair(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

/// One (bound, error, sigma) observation for the relaxed bound tightness
/// metric. `error` is a magnitude.
struct BoundSample {
  double bound = 0.0;
  double error = 0.0;
  double sigma = 1.0;
};

struct RbtConfig {
  double detection_probability = 0.9973;
  /// Overrides the penalty derived from detection_probability.
  std::optional<double> tau;

  double resolved_tau() const;
};

/// Bound that exactly meets the detection probability for a zero-mean unit
/// Gaussian error: inverse_cdf(1 - (1 - p_d) / 2).
double ideal_bound(double detection_probability);

/// Relaxed bound tightness:
///   sqrt( sum_i w_i ((bound_i - error_i) / sigma_i)^2 / n ),
/// with w_i = 1 when the bound holds and w_i = tau when it fails.
double rbt(std::span<const BoundSample> samples, double tau);

/// E[ w (bound - |e|)^2 ] for e ~ N(0, 1), evaluated by quadrature.
double expected_rbt_objective(double bound, double tau);

/// d/d(bound) of expected_rbt_objective.
double expected_rbt_slope(double bound, double tau);

/// Penalty tau for which the constant bound ideal_bound(p_d) minimizes the
/// expected RBT objective under unit Gaussian errors. Throws NoSolution when
/// the stationarity condition has no root with tau >= 1.
double solve_tau(double detection_probability);

/// Argmin of expected_rbt_objective over a uniform grid on [0, upper].
double rbt_grid_minimizer(double tau, double upper, double step);

}  // namespace vio_integrity
