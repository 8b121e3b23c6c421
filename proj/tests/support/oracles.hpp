#pragma once

// Reference computations used only by tests. None of these call into the
// library routine they are used to check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// Upper tail of the chi-squared distribution for integer dof, from the
/// closed-form Poisson / erfc series. Terms are summed in log space.
inline double chi2_upper_tail(double x, int dof) {
  if (x <= 0.0) return 1.0;
  const double h = 0.5 * x;
  double sum = 0.0;
  if (dof % 2 == 0) {
    for (int i = 0; i < dof / 2; ++i) {
      sum += std::exp(-h + i * std::log(h) - std::lgamma(i + 1.0));
    }
    return sum;
  }
  for (int i = 1; i <= (dof - 1) / 2; ++i) {
    sum += std::exp(-h + (i - 0.5) * std::log(h) - std::lgamma(i + 0.5));
  }
  return std::erfc(std::sqrt(h)) + sum;
}

inline double chi2_cdf(double x, int dof) { return 1.0 - chi2_upper_tail(x, dof); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Composite Simpson rule with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int intervals = 20000) {
  if (b <= a) return 0.0;
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

/// Root of a monotone increasing function by bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iterations = 200) {
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// chi-squared(3) CDF by quadrature of the density after x = t^2.
inline double chi2_3_cdf_by_quadrature(double x) {
  if (x <= 0.0) return 0.0;
  const double norm = std::pow(2.0, 1.5) * std::tgamma(1.5);
  return simpson([&](double t) { return 2.0 * t * t * std::exp(-0.5 * t * t) / norm; }, 0.0,
                 std::sqrt(x), 40000);
}

/// Expected RBT objective E[w (bound - |e|)^2], e ~ N(0, 1), by Simpson.
inline double expected_rbt(double bound, double tau) {
  const auto held = [&](double e) { return (bound - e) * (bound - e) * 2.0 * normal_pdf(e); };
  const auto failed = [&](double e) { return (e - bound) * (e - bound) * 2.0 * normal_pdf(e); };
  return simpson(held, 0.0, std::max(bound, 0.0), 2000) +
         tau * simpson(failed, std::max(bound, 0.0), std::max(bound, 0.0) + 15.0, 4000);
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

/// Real roots of x^3 + a x^2 + b x + c when all three are real (trigonometric
/// form), largest first.
inline std::vector<double> cubic_real_roots(double a, double b, double c) {
  const double q = (a * a - 3.0 * b) / 9.0;
  const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  std::vector<double> roots;
  if (q <= 0.0) {
    roots.push_back(std::cbrt(-r) - a / 3.0);
    return roots;
  }
  const double ratio = std::clamp(r / std::sqrt(q * q * q), -1.0, 1.0);
  const double theta = std::acos(ratio);
  const double s = -2.0 * std::sqrt(q);
  for (int k = 0; k < 3; ++k) {
    roots.push_back(s * std::cos((theta + 2.0 * std::numbers::pi * k) / 3.0) - a / 3.0);
  }
  std::sort(roots.rbegin(), roots.rend());
  return roots;
}

/// Largest root of det(A - lambda B) = 0 via the characteristic polynomial
/// of adj(B) A / det(B).
inline double max_generalized_eigenvalue(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  Eigen::Matrix3d adj;
  adj(0, 0) = b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1);
  adj(0, 1) = b(0, 2) * b(2, 1) - b(0, 1) * b(2, 2);
  adj(0, 2) = b(0, 1) * b(1, 2) - b(0, 2) * b(1, 1);
  adj(1, 0) = b(1, 2) * b(2, 0) - b(1, 0) * b(2, 2);
  adj(1, 1) = b(0, 0) * b(2, 2) - b(0, 2) * b(2, 0);
  adj(1, 2) = b(0, 2) * b(1, 0) - b(0, 0) * b(1, 2);
  adj(2, 0) = b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0);
  adj(2, 1) = b(0, 1) * b(2, 0) - b(0, 0) * b(2, 1);
  adj(2, 2) = b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0);
  const double det_b = b(0, 0) * adj(0, 0) + b(0, 1) * adj(1, 0) + b(0, 2) * adj(2, 0);
  const Eigen::Matrix3d m = adj * a / det_b;
  const double tr = m.trace();
  const double minors = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) -
                        m(0, 2) * m(2, 0) + m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                     m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                     m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  return cubic_real_roots(-tr, minors, -det).front();
}

/// max f^T A f subject to f^T B f = delta, by dense direction sampling on
/// the unit sphere (Fibonacci lattice) followed by shrinking local search.
inline double constrained_max(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b, double delta,
                              int lattice = 20000) {
  const auto value = [&](const Eigen::Vector3d& u) {
    return delta * u.dot(a * u) / u.dot(b * u);
  };
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  Eigen::Vector3d best_u(0.0, 0.0, 1.0);
  double best = value(best_u);
  for (int i = 0; i < lattice; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / lattice;
    const double r = std::sqrt(1.0 - z * z);
    const Eigen::Vector3d u(r * std::cos(golden * i), r * std::sin(golden * i), z);
    const double v = value(u);
    if (v > best) {
      best = v;
      best_u = u;
    }
  }
  // Coordinate pattern search in the tangent plane with a shrinking step.
  double step = 0.05;
  while (step > 1e-9) {
    bool improved = false;
    Eigen::Vector3d t1 = best_u.unitOrthogonal();
    Eigen::Vector3d t2 = best_u.cross(t1);
    for (const Eigen::Vector3d& dir : {t1, Eigen::Vector3d(-t1), t2, Eigen::Vector3d(-t2)}) {
      const Eigen::Vector3d cand = (best_u + step * dir).normalized();
      const double v = value(cand);
      if (v > best) {
        best = v;
        best_u = cand;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace oracle
