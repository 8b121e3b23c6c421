#pragma once

namespace vio_integrity {

/// Detection probability matching a 3-sigma Gaussian bound.
inline constexpr double kDefaultDetectionProbability = 0.9973;

/// solve_tau(kDefaultDetectionProbability). Regenerate with
/// `vio_integrity tau --pd 0.9973` or scripts/derive_tau.py; the unit tests
/// check the library still reproduces this value.
inline constexpr double kDefaultTau = 2881.9218925797018;

/// False alarm probability for the residual consistency test.
inline constexpr double kDefaultFalseAlarmProbability = 0.05;

/// Standard deviations used for the noise term of the protection level.
inline constexpr double kDefaultNoiseSigmaMultiplier = 3.0;

/// 0.95 quantile of chi-squared with 3 dof: the per-feature Huber threshold
/// on the weighted squared reprojection error.
inline constexpr double kDefaultHuberThreshold = 7.815;

}  // namespace vio_integrity
