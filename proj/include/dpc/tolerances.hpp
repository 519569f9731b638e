#pragma once

#include <optional>

namespace dpc {

/// Every numerical threshold used by the library lives here so that the
/// solver certificates, pruning decisions and verification suites agree.
struct ToleranceConfig {
  double kkt = 1e-7;        // scaled KKT residual bound for certified optima
  double feas = 1e-8;       // feasibility / membership decisions
  double sym = 1e-10;       // Hessian symmetry
  double psd = 1e-8;        // minimum Hessian eigenvalue
  double dup = 1e-10;       // duplicate atom detection
  double pivot = 1e-9;      // simplex pivot magnitude
  double active = 1e-8;     // generator entry counted as used
  double interior = 1e-9;   // Chebyshev radius for a full-dimensional region
  double span = 1e-8;       // least-squares span pre-check, relative to 1+|w|
  double complementarity = 1e-10;
  /// Absolute singular-value threshold for numeric_rank. When unset the
  /// default max(rows, cols) * eps * sigma_max rule applies.
  std::optional<double> rank_threshold;
};

/// Shared default instance.
inline const ToleranceConfig& default_tolerances() {
  static const ToleranceConfig tol{};
  return tol;
}

}  // namespace dpc
