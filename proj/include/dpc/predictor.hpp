#pragma once

// Implicit predictor of 1-norm regularized DPC on pruned data:
//
//   min_{y, a±}  |y|_Q^2 + lambda * 1'a±
//   s.t.         Z̄± a± = z,  Ȳ± a± = y,  a± >= 0,       z = (xi; u)
//
// solved pointwise, or explicitly as a piecewise affine map over critical
// regions by enumerating supports of a±.

#include "dpc/execution.hpp"
#include "dpc/numsolve.hpp"
#include "dpc/ocp.hpp"
#include "dpc/trajdata.hpp"

#include <nlohmann/json_fwd.hpp>

#include <vector>

namespace dpc {

struct PredictorSpec {
  DataDictionary dict;   // pruned data matrix D̄
  Matrix output_weight;  // Q, strictly positive definite
  double lambda = 1.0;

  /// Throws if Q is not positive definite (y* must be unique) or lambda <= 0.
  void validate(const ToleranceConfig& tol = default_tolerances()) const;
  [[nodiscard]] Index z_dim() const { return dict.z_dim(); }
  [[nodiscard]] Index y_dim() const { return dict.dims().output_rows(); }
  /// Number of mirrored atoms, 2 * columns.
  [[nodiscard]] Index atoms() const { return 2 * dict.columns(); }
};

/// Matrices of the parametric program in s = (y, a±):
///   min 1/2 s'Hs + f's  s.t.  A s <= 0,  G s = E z.
struct MpqpForm {
  Matrix hessian;  // blkdiag(2Q, 0)
  Vector linear;   // (0, lambda * 1)
  Matrix ineq;     // (0  -I)
  Matrix eq;       // [[0, Z̄±]; [-I, Ȳ±]]
  Matrix param;    // E = (I; 0)

  static MpqpForm build(const PredictorSpec& spec);
};

/// s = particular * z + nullspace * alpha parametrizes {s : G s = E z}.
struct ReducedMpqpForm {
  Matrix nullspace;   // orthonormal basis of ker(G)
  Matrix particular;  // G^+ E

  static ReducedMpqpForm build(const MpqpForm& form);
};

struct PointwiseResult {
  Vector y;
  Vector a_pm;
  std::vector<Index> active_set;  // a± entries at zero
  std::vector<Index> support;     // a± entries in use
  SolveResult certificate;

  /// Full decision vector s = (y, a±).
  [[nodiscard]] Vector decision() const;
};

/// Entries counted as used: a_i > tol.active * max(1, |a|_inf).
std::vector<Index> generator_support(const Vector& a_pm, const ToleranceConfig& tol = default_tolerances());

PointwiseResult predict_pointwise(const PredictorSpec& spec, const Vector& z,
                                  const ToleranceConfig& tol = default_tolerances());

struct CriticalRegion {
  Matrix C;  // unit-norm rows
  Vector d;
  Matrix F;  // y = F z + g
  Vector g;
  Matrix generator_gain;    // a± = generator_gain * z + generator_offset
  Vector generator_offset;
  std::vector<Index> active_set;
  std::vector<Index> support;
  Vector chebyshev_center;
  double chebyshev_radius = 0.0;

  [[nodiscard]] bool contains(const Vector& z, double tol) const;
  [[nodiscard]] Vector predict(const Vector& z) const { return F * z + g; }
};

struct PwaFunction {
  std::vector<CriticalRegion> regions;
  Index z_dim = 0;
  Index y_dim = 0;
  Index atoms = 0;
  double lambda = 0.0;
  Matrix output_weight;
  Box param_box;
  bool complete = true;          // false when the candidate budget ran out
  Index candidates_examined = 0;
};

struct EnumerationOptions {
  Index max_candidates = 2'000'000;
  Execution exec = Execution::parallel;
};

/// Number of candidate supports the enumeration visits: sign-consistent
/// subsets of the mirrored atoms with nz <= |S| <= rows(D).
double candidate_support_count(const PredictorSpec& spec);

/// Explicit predictor over a bounded parameter box.
PwaFunction enumerate_pwa(const PredictorSpec& spec, const Box& param_box,
                          const ToleranceConfig& tol = default_tolerances(), const EnumerationOptions& options = {});

struct PwaValue {
  Vector y;
  Index region = -1;
};

/// Indices of regions containing z (slack tol * (1 + |d_k|)).
std::vector<Index> containing_regions(const PwaFunction& pwa, const Vector& z, double tol = 1e-8);

/// Lowest-index containing region. Throws Error{uncovered} if none.
PwaValue evaluate_pwa(const PwaFunction& pwa, const Vector& z, double tol = 1e-8);

struct ScalingReport {
  double eta = 1.0;
  Index probes = 0;
  Index active_set_violations = 0;
  Index optimizer_violations = 0;
  double max_optimizer_deviation = 0.0;  // |s*_{eta lambda}(eta z) - eta s*_lambda(z)|_inf
  std::vector<Index> violating_probes;
  [[nodiscard]] bool passed() const { return active_set_violations == 0 && optimizer_violations == 0; }
};

/// Paired pointwise solves at (z, lambda) and (eta z, eta lambda) for each probe column.
ScalingReport verify_scaling(const PredictorSpec& spec, double eta, const Matrix& probes, double tol_opt = 1e-6,
                             const ToleranceConfig& tol = default_tolerances(), Execution exec = Execution::parallel);

struct SymmetryReport {
  Index probes = 0;
  double max_deviation = 0.0;  // max |y(z) + y(-z)|_inf
  double origin_norm = 0.0;    // |y(0)|_inf
  [[nodiscard]] bool passed(double tol = 1e-6) const { return max_deviation <= tol; }
};

SymmetryReport verify_symmetry(const PredictorSpec& spec, const Matrix& probes,
                               const ToleranceConfig& tol = default_tolerances(), Execution exec = Execution::parallel);

struct RegionMatchReport {
  Index regions = 0;
  Index unmatched = 0;
  std::vector<Index> unmatched_regions;  // indices into the first argument
  [[nodiscard]] bool passed() const { return unmatched == 0; }
};

/// Every region has a partner with H-rep {z : -Cz <= d}, F' = F, g' = -g.
RegionMatchReport check_negated_pairing(const PwaFunction& pwa, double tol = 1e-7);

/// Every region of `scaled` equals eta times a region of `base` (same
/// support, C' = C, d' = eta d, F' = F, g' = eta g), and vice versa.
RegionMatchReport compare_scaled_regions(const PwaFunction& base, const PwaFunction& scaled, double eta,
                                         double tol = 1e-7);

nlohmann::json to_json(const PwaFunction& pwa);

}  // namespace dpc
