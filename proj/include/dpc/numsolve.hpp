#pragma once

// Dense LP / convex QP solving with independently checkable KKT certificates.
//
// Conventions used throughout the repository:
//   LP:  minimize  c'x
//   QP:  minimize  1/2 x'Hx + f'x
//   subject to     A x <= b,   G x = e,   x >= lower   (lower may hold -inf)
//
// Multipliers follow the Lagrangian
//   L = obj + mu'(Ax - b) + nu'(Gx - e) - rho'(x - lower),   mu, rho >= 0.

#include "dpc/tolerances.hpp"
#include "dpc/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string_view>

namespace dpc {

struct LinearConstraints {
  Matrix ineq_matrix;
  Vector ineq_rhs;
  Matrix eq_matrix;
  Vector eq_rhs;
  Vector lower;

  /// No constraints at all on n free variables.
  static LinearConstraints unconstrained(Index n);

  [[nodiscard]] Index num_vars() const { return lower.size(); }
  /// Throws Error{dimension_mismatch} on inconsistent block shapes.
  void validate() const;
};

struct LinearProgram {
  Vector cost;
  LinearConstraints constraints;

  [[nodiscard]] Index num_vars() const { return cost.size(); }
  void validate() const;
};

struct QuadraticProgram {
  Matrix hessian;
  Vector linear;
  LinearConstraints constraints;

  [[nodiscard]] Index num_vars() const { return linear.size(); }
  /// Shape checks plus symmetry (tol.sym) and PSD (tol.psd) checks.
  void validate(const ToleranceConfig& tol = default_tolerances()) const;

  static QuadraticProgram from_lp(const LinearProgram& lp);
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

std::string_view to_string(SolveStatus s);

struct KktReport {
  double stationarity = 0.0;
  double primal_feasibility = 0.0;
  double complementarity = 0.0;
  double dual_feasibility = 0.0;  // negative parts of mu and rho
  double scale = 1.0;             // 1 + max |problem data|

  /// True when every residual divided by `scale` is at most tol.
  [[nodiscard]] bool within(double tol) const;
  [[nodiscard]] double worst_scaled() const;
};

struct SolveResult {
  SolveStatus status = SolveStatus::numerical_failure;
  Vector primal;
  Vector duals_ineq;
  Vector duals_eq;
  Vector duals_lower;  // zero where the bound is -inf
  double objective = 0.0;
  KktReport kkt;
  int iterations = 0;
  /// Inequality rows (indices into A, then n + j for bound j) held in the
  /// final working set / basis. Used by callers that need the active set.
  std::vector<Index> active_rows;

  [[nodiscard]] bool optimal() const { return status == SolveStatus::optimal; }
};

SolveResult solve_lp(const LinearProgram& lp,
                     const ToleranceConfig& tol = default_tolerances());

SolveResult solve_qp(const QuadraticProgram& qp,
                     const ToleranceConfig& tol = default_tolerances());

/// Recomputes residuals from the problem data and the reported primal/dual
/// vectors only. Never looks at solver internals.
KktReport check_kkt(const QuadraticProgram& qp, const SolveResult& result);
KktReport check_kkt(const LinearProgram& lp, const SolveResult& result);

/// Dual objective -b'mu - e'nu + lower'rho of an LP (finite bounds only).
double lp_dual_objective(const LinearProgram& lp, const SolveResult& result);

struct RankPolicy {
  /// Absolute singular value threshold; overrides the default rule.
  std::optional<double> absolute;
};

/// Count of singular values above max(rows, cols) * eps * sigma_max, or
/// above the policy's absolute threshold when given.
Index numeric_rank(const Matrix& m, const RankPolicy& policy = {});

/// Orthonormal basis of ker(m), computed from a full SVD.
Matrix null_space(const Matrix& m, double rel_tol = 1e-10);

// Debug serialization for failure triage. Not a stable format.
nlohmann::json to_json(const LinearProgram& lp);
nlohmann::json to_json(const QuadraticProgram& qp);
nlohmann::json to_json(const SolveResult& r);

}  // namespace dpc
