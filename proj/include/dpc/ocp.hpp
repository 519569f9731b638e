#pragma once

// Regularized data-driven predictive control problem
//
//   min  |y - y_ref|_Q^2 + |u - u_ref|_R^2 + lambda * 1'a±
//   s.t. (xi; u; y) = D± a±,  a± >= 0,  u in U,  y in Y
//
// with decision vector (u, y, a±). lambda = 0 switches to a signed,
// unconstrained a and must be requested explicitly.

#include "dpc/execution.hpp"
#include "dpc/numsolve.hpp"
#include "dpc/trajdata.hpp"

#include <nlohmann/json_fwd.hpp>

#include <vector>

namespace dpc {

/// Per-entry interval bounds; +-inf allowed.
struct Box {
  Vector lower;
  Vector upper;

  static Box unbounded(Index n);
  [[nodiscard]] Index size() const { return lower.size(); }
  void validate(Index n, const char* what) const;
};

/// Array of [lower, upper] pairs; "inf" / "-inf" strings allowed.
Box box_from_json(const nlohmann::json& j, const char* what = "box");

struct OcpSpec {
  DataDictionary dict;
  Matrix output_weight;  // Q, pN x pN
  Matrix input_weight;   // R, mN x mN
  Vector input_ref;      // u_ref, mN
  Vector output_ref;     // y_ref, pN
  double lambda = 0.0;
  bool allow_unregularized = false;
  Box input_box;
  Box output_box;

  /// Zero references and unbounded boxes.
  static OcpSpec make(DataDictionary dict, Matrix output_weight, Matrix input_weight, double lambda);

  void validate(const ToleranceConfig& tol = default_tolerances()) const;
  [[nodiscard]] bool regularized() const { return lambda > 0.0; }
};

struct OcpLayout {
  RowRange u, y, a;
  Index num_vars = 0;
};

OcpLayout ocp_layout(const OcpSpec& spec);

struct CostSplit {
  double tracking = 0.0;        // |y - y_ref|_Q^2
  double input = 0.0;           // |u - u_ref|_R^2
  double regularization = 0.0;  // lambda * 1'a±
  [[nodiscard]] double total() const { return tracking + input + regularization; }
};

struct OcpSolution {
  Vector u;
  Vector y;
  Vector a_pm;   // (a+, a-), empty when unregularized
  Vector a;      // signed combination
  double cost = 0.0;
  CostSplit split;
  SolveResult certificate;
};

/// QP in the variables (u, y, a±). The constant |u_ref|_R^2 is dropped.
QuadraticProgram assemble_ocp(const OcpSpec& spec, const Vector& xi);

/// Certified solve. Throws Error{infeasible|unbounded|numerical}.
OcpSolution solve_ocp(const OcpSpec& spec, const Vector& xi, const ToleranceConfig& tol = default_tolerances());

/// Solves for each column of `xis`; results in column order.
std::vector<OcpSolution> solve_ocp_batch(const OcpSpec& spec, const Matrix& xis,
                                         const ToleranceConfig& tol = default_tolerances(),
                                         Execution exec = Execution::parallel);

/// a = a+ - a-. Throws if some a+_i * a-_i exceeds `tol`.
Vector recover_signed(const Vector& a_pm, double tol = 1e-10);

/// First input block u*_0 of the optimal sequence.
Vector receding_horizon_step(const OcpSpec& spec, const Vector& xi,
                             const ToleranceConfig& tol = default_tolerances());

/// Reads weights, references, boxes and lambda; keys not in the schema are rejected.
OcpSpec ocp_spec_from_json(const nlohmann::json& j, DataDictionary dict);
nlohmann::json to_json(const OcpSolution& s);

}  // namespace dpc
