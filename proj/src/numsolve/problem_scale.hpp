#pragma once

#include "dpc/numsolve.hpp"

#include <algorithm>
#include <cmath>

namespace dpc::detail {

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs_finite(const Vector& v) {
  double out = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) out = std::max(out, std::abs(v(i)));
  }
  return out;
}

inline double constraint_scale(const LinearConstraints& c) {
  return std::max({max_abs(c.ineq_matrix), max_abs(c.ineq_rhs), max_abs(c.eq_matrix),
                   max_abs(c.eq_rhs), max_abs_finite(c.lower)});
}

/// 1 + largest absolute entry of the problem data.
inline double problem_scale(const LinearProgram& lp) {
  return 1.0 + std::max(max_abs(lp.cost), constraint_scale(lp.constraints));
}

inline double problem_scale(const QuadraticProgram& qp) {
  return 1.0 + std::max({max_abs(qp.hessian), max_abs(qp.linear), constraint_scale(qp.constraints)});
}

}  // namespace dpc::detail
