#include "dpc/numsolve.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace dpc {

LinearConstraints LinearConstraints::unconstrained(Index n) {
  LinearConstraints c;
  c.ineq_matrix = Matrix::Zero(0, n);
  c.ineq_rhs = Vector::Zero(0);
  c.eq_matrix = Matrix::Zero(0, n);
  c.eq_rhs = Vector::Zero(0);
  c.lower = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  return c;
}

void LinearConstraints::validate() const {
  const Index n = lower.size();
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::dimension_mismatch, msg); };
  if (ineq_matrix.cols() != n) fail("inequality matrix column count does not match variable count");
  if (ineq_matrix.rows() != ineq_rhs.size()) fail("inequality matrix rows do not match rhs length");
  if (eq_matrix.cols() != n) fail("equality matrix column count does not match variable count");
  if (eq_matrix.rows() != eq_rhs.size()) fail("equality matrix rows do not match rhs length");
  for (Index j = 0; j < n; ++j) {
    if (std::isnan(lower(j)) || lower(j) == std::numeric_limits<double>::infinity())
      fail("lower bound must be finite or -inf");
  }
  if (!ineq_matrix.allFinite() || !ineq_rhs.allFinite() || !eq_matrix.allFinite() || !eq_rhs.allFinite())
    throw Error(ErrorKind::invalid_argument, "constraint data contains non-finite entries");
}

void LinearProgram::validate() const {
  if (constraints.num_vars() != cost.size())
    throw Error(ErrorKind::dimension_mismatch, "cost length does not match constraint columns");
  if (!cost.allFinite()) throw Error(ErrorKind::invalid_argument, "cost contains non-finite entries");
  constraints.validate();
}

void QuadraticProgram::validate(const ToleranceConfig& tol) const {
  const Index n = linear.size();
  if (hessian.rows() != n || hessian.cols() != n)
    throw Error(ErrorKind::dimension_mismatch, "hessian must be n x n");
  if (constraints.num_vars() != n)
    throw Error(ErrorKind::dimension_mismatch, "linear cost length does not match constraint columns");
  if (!hessian.allFinite() || !linear.allFinite())
    throw Error(ErrorKind::invalid_argument, "objective contains non-finite entries");
  constraints.validate();
  if (n == 0) return;
  double asym = (hessian - hessian.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol.sym) {
    std::ostringstream os;
    os << "hessian is not symmetric (max asymmetry " << asym << ")";
    throw Error(ErrorKind::invalid_argument, os.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(hessian, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol.psd) {
    std::ostringstream os;
    os << "hessian is not positive semidefinite (min eigenvalue " << es.eigenvalues().minCoeff() << ")";
    throw Error(ErrorKind::invalid_argument, os.str());
  }
}

QuadraticProgram QuadraticProgram::from_lp(const LinearProgram& lp) {
  return QuadraticProgram{Matrix::Zero(lp.num_vars(), lp.num_vars()), lp.cost, lp.constraints};
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

}  // namespace dpc
