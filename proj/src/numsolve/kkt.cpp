#include "dpc/numsolve.hpp"
#include "numsolve/problem_scale.hpp"

#include <algorithm>
#include <cmath>

namespace dpc {

bool KktReport::within(double tol) const { return worst_scaled() <= tol; }

double KktReport::worst_scaled() const {
  return std::max({stationarity, primal_feasibility, complementarity, dual_feasibility}) / scale;
}

namespace {

Vector sized_or_zero(const Vector& v, Index n) { return v.size() == n ? v : Vector::Zero(n); }

KktReport residuals(const Matrix* hessian, const Vector& linear, const LinearConstraints& con,
                    const SolveResult& r, double scale) {
  const Index n = linear.size();
  const Index mi = con.ineq_matrix.rows();
  const Index me = con.eq_matrix.rows();
  const Vector x = sized_or_zero(r.primal, n);
  const Vector mu = sized_or_zero(r.duals_ineq, mi);
  const Vector nu = sized_or_zero(r.duals_eq, me);
  Vector rho = sized_or_zero(r.duals_lower, n);
  for (Index j = 0; j < n; ++j) {
    if (!std::isfinite(con.lower(j))) rho(j) = 0.0;
  }

  KktReport rep;
  rep.scale = scale;

  Vector grad = linear;
  if (hessian != nullptr) grad += (*hessian) * x;
  if (mi > 0) grad += con.ineq_matrix.transpose() * mu;
  if (me > 0) grad += con.eq_matrix.transpose() * nu;
  grad -= rho;
  rep.stationarity = n > 0 ? grad.lpNorm<Eigen::Infinity>() : 0.0;

  double pf = 0.0, comp = 0.0, df = 0.0;
  if (mi > 0) {
    Vector slack = con.ineq_rhs - con.ineq_matrix * x;
    for (Index k = 0; k < mi; ++k) {
      pf = std::max(pf, -slack(k));
      comp = std::max(comp, std::abs(mu(k) * slack(k)));
      df = std::max(df, -mu(k));
    }
  }
  if (me > 0) pf = std::max(pf, (con.eq_matrix * x - con.eq_rhs).lpNorm<Eigen::Infinity>());
  for (Index j = 0; j < n; ++j) {
    if (!std::isfinite(con.lower(j))) continue;
    double gap = x(j) - con.lower(j);
    pf = std::max(pf, -gap);
    comp = std::max(comp, std::abs(rho(j) * gap));
    df = std::max(df, -rho(j));
  }
  rep.primal_feasibility = pf;
  rep.complementarity = comp;
  rep.dual_feasibility = df;
  return rep;
}

}  // namespace

KktReport check_kkt(const QuadraticProgram& qp, const SolveResult& result) {
  return residuals(&qp.hessian, qp.linear, qp.constraints, result, detail::problem_scale(qp));
}

KktReport check_kkt(const LinearProgram& lp, const SolveResult& result) {
  return residuals(nullptr, lp.cost, lp.constraints, result, detail::problem_scale(lp));
}

double lp_dual_objective(const LinearProgram& lp, const SolveResult& r) {
  const auto& con = lp.constraints;
  double d = 0.0;
  if (con.ineq_rhs.size() > 0) d -= con.ineq_rhs.dot(r.duals_ineq);
  if (con.eq_rhs.size() > 0) d -= con.eq_rhs.dot(r.duals_eq);
  for (Index j = 0; j < lp.num_vars(); ++j) {
    if (std::isfinite(con.lower(j))) d += con.lower(j) * r.duals_lower(j);
  }
  return d;
}

}  // namespace dpc
