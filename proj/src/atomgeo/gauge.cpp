#include "dpc/atomgeo.hpp"

#include <chrono>

namespace dpc {
namespace {

// min c'a  s.t.  atoms * a = w,  a >= 0.
LinearProgram conic_lp(const Vector& w, const Matrix& atoms, double unit_cost) {
  const Index k = atoms.cols();
  LinearProgram lp;
  lp.cost = Vector::Constant(k, unit_cost);
  lp.constraints.ineq_matrix = Matrix::Zero(0, k);
  lp.constraints.ineq_rhs = Vector::Zero(0);
  lp.constraints.eq_matrix = atoms;
  lp.constraints.eq_rhs = w;
  lp.constraints.lower = Vector::Zero(k);
  return lp;
}

void check_dim(const Vector& w, Index dim) {
  if (w.size() != dim)
    throw Error(ErrorKind::dimension_mismatch, "vector has dimension " + std::to_string(w.size()) +
                                                   ", atoms live in dimension " + std::to_string(dim));
}

}  // namespace

bool span_membership(const Vector& w, const Matrix& columns, const ToleranceConfig& tol) {
  if (w.size() != columns.rows()) throw Error(ErrorKind::dimension_mismatch, "span test: dimension mismatch");
  const double bound = tol.span * (1.0 + w.norm());
  if (columns.cols() == 0) return w.norm() <= bound;
  const Vector a = columns.completeOrthogonalDecomposition().solve(w);
  return (columns * a - w).norm() <= bound;
}

GaugeResult atomic_norm(const Vector& w, const AtomSet& atoms, const ToleranceConfig& tol) {
  check_dim(w, atoms.dim());
  if (!span_membership(w, atoms.atoms(), tol))
    throw Error(ErrorKind::span_violation, "vector lies outside the span of the atoms (data not full row rank?)");
  GaugeResult out;
  if (atoms.size() == 0) {
    out.coefficients = Vector::Zero(0);
    return out;
  }
  const LinearProgram lp = conic_lp(w, atoms.atoms(), 1.0);
  out.certificate = solve_lp(lp, tol);
  if (!out.certificate.optimal())
    throw Error(ErrorKind::numerical,
                "atomic-norm LP ended with status " + std::string(to_string(out.certificate.status)));
  out.coefficients = out.certificate.primal.cwiseMax(0.0);
  out.value = out.coefficients.sum();
  for (Index i = 0; i < out.coefficients.size(); ++i)
    if (out.coefficients(i) > tol.active) out.support.push_back(i);
  return out;
}

bool conic_membership(const Vector& w, const AtomSet& atoms, const ToleranceConfig& tol) {
  check_dim(w, atoms.dim());
  if (atoms.size() == 0) return w.cwiseAbs().maxCoeff() <= tol.feas;
  const SolveResult res = solve_lp(conic_lp(w, atoms.atoms(), 0.0), tol);
  if (res.status == SolveStatus::infeasible) return false;
  if (!res.optimal())
    throw Error(ErrorKind::numerical, "membership LP ended with status " + std::string(to_string(res.status)));
  return true;
}

TrajectoryEffect trajectory_specific_effect(const Vector& w, const DataDictionary& dict,
                                            const AtomSet& pruned_mirrored, double lambda,
                                            const ToleranceConfig& tol) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "trajectory-specific effect needs lambda > 0");
  check_dim(w, dict.rows());
  TrajectoryEffect out;

  const GaugeResult g = atomic_norm(w, pruned_mirrored, tol);
  out.norm_certificate = g.certificate;
  out.scaled_norm = lambda * g.value;

  // min lambda*1'(a+ + a-)  s.t.  D a+ - D a- = w.
  const Index l = dict.columns();
  Matrix split(dict.rows(), 2 * l);
  split << dict.matrix(), -dict.matrix();
  out.full_certificate = solve_lp(conic_lp(w, split, lambda), tol);
  if (!out.full_certificate.optimal())
    throw Error(ErrorKind::numerical,
                "full-dictionary LP ended with status " + std::string(to_string(out.full_certificate.status)));
  out.full_lp = out.full_certificate.objective;
  out.discrepancy = std::abs(out.full_lp - out.scaled_norm);
  return out;
}

TrajectoryEffect trajectory_specific_effect(const Vector& w, const DataDictionary& dict, double lambda,
                                            const ToleranceConfig& tol) {
  const PrunedData pd = prune_dictionary(dict, HullMethod::lp_test, tol);
  return trajectory_specific_effect(w, dict, pd.extreme.pruned, lambda, tol);
}

MembershipProbe membership_probe(const Vector& w, const PrunedData& data, const ToleranceConfig& tol) {
  MembershipProbe p;
  p.span_pruned = span_membership(w, data.pruned.atoms(), tol);
  p.coni_pruned_mirrored = conic_membership(w, data.extreme.pruned, tol);
  p.coni_mirrored = conic_membership(w, data.mirrored.set, tol);
  p.span_original = span_membership(w, data.original.atoms(), tol);
  return p;
}

PrunedData prune_dictionary(const DataDictionary& dict, HullMethod method, const ToleranceConfig& tol,
                            Execution exec) {
  const auto start = std::chrono::steady_clock::now();
  AtomSet original = AtomSet::from_dictionary(dict);
  MirrorResult mirrored = mirror(original, tol);
  ExtremePointResult extreme = extreme_points(mirrored.set, method, tol, exec);
  AtomSet pruned = unmirror(extreme.pruned, original);
  std::vector<Index> cols;
  for (const auto& l : pruned.labels()) cols.push_back(l.source);
  DataDictionary sub = dict.select_columns(cols);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return {std::move(original), std::move(mirrored), std::move(extreme), std::move(pruned), std::move(sub), ms};
}

}  // namespace dpc
