#include "dpc/atomgeo.hpp"

#include <exception>
#include <limits>

namespace dpc {

std::string_view to_string(HullMethod m) { return m == HullMethod::lp_test ? "lp_test" : "quickhull_lowdim"; }

HullMethod hull_method_from_string(std::string_view s) {
  if (s == "lp_test") return HullMethod::lp_test;
  if (s == "quickhull_lowdim") return HullMethod::quickhull_lowdim;
  throw Error(ErrorKind::parse, "unknown hull method '" + std::string(s) + "'");
}

namespace {

struct AtomDecision {
  bool retained = true;
  Vector certificate;  // over all atoms, zero at the tested one
};

// Convex weights over the other atoms reproducing atom j, if any.
AtomDecision lp_decision(const Matrix& atoms, Index j, const ToleranceConfig& tol) {
  const Index r = atoms.rows(), k = atoms.cols();
  LinearProgram lp;
  lp.cost = Vector::Zero(k - 1);
  lp.constraints.ineq_matrix = Matrix::Zero(0, k - 1);
  lp.constraints.ineq_rhs = Vector::Zero(0);
  lp.constraints.eq_matrix.resize(r + 1, k - 1);
  for (Index i = 0, c = 0; i < k; ++i) {
    if (i == j) continue;
    lp.constraints.eq_matrix.col(c).head(r) = atoms.col(i);
    lp.constraints.eq_matrix(r, c) = 1.0;
    ++c;
  }
  lp.constraints.eq_rhs.resize(r + 1);
  lp.constraints.eq_rhs.head(r) = atoms.col(j);
  lp.constraints.eq_rhs(r) = 1.0;
  lp.constraints.lower = Vector::Zero(k - 1);

  const SolveResult res = solve_lp(lp, tol);
  AtomDecision out;
  if (res.status == SolveStatus::infeasible) return out;
  if (!res.optimal())
    throw Error(ErrorKind::numerical, "extreme-point LP for atom " + std::to_string(j) + " ended with status " +
                                          std::string(to_string(res.status)));
  out.retained = false;
  out.certificate = Vector::Zero(k);
  for (Index i = 0, c = 0; i < k; ++i) {
    if (i == j) continue;
    out.certificate(i) = std::max(0.0, res.primal(c++));
  }
  return out;
}

std::vector<AtomDecision> lp_test(const Matrix& atoms, const ToleranceConfig& tol, Execution exec) {
  const Index k = atoms.cols();
  std::vector<AtomDecision> out(static_cast<size_t>(k));
  if (exec == Execution::serial) {
    for (Index j = 0; j < k; ++j) out[static_cast<size_t>(j)] = lp_decision(atoms, j, tol);
    return out;
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(k));
#pragma omp parallel for schedule(dynamic)
  for (Index j = 0; j < k; ++j) {
    try {
      out[static_cast<size_t>(j)] = lp_decision(atoms, j, tol);
    } catch (...) {
      errors[static_cast<size_t>(j)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

Index negation_of(const Matrix& atoms, Index i, double tol) {
  for (Index j = 0; j < atoms.cols(); ++j) {
    const double t = tol * (1.0 + atoms.col(i).cwiseAbs().maxCoeff());
    if ((atoms.col(i) + atoms.col(j)).cwiseAbs().maxCoeff() <= t) return j;
  }
  return -1;
}

}  // namespace

ExtremePointResult extreme_points(const AtomSet& mirrored, HullMethod method, const ToleranceConfig& tol,
                                  Execution exec) {
  if (mirrored.kind() != AtomKind::mirrored && mirrored.kind() != AtomKind::pruned_mirrored)
    throw Error(ErrorKind::invalid_argument, "extreme_points expects a mirrored atom set");
  const Matrix& atoms = mirrored.atoms();
  const Index k = atoms.cols();
  if (k == 0 || atoms.cwiseAbs().maxCoeff() <= tol.dup)
    throw Error(ErrorKind::invalid_argument, "degenerate atom set: all atoms coincide");

  std::vector<bool> retained(static_cast<size_t>(k), true);
  std::vector<Vector> certificates(static_cast<size_t>(k));
  if (method == HullMethod::lp_test) {
    auto decisions = lp_test(atoms, tol, exec);
    for (Index j = 0; j < k; ++j) {
      retained[static_cast<size_t>(j)] = decisions[static_cast<size_t>(j)].retained;
      certificates[static_cast<size_t>(j)] = std::move(decisions[static_cast<size_t>(j)].certificate);
    }
  } else {
    if (mirrored.dim() > 3)
      throw Error(ErrorKind::invalid_argument, "quickhull_lowdim requires atom dimension <= 3");
    std::fill(retained.begin(), retained.end(), false);
    for (Index v : hull::vertices_lowdim(atoms)) retained[static_cast<size_t>(v)] = true;
  }

  ExtremePointResult out{AtomSet(Matrix(atoms.rows(), 0), {}, AtomKind::pruned_mirrored), {}, {}, 0, 0, method};
  // A +/- pair decided differently is a tolerance tie; keep both.
  for (Index j = 0; j < k; ++j) {
    const Index nj = negation_of(atoms, j, tol.dup);
    if (nj >= 0 && retained[static_cast<size_t>(j)] != retained[static_cast<size_t>(nj)]) {
      retained[static_cast<size_t>(j)] = retained[static_cast<size_t>(nj)] = true;
      certificates[static_cast<size_t>(j)].resize(0);
      certificates[static_cast<size_t>(nj)].resize(0);
      ++out.symmetry_repairs;
    }
  }

  std::vector<Index> keep;
  for (Index j = 0; j < k; ++j)
    if (retained[static_cast<size_t>(j)]) keep.push_back(j);
  Matrix kept(atoms.rows(), static_cast<Index>(keep.size()));
  std::vector<AtomLabel> labels;
  for (size_t c = 0; c < keep.size(); ++c) {
    kept.col(static_cast<Index>(c)) = atoms.col(keep[c]);
    labels.push_back(mirrored.labels()[static_cast<size_t>(keep[c])]);
  }
  out.pruned = AtomSet(std::move(kept), std::move(labels), AtomKind::pruned_mirrored);

  // Removed atoms with unit gauge over the survivors sit on a facet.
  for (Index j = 0; j < k; ++j) {
    if (retained[static_cast<size_t>(j)]) continue;
    const GaugeResult g = atomic_norm(atoms.col(j), out.pruned, tol);
    if (g.value >= 1.0 - tol.feas) ++out.boundary_removed;
  }
  out.retained = std::move(retained);
  out.certificates = std::move(certificates);
  return out;
}

}  // namespace dpc
