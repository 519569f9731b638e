#include "dpc/predictor.hpp"

#include <Eigen/LU>

#include <cmath>
#include <exception>
#include <limits>
#include <optional>

namespace dpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lexicographic k-subsets of {0..n-1} without both i and i + half.
std::vector<std::vector<Index>> candidate_supports(Index n, Index half, Index min_size, Index max_size,
                                                   Index budget, bool& truncated) {
  std::vector<std::vector<Index>> out;
  truncated = false;
  for (Index size = min_size; size <= max_size && size <= n; ++size) {
    std::vector<Index> idx(static_cast<size_t>(size));
    for (Index i = 0; i < size; ++i) idx[static_cast<size_t>(i)] = i;
    while (true) {
      bool clash = false;
      for (size_t a = 0; a < idx.size() && !clash; ++a)
        for (size_t b = a + 1; b < idx.size() && !clash; ++b) clash = idx[b] == idx[a] + half;
      if (!clash) {
        if (static_cast<Index>(out.size()) >= budget) {
          truncated = true;
          return out;
        }
        out.push_back(idx);
      }
      Index pos = size - 1;
      while (pos >= 0 && idx[static_cast<size_t>(pos)] == n - size + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<size_t>(pos)];
      for (Index q = pos + 1; q < size; ++q) idx[static_cast<size_t>(q)] = idx[static_cast<size_t>(q - 1)] + 1;
    }
  }
  return out;
}

Index relative_rank(const Matrix& m, double rel = 1e-9) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  return r;
}

// Chebyshev ball of {z : C z <= d}; nullopt if the LP fails to certify.
std::optional<std::pair<Vector, double>> chebyshev(const Matrix& c, const Vector& d, const ToleranceConfig& tol) {
  const Index nz = c.cols(), rows = c.rows();
  LinearProgram lp;
  lp.cost = Vector::Zero(nz + 1);
  lp.cost(nz) = -1.0;
  lp.constraints.ineq_matrix.resize(rows + 1, nz + 1);
  lp.constraints.ineq_matrix.topLeftCorner(rows, nz) = c;
  lp.constraints.ineq_matrix.block(0, nz, rows, 1) = c.rowwise().norm();
  lp.constraints.ineq_matrix.row(rows).setZero();
  lp.constraints.ineq_matrix(rows, nz) = 1.0;
  lp.constraints.ineq_rhs.resize(rows + 1);
  lp.constraints.ineq_rhs << d, 1.0;
  lp.constraints.eq_matrix = Matrix::Zero(0, nz + 1);
  lp.constraints.eq_rhs = Vector::Zero(0);
  lp.constraints.lower = Vector::Constant(nz + 1, -kInf);
  const SolveResult r = solve_lp(lp, tol);
  if (r.status == SolveStatus::infeasible) return std::make_pair(Vector(Vector::Zero(nz)), -kInf);
  if (!r.optimal()) return std::nullopt;
  return std::make_pair(Vector(r.primal.head(nz)), r.primal(nz));
}

// Drops rows implied by the others: max c_k z over the rest stays <= d_k.
void remove_redundant(Matrix& c, Vector& d, const ToleranceConfig& tol) {
  std::vector<bool> keep(static_cast<size_t>(c.rows()), true);
  const Index nz = c.cols();
  for (Index k = 0; k < c.rows(); ++k) {
    std::vector<Index> others;
    for (Index j = 0; j < c.rows(); ++j)
      if (j != k && keep[static_cast<size_t>(j)]) others.push_back(j);
    LinearProgram lp;
    lp.cost = -c.row(k).transpose();
    lp.constraints.ineq_matrix.resize(static_cast<Index>(others.size()) + 1, nz);
    lp.constraints.ineq_rhs.resize(static_cast<Index>(others.size()) + 1);
    for (size_t q = 0; q < others.size(); ++q) {
      lp.constraints.ineq_matrix.row(static_cast<Index>(q)) = c.row(others[q]);
      lp.constraints.ineq_rhs(static_cast<Index>(q)) = d(others[q]);
    }
    lp.constraints.ineq_matrix.row(static_cast<Index>(others.size())) = c.row(k);
    lp.constraints.ineq_rhs(static_cast<Index>(others.size())) = d(k) + 1.0;
    lp.constraints.eq_matrix = Matrix::Zero(0, nz);
    lp.constraints.eq_rhs = Vector::Zero(0);
    lp.constraints.lower = Vector::Constant(nz, -kInf);
    const SolveResult r = solve_lp(lp, tol);
    if (r.optimal() && -r.objective <= d(k) + tol.interior * (1.0 + std::abs(d(k)))) keep[static_cast<size_t>(k)] = false;
  }
  Index rows = 0;
  for (bool b : keep) rows += b;
  Matrix c2(rows, nz);
  Vector d2(rows);
  for (Index k = 0, q = 0; k < c.rows(); ++k) {
    if (!keep[static_cast<size_t>(k)]) continue;
    c2.row(q) = c.row(k);
    d2(q++) = d(k);
  }
  c = std::move(c2);
  d = std::move(d2);
}

struct Problem {
  Matrix zbar;  // nz x k
  Matrix ybar;  // py x k
  Matrix p;     // ybar' Q ybar
  Matrix q;
  double lambda;
  Box box;
};

std::optional<CriticalRegion> region_for_support(const Problem& pb, const std::vector<Index>& support,
                                                 const ToleranceConfig& tol) {
  const Index nz = pb.zbar.rows(), k = pb.zbar.cols(), s = static_cast<Index>(support.size());
  Matrix zs(nz, s), ys(pb.ybar.rows(), s);
  for (Index j = 0; j < s; ++j) {
    zs.col(j) = pb.zbar.col(support[static_cast<size_t>(j)]);
    ys.col(j) = pb.ybar.col(support[static_cast<size_t>(j)]);
  }
  Matrix ds(nz + ys.rows(), s);
  ds << zs, ys;
  if (relative_rank(zs) < nz || relative_rank(ds) < s) return std::nullopt;

  // [2 P_S  Z_S'; Z_S 0] [a_S; nu] = [-lambda 1; z]
  Matrix kkt = Matrix::Zero(s + nz, s + nz);
  kkt.topLeftCorner(s, s) = 2.0 * ys.transpose() * pb.q * ys;
  kkt.topRightCorner(s, nz) = zs.transpose();
  kkt.bottomLeftCorner(nz, s) = zs;
  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) return std::nullopt;
  Matrix rhs_z = Matrix::Zero(s + nz, nz);
  rhs_z.bottomRows(nz) = Matrix::Identity(nz, nz);
  Vector rhs_c = Vector::Zero(s + nz);
  rhs_c.head(s).setConstant(-pb.lambda);
  const Matrix sol_z = lu.solve(rhs_z);
  const Vector sol_c = lu.solve(rhs_c);
  const Matrix a_gain = sol_z.topRows(s), nu_gain = sol_z.bottomRows(nz);
  const Vector a_off = sol_c.head(s), nu_off = sol_c.tail(nz);

  // Rows: -a_S(z) <= 0 for the support, -mu_i(z) <= 0 for the others,
  // then the parameter box.
  std::vector<bool> in_support(static_cast<size_t>(k), false);
  for (Index i : support) in_support[static_cast<size_t>(i)] = true;
  const Index rows = k + 2 * nz;
  Matrix c(rows, nz);
  Vector d(rows);
  for (Index j = 0; j < s; ++j) {
    c.row(j) = -a_gain.row(j);
    d(j) = a_off(j);
  }
  const Matrix y_gain = ys * a_gain;
  const Vector y_off = ys * a_off;
  Index row = s;
  for (Index i = 0; i < k; ++i) {
    if (in_support[static_cast<size_t>(i)]) continue;
    // mu_i = 2 ybar_i' Q y + lambda + zbar_i' nu
    const Vector qy = pb.q * pb.ybar.col(i);
    c.row(row) = -(2.0 * qy.transpose() * y_gain + pb.zbar.col(i).transpose() * nu_gain);
    d(row) = 2.0 * qy.dot(y_off) + pb.lambda + pb.zbar.col(i).dot(nu_off);
    ++row;
  }
  for (Index j = 0; j < nz; ++j, row += 2) {
    c.row(row) = Vector::Unit(nz, j).transpose();
    d(row) = pb.box.upper(j);
    c.row(row + 1) = -Vector::Unit(nz, j).transpose();
    d(row + 1) = -pb.box.lower(j);
  }

  // Normalize; zero rows are either vacuous or make the region empty.
  std::vector<Index> live;
  for (Index r = 0; r < rows; ++r) {
    const double nrm = c.row(r).norm();
    if (nrm <= 1e-12 * (1.0 + std::abs(d(r)))) {
      if (d(r) < -tol.interior * (1.0 + std::abs(d(r)))) return std::nullopt;
      continue;
    }
    c.row(r) /= nrm;
    d(r) /= nrm;
    live.push_back(r);
  }
  Matrix cl(static_cast<Index>(live.size()), nz);
  Vector dl(static_cast<Index>(live.size()));
  for (size_t q = 0; q < live.size(); ++q) {
    cl.row(static_cast<Index>(q)) = c.row(live[q]);
    dl(static_cast<Index>(q)) = d(live[q]);
  }

  const auto ball = chebyshev(cl, dl, tol);
  if (!ball) throw Error(ErrorKind::numerical, "region emptiness LP failed to certify");
  if (ball->second < tol.interior) return std::nullopt;
  remove_redundant(cl, dl, tol);

  CriticalRegion reg;
  reg.C = std::move(cl);
  reg.d = std::move(dl);
  reg.F = y_gain;
  reg.g = y_off;
  reg.generator_gain = Matrix::Zero(k, nz);
  reg.generator_offset = Vector::Zero(k);
  for (Index j = 0; j < s; ++j) {
    reg.generator_gain.row(support[static_cast<size_t>(j)]) = a_gain.row(j);
    reg.generator_offset(support[static_cast<size_t>(j)]) = a_off(j);
  }
  reg.support = support;
  for (Index i = 0; i < k; ++i)
    if (!in_support[static_cast<size_t>(i)]) reg.active_set.push_back(i);
  reg.chebyshev_center = ball->first;
  reg.chebyshev_radius = ball->second;
  return reg;
}

}  // namespace

bool CriticalRegion::contains(const Vector& z, double tol) const {
  for (Index r = 0; r < C.rows(); ++r)
    if (C.row(r).dot(z) > d(r) + tol * (1.0 + std::abs(d(r)))) return false;
  return true;
}

double candidate_support_count(const PredictorSpec& spec) {
  const Index l = spec.dict.columns(), nz = spec.z_dim(), rows = spec.dict.rows();
  double total = 0.0;
  for (Index size = nz; size <= rows && size <= l; ++size) {
    double binom = 1.0;
    for (Index i = 0; i < size; ++i) binom = binom * static_cast<double>(l - i) / static_cast<double>(i + 1);
    total += binom * std::pow(2.0, static_cast<double>(size));
  }
  return total;
}

PwaFunction enumerate_pwa(const PredictorSpec& spec, const Box& param_box, const ToleranceConfig& tol,
                          const EnumerationOptions& options) {
  spec.validate(tol);
  const Index nz = spec.z_dim(), py = spec.y_dim(), l = spec.dict.columns(), k = 2 * l;
  param_box.validate(nz, "parameter");
  if (!param_box.lower.allFinite() || !param_box.upper.allFinite())
    throw Error(ErrorKind::invalid_argument, "parameter box must be bounded");

  const Matrix& d = spec.dict.matrix();
  Problem pb;
  pb.zbar.resize(nz, k);
  pb.zbar << d.topRows(nz), -d.topRows(nz);
  pb.ybar.resize(py, k);
  pb.ybar << d.bottomRows(py), -d.bottomRows(py);
  pb.q = spec.output_weight;
  pb.lambda = spec.lambda;
  pb.box = param_box;

  PwaFunction out;
  out.z_dim = nz;
  out.y_dim = py;
  out.atoms = k;
  out.lambda = spec.lambda;
  out.output_weight = spec.output_weight;
  out.param_box = param_box;

  bool truncated = false;
  const auto candidates = candidate_supports(k, l, nz, d.rows(), options.max_candidates, truncated);
  out.complete = !truncated;
  out.candidates_examined = static_cast<Index>(candidates.size());

  const Index n = static_cast<Index>(candidates.size());
  std::vector<std::optional<CriticalRegion>> found(static_cast<size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic) if (options.exec == Execution::parallel)
  for (Index i = 0; i < n; ++i) {
    try {
      found[static_cast<size_t>(i)] = region_for_support(pb, candidates[static_cast<size_t>(i)], tol);
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& r : found)
    if (r) out.regions.push_back(std::move(*r));
  return out;
}

std::vector<Index> containing_regions(const PwaFunction& pwa, const Vector& z, double tol) {
  if (z.size() != pwa.z_dim) throw Error(ErrorKind::dimension_mismatch, "parameter dimension mismatch");
  std::vector<Index> out;
  for (Index i = 0; i < static_cast<Index>(pwa.regions.size()); ++i)
    if (pwa.regions[static_cast<size_t>(i)].contains(z, tol)) out.push_back(i);
  return out;
}

PwaValue evaluate_pwa(const PwaFunction& pwa, const Vector& z, double tol) {
  if (z.size() != pwa.z_dim) throw Error(ErrorKind::dimension_mismatch, "parameter dimension mismatch");
  for (Index i = 0; i < static_cast<Index>(pwa.regions.size()); ++i) {
    const auto& r = pwa.regions[static_cast<size_t>(i)];
    if (r.contains(z, tol)) return {r.predict(z), i};
  }
  throw Error(ErrorKind::uncovered, "parameter lies in no critical region");
}

}  // namespace dpc
