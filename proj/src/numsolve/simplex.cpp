#include "dpc/numsolve.hpp"
#include "numsolve/problem_scale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class PhaseOutcome { optimal, unbounded, iteration_limit, singular };

// Dense tableau simplex on  min c'v  s.t.  M v = h, v >= 0  with an explicit
// basis. The tableau is rebuilt from the original data every
// kRefactorEvery pivots and before declaring optimality.
class TableauSimplex {
 public:
  TableauSimplex(Matrix m, Vector h, Vector c, std::vector<Index> basis,
                 double pivot_tol, double opt_tol)
      : m_(std::move(m)),
        h_(std::move(h)),
        c_(std::move(c)),
        basis_(std::move(basis)),
        pivot_tol_(pivot_tol),
        opt_tol_(opt_tol) {}

  PhaseOutcome run(Index allowed_cols, int max_iter) {
    if (!refactor()) return PhaseOutcome::singular;
    int since_refactor = 0;
    while (iterations_ < max_iter) {
      Index entering = choose_entering(allowed_cols);
      if (entering < 0) {
        if (since_refactor == 0) return PhaseOutcome::optimal;
        if (!refactor()) return PhaseOutcome::singular;
        since_refactor = 0;
        continue;
      }
      Index row = choose_leaving(entering);
      if (row < 0) {
        if (since_refactor == 0) return PhaseOutcome::unbounded;
        if (!refactor()) return PhaseOutcome::singular;
        since_refactor = 0;
        continue;
      }
      pivot(row, entering);
      ++iterations_;
      if (++since_refactor >= kRefactorEvery) {
        if (!refactor()) return PhaseOutcome::singular;
        since_refactor = 0;
      }
    }
    return PhaseOutcome::iteration_limit;
  }

  // Pivots a nonbasic column into `row` regardless of cost. Returns false if
  // every eligible entry of the row is below the pivot tolerance.
  bool force_pivot(Index row, Index allowed_cols) {
    Index best = -1;
    double best_mag = pivot_tol_;
    for (Index j = 0; j < allowed_cols; ++j) {
      if (is_basic(j)) continue;
      double mag = std::abs(tab_(row, j));
      if (mag > best_mag) {
        best_mag = mag;
        best = j;
      }
    }
    if (best < 0) return false;
    pivot(row, best);
    return true;
  }

  bool refactor() {
    const Index rows = m_.rows();
    tab_.resize(rows, m_.cols() + 1);
    duals_ = Vector::Zero(rows);
    if (rows > 0) {
      Matrix b(rows, rows);
      for (Index i = 0; i < rows; ++i) b.col(i) = m_.col(basis_[static_cast<size_t>(i)]);
      Eigen::PartialPivLU<Matrix> lu(b);
      // PartialPivLU does not report singularity; inspect the pivots.
      const auto& lu_mat = lu.matrixLU();
      double max_diag = 0.0, min_diag = kInf;
      for (Index i = 0; i < rows; ++i) {
        max_diag = std::max(max_diag, std::abs(lu_mat(i, i)));
        min_diag = std::min(min_diag, std::abs(lu_mat(i, i)));
      }
      if (min_diag <= 1e-13 * std::max(1.0, max_diag)) return false;
      tab_.leftCols(m_.cols()) = lu.solve(m_);
      tab_.col(m_.cols()) = lu.solve(h_);
      Vector cb(rows);
      for (Index i = 0; i < rows; ++i) cb(i) = c_(basis_[static_cast<size_t>(i)]);
      duals_ = lu.transpose().solve(cb);
    }
    reduced_ = c_ - m_.transpose() * duals_;
    for (Index i = 0; i < rows; ++i) reduced_(basis_[static_cast<size_t>(i)]) = 0.0;
    return true;
  }

  [[nodiscard]] Vector primal() const {
    Vector v = Vector::Zero(m_.cols());
    for (Index i = 0; i < m_.rows(); ++i)
      v(basis_[static_cast<size_t>(i)]) = tab_(i, m_.cols());
    return v;
  }

  [[nodiscard]] bool is_basic(Index j) const {
    return std::find(basis_.begin(), basis_.end(), j) != basis_.end();
  }

  [[nodiscard]] const std::vector<Index>& basis() const { return basis_; }
  [[nodiscard]] const Vector& duals() const { return duals_; }
  [[nodiscard]] int iterations() const { return iterations_; }

 private:
  static constexpr int kRefactorEvery = 40;

  // Bland: lowest-index column with a negative reduced cost.
  Index choose_entering(Index allowed_cols) const {
    for (Index j = 0; j < allowed_cols; ++j) {
      if (reduced_(j) < -opt_tol_ && !is_basic(j)) return j;
    }
    return -1;
  }

  // Minimum ratio, ties broken by the lowest basic variable index.
  Index choose_leaving(Index col) const {
    const Index rhs = m_.cols();
    Index best = -1;
    double best_ratio = kInf;
    for (Index i = 0; i < tab_.rows(); ++i) {
      double a = tab_(i, col);
      if (a <= pivot_tol_) continue;
      double ratio = std::max(0.0, tab_(i, rhs)) / a;
      if (best < 0 || ratio < best_ratio - 1e-12 * (1.0 + best_ratio) ||
          (ratio <= best_ratio + 1e-12 * (1.0 + best_ratio) &&
           basis_[static_cast<size_t>(i)] < basis_[static_cast<size_t>(best)])) {
        best = i;
        best_ratio = ratio;
      }
    }
    return best;
  }

  void pivot(Index row, Index col) {
    tab_.row(row) /= tab_(row, col);
    for (Index i = 0; i < tab_.rows(); ++i) {
      if (i == row) continue;
      double factor = tab_(i, col);
      if (factor != 0.0) tab_.row(i) -= factor * tab_.row(row);
    }
    double dj = reduced_(col);
    if (dj != 0.0) reduced_ -= dj * tab_.row(row).head(m_.cols()).transpose();
    reduced_(col) = 0.0;
    basis_[static_cast<size_t>(row)] = col;
  }

  Matrix m_;
  Vector h_;
  Vector c_;
  std::vector<Index> basis_;
  Matrix tab_;
  Vector reduced_;
  Vector duals_;
  double pivot_tol_;
  double opt_tol_;
  int iterations_ = 0;
};

// Column bookkeeping for the reduction  x -> v >= 0.
struct StandardForm {
  Matrix m;
  Vector h;
  Vector c;
  Vector sign;                  // row flip applied so that h >= 0
  std::vector<Index> pos_col;   // column of x_j - lb_j (or x_j^+)
  std::vector<Index> neg_col;   // column of x_j^- for free x_j, else -1
  Index slack_offset = 0;
  Vector shift;                 // finite lower bounds, zero where free
};

StandardForm to_standard_form(const LinearProgram& lp) {
  const auto& con = lp.constraints;
  const Index n = lp.num_vars();
  const Index mi = con.ineq_matrix.rows();
  const Index me = con.eq_matrix.rows();

  StandardForm sf;
  sf.shift = Vector::Zero(n);
  sf.pos_col.assign(static_cast<size_t>(n), -1);
  sf.neg_col.assign(static_cast<size_t>(n), -1);
  Index cols = 0;
  for (Index j = 0; j < n; ++j) {
    sf.pos_col[static_cast<size_t>(j)] = cols++;
    if (std::isfinite(con.lower(j))) {
      sf.shift(j) = con.lower(j);
    } else {
      sf.neg_col[static_cast<size_t>(j)] = cols++;
    }
  }
  sf.slack_offset = cols;
  cols += mi;

  const Index rows = mi + me;
  sf.m = Matrix::Zero(rows, cols);
  sf.h = Vector::Zero(rows);
  sf.c = Vector::Zero(cols);
  for (Index j = 0; j < n; ++j) {
    const auto jj = static_cast<size_t>(j);
    sf.c(sf.pos_col[jj]) = lp.cost(j);
    if (sf.neg_col[jj] >= 0) sf.c(sf.neg_col[jj]) = -lp.cost(j);
  }
  auto fill_row = [&](Index row, const auto& coeffs, double rhs) {
    for (Index j = 0; j < n; ++j) {
      const auto jj = static_cast<size_t>(j);
      sf.m(row, sf.pos_col[jj]) = coeffs(j);
      if (sf.neg_col[jj] >= 0) sf.m(row, sf.neg_col[jj]) = -coeffs(j);
    }
    sf.h(row) = rhs - coeffs.dot(sf.shift);
  };
  for (Index k = 0; k < mi; ++k) {
    fill_row(k, con.ineq_matrix.row(k).transpose(), con.ineq_rhs(k));
    sf.m(k, sf.slack_offset + k) = 1.0;
  }
  for (Index k = 0; k < me; ++k) fill_row(mi + k, con.eq_matrix.row(k).transpose(), con.eq_rhs(k));

  sf.sign = Vector::Ones(rows);
  for (Index i = 0; i < rows; ++i) {
    if (sf.h(i) < 0.0) {
      sf.sign(i) = -1.0;
      sf.m.row(i) *= -1.0;
      sf.h(i) = -sf.h(i);
    }
  }
  return sf;
}

// Relative pivot below which an equality row counts as dependent.
constexpr double kDependentRowTol = 1e-10;

SolveResult failure(SolveStatus status, Index n, int iterations) {
  SolveResult r;
  r.status = status;
  r.primal = Vector::Zero(n);
  r.iterations = iterations;
  return r;
}

}  // namespace

static SolveResult solve_standard(const LinearProgram& lp, const ToleranceConfig& tol) {
  const auto& con = lp.constraints;
  const Index n = lp.num_vars();
  const Index mi = con.ineq_matrix.rows();
  const Index me = con.eq_matrix.rows();
  const double scale = detail::problem_scale(lp);

  StandardForm sf = to_standard_form(lp);
  const Index rows = sf.m.rows();
  const Index cols = sf.m.cols();
  const int max_iter = 2000 + 50 * static_cast<int>(rows + cols);
  const double opt_tol = 1e-11 * scale;

  // Phase 1 with one artificial per row.
  Matrix m1(rows, cols + rows);
  m1 << sf.m, Matrix::Identity(rows, rows);
  Vector c1 = Vector::Zero(cols + rows);
  c1.tail(rows).setOnes();
  std::vector<Index> basis(static_cast<size_t>(rows));
  for (Index i = 0; i < rows; ++i) basis[static_cast<size_t>(i)] = cols + i;

  TableauSimplex phase1(m1, sf.h, c1, basis, tol.pivot, 1e-12 * (1.0 + sf.h.lpNorm<Eigen::Infinity>()));
  auto out1 = phase1.run(cols + rows, max_iter);
  // Phase 1 is bounded below by zero; an "unbounded" exit is reduced-cost
  // noise from dependent rows and leaves a feasible basis behind.
  if (out1 == PhaseOutcome::unbounded) out1 = PhaseOutcome::optimal;
  if (out1 != PhaseOutcome::optimal) {
    return failure(SolveStatus::numerical_failure, n, phase1.iterations());
  }
  Vector v1 = phase1.primal();
  double infeas = v1.tail(rows).sum();
  if (infeas > tol.feas * (1.0 + sf.h.lpNorm<Eigen::Infinity>())) {
    return failure(SolveStatus::infeasible, n, phase1.iterations());
  }

  // Drive artificials out of the basis; rows where that is impossible are
  // linearly dependent on the others and get dropped.
  std::vector<Index> keep_rows;
  for (Index i = 0; i < rows; ++i) {
    if (phase1.basis()[static_cast<size_t>(i)] >= cols && !phase1.force_pivot(i, cols)) continue;
    keep_rows.push_back(i);
  }
  const Index kept = static_cast<Index>(keep_rows.size());
  Matrix m2(kept, cols);
  Vector h2(kept);
  std::vector<Index> basis2(static_cast<size_t>(kept));
  for (Index k = 0; k < kept; ++k) {
    Index i = keep_rows[static_cast<size_t>(k)];
    m2.row(k) = sf.m.row(i);
    h2(k) = sf.h(i);
    basis2[static_cast<size_t>(k)] = phase1.basis()[static_cast<size_t>(i)];
  }

  TableauSimplex phase2(m2, h2, sf.c, basis2, tol.pivot, opt_tol);
  auto out2 = phase2.run(cols, max_iter);
  const int iters = phase1.iterations() + phase2.iterations();
  if (out2 == PhaseOutcome::unbounded) return failure(SolveStatus::unbounded, n, iters);
  if (out2 != PhaseOutcome::optimal) return failure(SolveStatus::numerical_failure, n, iters);

  Vector v = phase2.primal();
  Vector y_kept = phase2.duals();
  Vector y = Vector::Zero(rows);
  for (Index k = 0; k < kept; ++k) y(keep_rows[static_cast<size_t>(k)]) = y_kept(k);

  SolveResult r;
  r.iterations = iters;
  r.primal.resize(n);
  for (Index j = 0; j < n; ++j) {
    const auto jj = static_cast<size_t>(j);
    double x = v(sf.pos_col[jj]) + sf.shift(j);
    if (sf.neg_col[jj] >= 0) x -= v(sf.neg_col[jj]);
    r.primal(j) = x;
  }
  r.duals_ineq.resize(mi);
  for (Index k = 0; k < mi; ++k) r.duals_ineq(k) = -sf.sign(k) * y(k);
  r.duals_eq.resize(me);
  for (Index k = 0; k < me; ++k) r.duals_eq(k) = -sf.sign(mi + k) * y(mi + k);
  Vector grad = lp.cost;
  if (mi > 0) grad += con.ineq_matrix.transpose() * r.duals_ineq;
  if (me > 0) grad += con.eq_matrix.transpose() * r.duals_eq;
  r.duals_lower = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(con.lower(j))) r.duals_lower(j) = grad(j);
  }
  for (Index k = 0; k < mi; ++k) {
    if (!phase2.is_basic(sf.slack_offset + k)) r.active_rows.push_back(k);
  }
  for (Index j = 0; j < n; ++j) {
    const auto jj = static_cast<size_t>(j);
    if (sf.neg_col[jj] < 0 && !phase2.is_basic(sf.pos_col[jj])) r.active_rows.push_back(mi + j);
  }
  r.objective = lp.cost.dot(r.primal);
  r.kkt = check_kkt(lp, r);
  r.status = r.kkt.within(tol.kkt) ? SolveStatus::optimal : SolveStatus::numerical_failure;
  return r;
}


/// Drops equality rows that are linear combinations of the others before the
/// simplex sees them; inconsistent right-hand sides mean infeasibility.
SolveResult solve_lp(const LinearProgram& lp, const ToleranceConfig& tol) {
  lp.validate();
  const auto& con = lp.constraints;
  const Index me = con.eq_matrix.rows();
  if (me == 0) return solve_standard(lp, tol);
  Eigen::ColPivHouseholderQR<Matrix> qr(con.eq_matrix.transpose());
  qr.setThreshold(kDependentRowTol);
  const Index rank = qr.rank();
  if (rank == me) return solve_standard(lp, tol);

  std::vector<Index> keep, drop;
  for (Index k = 0; k < me; ++k) (k < rank ? keep : drop).push_back(qr.colsPermutation().indices()(k));
  std::sort(keep.begin(), keep.end());
  Matrix g_keep(rank, lp.num_vars()), g_drop(static_cast<Index>(drop.size()), lp.num_vars());
  Vector e_keep(rank), e_drop(static_cast<Index>(drop.size()));
  for (Index k = 0; k < rank; ++k) {
    g_keep.row(k) = con.eq_matrix.row(keep[static_cast<size_t>(k)]);
    e_keep(k) = con.eq_rhs(keep[static_cast<size_t>(k)]);
  }
  for (Index k = 0; k < g_drop.rows(); ++k) {
    g_drop.row(k) = con.eq_matrix.row(drop[static_cast<size_t>(k)]);
    e_drop(k) = con.eq_rhs(drop[static_cast<size_t>(k)]);
  }
  // g_drop = coeffs * g_keep, so consistency needs e_drop = coeffs * e_keep.
  const Matrix coeffs = g_keep.transpose().colPivHouseholderQr().solve(g_drop.transpose()).transpose();
  const double scale = detail::problem_scale(lp);
  if ((coeffs * e_keep - e_drop).lpNorm<Eigen::Infinity>() > tol.feas * scale)
    return failure(SolveStatus::infeasible, lp.num_vars(), 0);

  LinearProgram reduced = lp;
  reduced.constraints.eq_matrix = g_keep;
  reduced.constraints.eq_rhs = e_keep;
  SolveResult r = solve_standard(reduced, tol);
  if (r.status != SolveStatus::optimal) return r;
  Vector duals = Vector::Zero(me);
  for (Index k = 0; k < rank; ++k) duals(keep[static_cast<size_t>(k)]) = r.duals_eq(k);
  r.duals_eq = duals;
  r.kkt = check_kkt(lp, r);
  r.status = r.kkt.within(tol.kkt) ? SolveStatus::optimal : SolveStatus::numerical_failure;
  return r;
}

}  // namespace dpc
