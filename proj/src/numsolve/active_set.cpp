#include "dpc/numsolve.hpp"
#include "numsolve/problem_scale.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inequalities and finite lower bounds stacked into one  C x <= d  block.
struct InequalityStack {
  Matrix c;
  Vector d;
  Index general_rows = 0;
  std::vector<Index> bound_var;  // variable index for each bound row
};

InequalityStack stack_inequalities(const LinearConstraints& con) {
  const Index n = con.num_vars();
  InequalityStack s;
  s.general_rows = con.ineq_matrix.rows();
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(con.lower(j))) s.bound_var.push_back(j);
  }
  const Index rows = s.general_rows + static_cast<Index>(s.bound_var.size());
  s.c = Matrix::Zero(rows, n);
  s.d = Vector::Zero(rows);
  s.c.topRows(s.general_rows) = con.ineq_matrix;
  s.d.head(s.general_rows) = con.ineq_rhs;
  for (size_t k = 0; k < s.bound_var.size(); ++k) {
    Index row = s.general_rows + static_cast<Index>(k);
    s.c(row, s.bound_var[k]) = -1.0;
    s.d(row) = -con.lower(s.bound_var[k]);
  }
  return s;
}

// Incrementally maintained orthonormal basis for a row space, used to keep
// the working set linearly independent.
class RowSpan {
 public:
  explicit RowSpan(Index n) : basis_(n, 0) {}

  bool try_add(const Vector& row) {
    Vector r = row;
    for (int pass = 0; pass < 2; ++pass) {
      if (basis_.cols() > 0) r -= basis_ * (basis_.transpose() * r);
    }
    double nrm = r.norm();
    if (nrm <= 1e-9 * std::max(1.0, row.norm())) return false;
    basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
    basis_.col(basis_.cols() - 1) = r / nrm;
    return true;
  }

 private:
  Matrix basis_;
};

class ActiveSetQp {
 public:
  ActiveSetQp(const QuadraticProgram& qp, const ToleranceConfig& tol)
      : qp_(qp), tol_(tol), ineq_(stack_inequalities(qp.constraints)), scale_(detail::problem_scale(qp)) {}

  SolveResult solve() {
    const Index n = qp_.num_vars();
    const auto& con = qp_.constraints;

    LinearProgram feas{Vector::Zero(n), con};
    SolveResult start = solve_lp(feas, tol_);
    if (start.status == SolveStatus::infeasible) return fail(SolveStatus::infeasible, start.iterations);
    if (!start.optimal()) return fail(SolveStatus::numerical_failure, start.iterations);
    x_ = start.primal;
    iterations_ = start.iterations;

    // Independent equality rows, then inequalities active at the start.
    RowSpan span(n);
    for (Index k = 0; k < con.eq_matrix.rows(); ++k) {
      if (span.try_add(con.eq_matrix.row(k).transpose())) eq_rows_.push_back(k);
    }
    const double act_tol = tol_.feas * scale_;
    for (Index i = 0; i < ineq_.c.rows(); ++i) {
      if (std::abs(ineq_.c.row(i).dot(x_) - ineq_.d(i)) <= act_tol &&
          span.try_add(ineq_.c.row(i).transpose())) {
        working_.push_back(i);
      }
    }

    const int max_iter = 1000 + 20 * static_cast<int>(n + ineq_.c.rows());
    const double h_norm = detail::max_abs(qp_.hessian);
    for (int it = 0; it < max_iter; ++it) {
      ++iterations_;
      Matrix aw = working_matrix();
      Vector g = gradient();
      Matrix z = nullspace_of(aw);

      Vector p = Vector::Zero(n);
      bool ray = false;
      if (z.cols() > 0) {
        Matrix hz = z.transpose() * qp_.hessian * z;
        Vector gz = z.transpose() * g;
        Eigen::SelfAdjointEigenSolver<Matrix> es(hz);
        const Vector& ev = es.eigenvalues();
        const Matrix& vecs = es.eigenvectors();
        const double curv_tol = 1e-10 * (1.0 + h_norm);
        Vector coeff = vecs.transpose() * gz;
        Vector null_part = Vector::Zero(ev.size());
        Vector newton = Vector::Zero(ev.size());
        for (Index k = 0; k < ev.size(); ++k) {
          if (ev(k) <= curv_tol) {
            null_part(k) = coeff(k);
          } else {
            newton(k) = coeff(k) / ev(k);
          }
        }
        if (null_part.lpNorm<Eigen::Infinity>() > 1e-11 * scale_) {
          p = -z * (vecs * null_part);
          ray = true;
        } else {
          p = -z * (vecs * newton);
        }
      }

      if (p.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + x_.lpNorm<Eigen::Infinity>())) {
        Vector lambda = multipliers(aw, g);
        Index drop = -1;
        double most_negative = -1e-10 * scale_;
        const Index ne = static_cast<Index>(eq_rows_.size());
        for (size_t k = 0; k < working_.size(); ++k) {
          double l = lambda(ne + static_cast<Index>(k));
          if (l < most_negative) {
            most_negative = l;
            drop = static_cast<Index>(k);
          }
        }
        if (drop < 0) return finish(aw);
        working_.erase(working_.begin() + drop);
        continue;
      }

      // Ratio test against inequalities outside the working set.
      double alpha = ray ? kInf : 1.0;
      Index blocking = -1;
      for (Index i = 0; i < ineq_.c.rows(); ++i) {
        if (std::find(working_.begin(), working_.end(), i) != working_.end()) continue;
        double cp = ineq_.c.row(i).dot(p);
        if (cp <= 1e-12 * std::max(1.0, ineq_.c.row(i).norm() * p.norm())) continue;
        double slack = std::max(0.0, ineq_.d(i) - ineq_.c.row(i).dot(x_));
        double step = slack / cp;
        if (step < alpha) {
          alpha = step;
          blocking = i;
        }
      }
      if (blocking < 0 && ray) return fail(SolveStatus::unbounded, iterations_);
      x_ += alpha * p;
      if (blocking >= 0) working_.push_back(blocking);
    }
    return fail(SolveStatus::numerical_failure, iterations_);
  }

 private:
  Matrix working_matrix() const {
    const Index n = qp_.num_vars();
    Matrix aw(static_cast<Index>(eq_rows_.size() + working_.size()), n);
    Index r = 0;
    for (Index k : eq_rows_) aw.row(r++) = qp_.constraints.eq_matrix.row(k);
    for (Index i : working_) aw.row(r++) = ineq_.c.row(i);
    return aw;
  }

  Vector working_rhs() const {
    Vector b(static_cast<Index>(eq_rows_.size() + working_.size()));
    Index r = 0;
    for (Index k : eq_rows_) b(r++) = qp_.constraints.eq_rhs(k);
    for (Index i : working_) b(r++) = ineq_.d(i);
    return b;
  }

  Vector gradient() const { return qp_.hessian * x_ + qp_.linear; }

  static Matrix nullspace_of(const Matrix& aw) {
    const Index n = aw.cols();
    if (aw.rows() == 0) return Matrix::Identity(n, n);
    Eigen::HouseholderQR<Matrix> qr(aw.transpose());
    Matrix q = qr.householderQ();
    return q.rightCols(n - aw.rows());
  }

  // Least-squares solution of  aw' lambda = -g.
  static Vector multipliers(const Matrix& aw, const Vector& g) {
    if (aw.rows() == 0) return Vector::Zero(0);
    return aw.transpose().colPivHouseholderQr().solve(-g);
  }

  SolveResult finish(Matrix aw) {
    const Index n = qp_.num_vars();
    // Polish: restore working-set equalities exactly, then take the
    // remaining Newton step inside the face.
    if (aw.rows() > 0) {
      Vector resid = working_rhs() - aw * x_;
      x_ += aw.completeOrthogonalDecomposition().solve(resid);
    }
    Matrix z = nullspace_of(aw);
    if (z.cols() > 0) {
      Matrix hz = z.transpose() * qp_.hessian * z;
      Vector gz = z.transpose() * gradient();
      Eigen::SelfAdjointEigenSolver<Matrix> es(hz);
      const double curv_tol = 1e-10 * (1.0 + detail::max_abs(qp_.hessian));
      Vector coeff = es.eigenvectors().transpose() * gz;
      Vector step = Vector::Zero(coeff.size());
      for (Index k = 0; k < coeff.size(); ++k) {
        if (es.eigenvalues()(k) > curv_tol) step(k) = coeff(k) / es.eigenvalues()(k);
      }
      x_ -= z * (es.eigenvectors() * step);
    }
    Vector lambda = multipliers(aw, gradient());

    const auto& con = qp_.constraints;
    SolveResult r;
    r.status = SolveStatus::optimal;
    r.primal = x_;
    r.iterations = iterations_;
    r.duals_eq = Vector::Zero(con.eq_matrix.rows());
    r.duals_ineq = Vector::Zero(con.ineq_matrix.rows());
    r.duals_lower = Vector::Zero(n);
    Index pos = 0;
    for (Index k : eq_rows_) r.duals_eq(k) = lambda(pos++);
    for (Index i : working_) {
      double l = lambda(pos++);
      if (i < ineq_.general_rows) {
        r.duals_ineq(i) = l;
      } else {
        r.duals_lower(ineq_.bound_var[static_cast<size_t>(i - ineq_.general_rows)]) = l;
      }
    }
    r.active_rows.reserve(working_.size());
    for (Index i : working_) {
      r.active_rows.push_back(i < ineq_.general_rows
                                  ? i
                                  : ineq_.general_rows + ineq_.bound_var[static_cast<size_t>(i - ineq_.general_rows)]);
    }
    std::sort(r.active_rows.begin(), r.active_rows.end());
    r.objective = 0.5 * x_.dot(qp_.hessian * x_) + qp_.linear.dot(x_);
    r.kkt = check_kkt(qp_, r);
    if (!r.kkt.within(tol_.kkt)) r.status = SolveStatus::numerical_failure;
    return r;
  }

  SolveResult fail(SolveStatus status, int iterations) const {
    SolveResult r;
    r.status = status;
    r.primal = x_.size() == qp_.num_vars() ? x_ : Vector::Zero(qp_.num_vars());
    r.iterations = iterations;
    return r;
  }

  const QuadraticProgram& qp_;
  const ToleranceConfig& tol_;
  InequalityStack ineq_;
  double scale_;
  Vector x_;
  std::vector<Index> eq_rows_;
  std::vector<Index> working_;
  int iterations_ = 0;
};

}  // namespace

SolveResult solve_qp(const QuadraticProgram& qp, const ToleranceConfig& tol) {
  qp.validate(tol);
  return ActiveSetQp(qp, tol).solve();
}

}  // namespace dpc
