#include "dpc/predictor.hpp"

#include <Eigen/Eigenvalues>

#include <limits>

namespace dpc {

void PredictorSpec::validate(const ToleranceConfig& tol) const {
  const Index py = y_dim();
  if (output_weight.rows() != py || output_weight.cols() != py)
    throw Error(ErrorKind::dimension_mismatch, "output weight Q must be " + std::to_string(py) + " x " +
                                                   std::to_string(py));
  if ((output_weight - output_weight.transpose()).cwiseAbs().maxCoeff() > tol.sym)
    throw Error(ErrorKind::invalid_argument, "output weight Q is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(output_weight, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= tol.psd)
    throw Error(ErrorKind::invalid_argument,
                "output weight Q must be positive definite: the predictor needs a unique optimal y");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::invalid_argument, "lambda must be > 0");
  if (dict.columns() == 0) throw Error(ErrorKind::invalid_argument, "data matrix has no columns");
}

MpqpForm MpqpForm::build(const PredictorSpec& spec) {
  spec.validate();
  const Index py = spec.y_dim(), nz = spec.z_dim(), k = spec.atoms(), l = spec.dict.columns();
  const Index n = py + k;
  MpqpForm f;
  f.hessian = Matrix::Zero(n, n);
  f.hessian.topLeftCorner(py, py) = 2.0 * spec.output_weight;
  f.linear = Vector::Zero(n);
  f.linear.tail(k).setConstant(spec.lambda);
  f.ineq = Matrix::Zero(k, n);
  f.ineq.rightCols(k) = -Matrix::Identity(k, k);

  const Matrix& d = spec.dict.matrix();
  f.eq = Matrix::Zero(nz + py, n);
  f.eq.block(0, py, nz, l) = d.topRows(nz);
  f.eq.block(0, py + l, nz, l) = -d.topRows(nz);
  f.eq.block(nz, 0, py, py) = -Matrix::Identity(py, py);
  f.eq.block(nz, py, py, l) = d.bottomRows(py);
  f.eq.block(nz, py + l, py, l) = -d.bottomRows(py);
  f.param = Matrix::Zero(nz + py, nz);
  f.param.topRows(nz) = Matrix::Identity(nz, nz);
  return f;
}

ReducedMpqpForm ReducedMpqpForm::build(const MpqpForm& form) {
  ReducedMpqpForm r;
  r.nullspace = null_space(form.eq);
  r.particular = form.eq.completeOrthogonalDecomposition().pseudoInverse() * form.param;
  return r;
}

Vector PointwiseResult::decision() const {
  Vector s(y.size() + a_pm.size());
  s << y, a_pm;
  return s;
}

std::vector<Index> generator_support(const Vector& a_pm, const ToleranceConfig& tol) {
  std::vector<Index> out;
  const double cut = tol.active * std::max(1.0, a_pm.size() ? a_pm.cwiseAbs().maxCoeff() : 0.0);
  for (Index i = 0; i < a_pm.size(); ++i)
    if (a_pm(i) > cut) out.push_back(i);
  return out;
}

PointwiseResult predict_pointwise(const PredictorSpec& spec, const Vector& z, const ToleranceConfig& tol) {
  if (z.size() != spec.z_dim())
    throw Error(ErrorKind::dimension_mismatch, "parameter has length " + std::to_string(z.size()) + ", expected " +
                                                   std::to_string(spec.z_dim()));
  const MpqpForm f = MpqpForm::build(spec);
  const Index py = spec.y_dim(), k = spec.atoms();
  QuadraticProgram qp;
  qp.hessian = f.hessian;
  qp.linear = f.linear;
  qp.constraints.ineq_matrix = Matrix::Zero(0, py + k);
  qp.constraints.ineq_rhs = Vector::Zero(0);
  qp.constraints.eq_matrix = f.eq;
  qp.constraints.eq_rhs = f.param * z;
  qp.constraints.lower = Vector::Zero(py + k);
  qp.constraints.lower.head(py).setConstant(-std::numeric_limits<double>::infinity());

  PointwiseResult out;
  out.certificate = solve_qp(qp, tol);
  if (!out.certificate.optimal())
    throw Error(out.certificate.status == SolveStatus::infeasible ? ErrorKind::infeasible : ErrorKind::numerical,
                "predictor problem ended with status " + std::string(to_string(out.certificate.status)) +
                    " (the pruned data should span the parameter space)");
  out.y = out.certificate.primal.head(py);
  out.a_pm = out.certificate.primal.tail(k).cwiseMax(0.0);
  out.support = generator_support(out.a_pm, tol);
  for (Index i = 0, s = 0; i < k; ++i) {
    if (s < static_cast<Index>(out.support.size()) && out.support[static_cast<size_t>(s)] == i) {
      ++s;
    } else {
      out.active_set.push_back(i);
    }
  }
  return out;
}

}  // namespace dpc
