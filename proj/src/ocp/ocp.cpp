#include "dpc/ocp.hpp"

#include "dpc/json_eigen.hpp"

#include <Eigen/Eigenvalues>

#include <exception>
#include <limits>

namespace dpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_weight(const Matrix& w, Index n, const char* name, const ToleranceConfig& tol) {
  if (w.rows() != n || w.cols() != n)
    throw Error(ErrorKind::dimension_mismatch, std::string(name) + " must be " + std::to_string(n) + " x " +
                                                   std::to_string(n));
  if (n == 0) return;
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > tol.sym)
    throw Error(ErrorKind::invalid_argument, std::string(name) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol.psd)
    throw Error(ErrorKind::invalid_argument, std::string(name) + " is not positive semidefinite");
}

// Appends rows  x_j <= ub_j  and  -x_j <= -lb_j  for finite bounds.
void add_box_rows(const Box& box, Index offset, Index nvar, std::vector<Vector>& rows, std::vector<double>& rhs,
                  const Vector& shift) {
  for (Index i = 0; i < box.size(); ++i) {
    if (std::isfinite(box.upper(i))) {
      Vector r = Vector::Zero(nvar);
      r(offset + i) = 1.0;
      rows.push_back(r);
      rhs.push_back(box.upper(i) - shift(i));
    }
    if (std::isfinite(box.lower(i))) {
      Vector r = Vector::Zero(nvar);
      r(offset + i) = -1.0;
      rows.push_back(r);
      rhs.push_back(-(box.lower(i) - shift(i)));
    }
  }
}

}  // namespace

Box box_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorKind::parse, std::string(what) + ": expected array of [lower, upper] pairs");
  Box b{Vector(static_cast<Index>(j.size())), Vector(static_cast<Index>(j.size()))};
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != 2)
      throw Error(ErrorKind::parse, std::string(what) + ": each entry must be a [lower, upper] pair");
    b.lower(static_cast<Index>(i)) = number_from_json(j[i][0]);
    b.upper(static_cast<Index>(i)) = number_from_json(j[i][1]);
  }
  return b;
}

Box Box::unbounded(Index n) { return {Vector::Constant(n, -kInf), Vector::Constant(n, kInf)}; }

void Box::validate(Index n, const char* what) const {
  if (lower.size() != n || upper.size() != n)
    throw Error(ErrorKind::dimension_mismatch, std::string(what) + " box must have " + std::to_string(n) + " entries");
  for (Index i = 0; i < n; ++i) {
    if (std::isnan(lower(i)) || std::isnan(upper(i)) || lower(i) > upper(i) || lower(i) == kInf ||
        upper(i) == -kInf)
      throw Error(ErrorKind::invalid_argument, std::string(what) + " box entry " + std::to_string(i) +
                                                   " has lower > upper or an invalid bound");
  }
}

OcpSpec OcpSpec::make(DataDictionary dict, Matrix output_weight, Matrix input_weight, double lambda) {
  const Index mu = dict.dims().input_rows(), py = dict.dims().output_rows();
  return OcpSpec{std::move(dict),          std::move(output_weight), std::move(input_weight),
                 Vector::Zero(mu),         Vector::Zero(py),         lambda,
                 false,                    Box::unbounded(mu),       Box::unbounded(py)};
}

void OcpSpec::validate(const ToleranceConfig& tol) const {
  const Index mu = dict.dims().input_rows(), py = dict.dims().output_rows();
  check_weight(output_weight, py, "output weight Q", tol);
  check_weight(input_weight, mu, "input weight R", tol);
  if (input_ref.size() != mu) throw Error(ErrorKind::dimension_mismatch, "u_ref length must be m*N");
  if (output_ref.size() != py) throw Error(ErrorKind::dimension_mismatch, "y_ref length must be p*N");
  if (!input_ref.allFinite() || !output_ref.allFinite())
    throw Error(ErrorKind::invalid_argument, "references must be finite");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::invalid_argument, "lambda must be >= 0");
  if (lambda == 0.0 && !allow_unregularized)
    throw Error(ErrorKind::invalid_argument,
                "lambda = 0 drops the regularization; set allow_unregularized to accept non-unique data weights");
  input_box.validate(mu, "input");
  output_box.validate(py, "output");
  if (dict.columns() == 0) throw Error(ErrorKind::invalid_argument, "data matrix has no columns");
}

OcpLayout ocp_layout(const OcpSpec& spec) {
  const Index mu = spec.dict.dims().input_rows(), py = spec.dict.dims().output_rows();
  const Index na = spec.regularized() ? 2 * spec.dict.columns() : spec.dict.columns();
  return {{0, mu}, {mu, py}, {mu + py, na}, mu + py + na};
}

QuadraticProgram assemble_ocp(const OcpSpec& spec, const Vector& xi) {
  spec.validate();
  const DataDictionary& d = spec.dict;
  if (xi.size() != d.dims().past_rows())
    throw Error(ErrorKind::dimension_mismatch, "regressor has length " + std::to_string(xi.size()) + ", expected " +
                                                   std::to_string(d.dims().past_rows()));
  if (!xi.allFinite()) throw Error(ErrorKind::invalid_argument, "regressor contains non-finite entries");
  const OcpLayout lay = ocp_layout(spec);
  const Index n = lay.num_vars;

  // Data with future outputs shifted by y_ref, mirrored when regularized.
  Matrix data = d.matrix();
  data.bottomRows(lay.y.size).colwise() -= spec.output_ref;
  Matrix atoms(data.rows(), lay.a.size);
  if (spec.regularized()) {
    atoms << data, -data;
  } else {
    atoms = data;
  }

  QuadraticProgram qp;
  qp.hessian = Matrix::Zero(n, n);
  qp.hessian.block(lay.u.begin, lay.u.begin, lay.u.size, lay.u.size) = 2.0 * spec.input_weight;
  qp.hessian.block(lay.y.begin, lay.y.begin, lay.y.size, lay.y.size) = 2.0 * spec.output_weight;
  qp.linear = Vector::Zero(n);
  qp.linear.segment(lay.u.begin, lay.u.size) = -2.0 * spec.input_weight * spec.input_ref;
  if (spec.regularized()) qp.linear.segment(lay.a.begin, lay.a.size).setConstant(spec.lambda);

  auto& c = qp.constraints;
  c.eq_matrix = Matrix::Zero(d.rows(), n);
  c.eq_matrix.middleCols(lay.a.begin, lay.a.size) = atoms;
  c.eq_matrix.block(d.input_range().begin, lay.u.begin, lay.u.size, lay.u.size) = -Matrix::Identity(lay.u.size, lay.u.size);
  c.eq_matrix.block(d.output_range().begin, lay.y.begin, lay.y.size, lay.y.size) = -Matrix::Identity(lay.y.size, lay.y.size);
  c.eq_rhs = Vector::Zero(d.rows());
  c.eq_rhs.head(xi.size()) = xi;

  std::vector<Vector> rows;
  std::vector<double> rhs;
  add_box_rows(spec.input_box, lay.u.begin, n, rows, rhs, Vector::Zero(lay.u.size));
  add_box_rows(spec.output_box, lay.y.begin, n, rows, rhs, spec.output_ref);
  c.ineq_matrix.resize(static_cast<Index>(rows.size()), n);
  c.ineq_rhs.resize(static_cast<Index>(rows.size()));
  for (size_t k = 0; k < rows.size(); ++k) {
    c.ineq_matrix.row(static_cast<Index>(k)) = rows[k].transpose();
    c.ineq_rhs(static_cast<Index>(k)) = rhs[k];
  }
  c.lower = Vector::Constant(n, -kInf);
  if (spec.regularized()) c.lower.segment(lay.a.begin, lay.a.size).setZero();
  return qp;
}

Vector recover_signed(const Vector& a_pm, double tol) {
  if (a_pm.size() % 2 != 0) throw Error(ErrorKind::dimension_mismatch, "a± must have even length");
  const Index l = a_pm.size() / 2;
  for (Index i = 0; i < l; ++i) {
    if (a_pm(i) < -tol || a_pm(l + i) < -tol)
      throw Error(ErrorKind::invalid_argument, "a± entry " + std::to_string(i) + " is negative");
    if (a_pm(i) * a_pm(l + i) > tol)
      throw Error(ErrorKind::numerical, "complementarity violated at index " + std::to_string(i) + ": a+ * a- = " +
                                            std::to_string(a_pm(i) * a_pm(l + i)));
  }
  return a_pm.head(l) - a_pm.tail(l);
}

OcpSolution solve_ocp(const OcpSpec& spec, const Vector& xi, const ToleranceConfig& tol) {
  const QuadraticProgram qp = assemble_ocp(spec, xi);
  const OcpLayout lay = ocp_layout(spec);
  OcpSolution out;
  out.certificate = solve_qp(qp, tol);
  switch (out.certificate.status) {
    case SolveStatus::optimal: break;
    case SolveStatus::infeasible:
      throw Error(ErrorKind::infeasible, "control problem infeasible: the boxes cannot be met by any data combination");
    case SolveStatus::unbounded:
      throw Error(ErrorKind::unbounded, "control problem unbounded");
    case SolveStatus::numerical_failure:
      throw Error(ErrorKind::numerical, "control problem: solver could not certify optimality");
  }
  const Vector& x = out.certificate.primal;
  out.u = x.segment(lay.u.begin, lay.u.size);
  out.y = x.segment(lay.y.begin, lay.y.size) + spec.output_ref;
  if (spec.regularized()) {
    out.a_pm = x.segment(lay.a.begin, lay.a.size).cwiseMax(0.0);
    out.a = recover_signed(out.a_pm, tol.complementarity);
    out.split.regularization = spec.lambda * out.a_pm.sum();
  } else {
    out.a = x.segment(lay.a.begin, lay.a.size);
  }
  const Vector ey = out.y - spec.output_ref, eu = out.u - spec.input_ref;
  out.split.tracking = ey.dot(spec.output_weight * ey);
  out.split.input = eu.dot(spec.input_weight * eu);
  out.cost = out.split.total();
  return out;
}

std::vector<OcpSolution> solve_ocp_batch(const OcpSpec& spec, const Matrix& xis, const ToleranceConfig& tol,
                                         Execution exec) {
  const Index k = xis.cols();
  std::vector<OcpSolution> out(static_cast<size_t>(k));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(k));
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (Index i = 0; i < k; ++i) {
    try {
      out[static_cast<size_t>(i)] = solve_ocp(spec, xis.col(i), tol);
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

Vector receding_horizon_step(const OcpSpec& spec, const Vector& xi, const ToleranceConfig& tol) {
  return solve_ocp(spec, xi, tol).u.head(spec.dict.dims().m);
}

OcpSpec ocp_spec_from_json(const nlohmann::json& j, DataDictionary dict) {
  reject_unknown_keys(j, {"dictionary", "N", "N_p", "Q", "R", "lambda", "u_ref", "y_ref", "u_box", "y_box",
                          "allow_unregularized"},
                      "ocp spec");
  try {
    const auto& dims = dict.dims();
    if (j.contains("N") && j["N"].get<Index>() != dims.horizon)
      throw Error(ErrorKind::parse, "ocp spec: N differs from the data matrix horizon");
    if (j.contains("N_p") && j["N_p"].get<Index>() != dims.past)
      throw Error(ErrorKind::parse, "ocp spec: N_p differs from the data matrix past window");
    Matrix q = matrix_from_json(j.at("Q"), dims.output_rows());
    Matrix r = j.contains("R") ? matrix_from_json(j["R"], dims.input_rows())
                               : Matrix(Matrix::Zero(dims.input_rows(), dims.input_rows()));
    OcpSpec spec = OcpSpec::make(std::move(dict), std::move(q), std::move(r), number_from_json(j.at("lambda")));
    if (j.contains("u_ref")) spec.input_ref = vector_from_json(j["u_ref"]);
    if (j.contains("y_ref")) spec.output_ref = vector_from_json(j["y_ref"]);
    if (j.contains("u_box")) spec.input_box = box_from_json(j["u_box"], "u_box");
    if (j.contains("y_box")) spec.output_box = box_from_json(j["y_box"], "y_box");
    if (j.contains("allow_unregularized")) spec.allow_unregularized = j["allow_unregularized"].get<bool>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("ocp spec: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::parse) throw;
    throw Error(ErrorKind::parse, std::string("ocp spec: ") + e.what());
  }
}

nlohmann::json to_json(const OcpSolution& s) {
  return {{"u", vector_to_json(s.u)},
          {"y", vector_to_json(s.y)},
          {"a_pm", vector_to_json(s.a_pm)},
          {"a", vector_to_json(s.a)},
          {"cost", s.cost},
          {"cost_split", {{"tracking", s.split.tracking}, {"input", s.split.input}, {"regularization", s.split.regularization}}},
          {"certificate",
           {{"status", std::string(to_string(s.certificate.status))},
            {"iterations", s.certificate.iterations},
            {"kkt",
             {{"stationarity", s.certificate.kkt.stationarity},
              {"primal_feasibility", s.certificate.kkt.primal_feasibility},
              {"complementarity", s.certificate.kkt.complementarity},
              {"dual_feasibility", s.certificate.kkt.dual_feasibility},
              {"scale", s.certificate.kkt.scale}}}}}};
}

}  // namespace dpc
