#include "dpc/json_eigen.hpp"
#include "dpc/numsolve.hpp"

namespace dpc {

namespace {
nlohmann::json constraints_json(const LinearConstraints& c) {
  return {{"ineq_matrix", matrix_to_json(c.ineq_matrix)},
          {"ineq_rhs", vector_to_json(c.ineq_rhs)},
          {"eq_matrix", matrix_to_json(c.eq_matrix)},
          {"eq_rhs", vector_to_json(c.eq_rhs)},
          {"lower", vector_to_json(c.lower)}};
}
}  // namespace

nlohmann::json to_json(const LinearProgram& lp) {
  return {{"type", "lp"}, {"cost", vector_to_json(lp.cost)}, {"constraints", constraints_json(lp.constraints)}};
}

nlohmann::json to_json(const QuadraticProgram& qp) {
  return {{"type", "qp"},
          {"hessian", matrix_to_json(qp.hessian)},
          {"linear", vector_to_json(qp.linear)},
          {"constraints", constraints_json(qp.constraints)}};
}

nlohmann::json to_json(const SolveResult& r) {
  return {{"status", std::string(to_string(r.status))},
          {"primal", vector_to_json(r.primal)},
          {"duals_ineq", vector_to_json(r.duals_ineq)},
          {"duals_eq", vector_to_json(r.duals_eq)},
          {"duals_lower", vector_to_json(r.duals_lower)},
          {"objective", r.objective},
          {"iterations", r.iterations},
          {"kkt",
           {{"stationarity", r.kkt.stationarity},
            {"primal_feasibility", r.kkt.primal_feasibility},
            {"complementarity", r.kkt.complementarity},
            {"dual_feasibility", r.kkt.dual_feasibility},
            {"scale", r.kkt.scale}}}};
}

}  // namespace dpc
