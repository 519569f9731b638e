#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  infeasible,
  unbounded,
  numerical,
  span_violation,
  uncovered,
  parse,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::unbounded: return "unbounded";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::span_violation: return "span_violation";
    case ErrorKind::uncovered: return "uncovered";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

/// Library error carrying a category the CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dpc
