#include "dpc/numsolve.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>

namespace dpc {

Index numeric_rank(const Matrix& m, const RankPolicy& policy) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  double threshold = policy.absolute.value_or(
      static_cast<double>(std::max(m.rows(), m.cols())) * std::numeric_limits<double>::epsilon() * sv(0));
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) ++rank;
  }
  return rank;
}

Matrix null_space(const Matrix& m, double rel_tol) {
  const Index n = m.cols();
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  double threshold = sv.size() > 0 ? rel_tol * std::max(1.0, sv(0)) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

}  // namespace dpc
