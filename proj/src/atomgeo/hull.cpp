#include "dpc/atomgeo.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dpc::hull {
namespace {

using Point2 = Eigen::Vector2d;

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

class QuickHull2d {
 public:
  QuickHull2d(const Matrix& pts, double eps) : pts_(pts), eps_(eps) {}

  std::vector<Index> run(const std::vector<Index>& ids) {
    auto lex_less = [&](Index i, Index j) {
      return pts_(0, i) < pts_(0, j) || (pts_(0, i) == pts_(0, j) && pts_(1, i) < pts_(1, j));
    };
    const Index a = *std::min_element(ids.begin(), ids.end(), lex_less);
    const Index b = *std::max_element(ids.begin(), ids.end(), lex_less);
    hull_.insert(a);
    hull_.insert(b);
    std::vector<Index> upper, lower;
    for (Index i : ids) {
      const double c = cross(p(a), p(b), p(i));
      if (c > eps_) upper.push_back(i);
      else if (c < -eps_) lower.push_back(i);
    }
    expand(a, b, upper);
    expand(b, a, lower);
    return {hull_.begin(), hull_.end()};
  }

 private:
  Point2 p(Index i) const { return pts_.col(i); }

  // Points in `side` lie strictly left of a->b.
  void expand(Index a, Index b, const std::vector<Index>& side) {
    if (side.empty()) return;
    Index far = side.front();
    double best = -1.0;
    for (Index i : side) {
      const double c = cross(p(a), p(b), p(i));
      if (c > best) best = c, far = i;
    }
    hull_.insert(far);
    std::vector<Index> left_a, left_b;
    for (Index i : side) {
      if (cross(p(a), p(far), p(i)) > eps_) left_a.push_back(i);
      else if (cross(p(far), p(b), p(i)) > eps_) left_b.push_back(i);
    }
    expand(a, far, left_a);
    expand(far, b, left_b);
  }

  const Matrix& pts_;
  double eps_;
  std::set<Index> hull_;
};

// Coordinates of the points in their affine hull, dimension d <= rows.
Matrix affine_coordinates(const Matrix& points, double rel_tol, Vector& centroid) {
  centroid = points.rowwise().mean();
  const Matrix centered = points.colwise() - centroid;
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  Index d = 0;
  const double smax = s.size() > 0 ? s(0) : 0.0;
  while (d < s.size() && s(d) > 10.0 * rel_tol * smax) ++d;
  return svd.matrixU().leftCols(d).transpose() * centered;
}

std::vector<Index> vertices_2d(const Matrix& pts, const std::vector<Index>& ids, double eps) {
  QuickHull2d qh(pts, eps);
  return qh.run(ids);
}

std::vector<Index> vertices_3d(const Matrix& pts, double rel_tol) {
  const Index k = pts.cols();
  const double scale = std::max(1.0, pts.cwiseAbs().maxCoeff());
  const double delta = rel_tol * scale;
  std::set<Index> vertices;
  std::set<std::vector<Index>> faces;
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j)
      for (Index l = j + 1; l < k; ++l) {
        const Eigen::Vector3d e1 = pts.col(j) - pts.col(i), e2 = pts.col(l) - pts.col(i);
        Eigen::Vector3d nrm = e1.cross(e2);
        if (nrm.norm() <= delta * scale) continue;
        nrm.normalize();
        const Vector dist = nrm.transpose() * (pts.colwise() - pts.col(i));
        if (dist.maxCoeff() > delta && dist.minCoeff() < -delta) continue;
        std::vector<Index> face;
        for (Index q = 0; q < k; ++q)
          if (std::abs(dist(q)) <= delta) face.push_back(q);
        if (!faces.insert(face).second) continue;
        // In-plane coordinates.
        const Eigen::Vector3d u = e1.normalized();
        const Eigen::Vector3d v = nrm.cross(u);
        Matrix plane(2, k);
        plane.setZero();
        for (Index q : face) {
          const Eigen::Vector3d r = pts.col(q) - pts.col(i);
          plane(0, q) = u.dot(r);
          plane(1, q) = v.dot(r);
        }
        for (Index q : vertices_2d(plane, face, delta * scale)) vertices.insert(q);
      }
  return {vertices.begin(), vertices.end()};
}

}  // namespace

std::vector<Index> vertices_lowdim(const Matrix& points, double rel_tol) {
  if (points.rows() > 3)
    throw Error(ErrorKind::invalid_argument, "low-dimensional hull needs dimension <= 3, got " +
                                                 std::to_string(points.rows()));
  if (points.cols() == 0) return {};
  Vector centroid;
  const Matrix coords = affine_coordinates(points, rel_tol, centroid);
  const Index d = coords.rows();
  const double scale = std::max(1.0, coords.cwiseAbs().maxCoeff());
  std::vector<Index> ids(static_cast<size_t>(points.cols()));
  for (Index i = 0; i < points.cols(); ++i) ids[static_cast<size_t>(i)] = i;

  if (d == 0) return {0};
  if (d == 1) {
    Index lo = 0, hi = 0;
    for (Index i = 1; i < coords.cols(); ++i) {
      if (coords(0, i) < coords(0, lo)) lo = i;
      if (coords(0, i) > coords(0, hi)) hi = i;
    }
    return lo < hi ? std::vector<Index>{lo, hi} : std::vector<Index>{hi, lo};
  }
  if (d == 2) return vertices_2d(coords, ids, rel_tol * scale * scale);
  return vertices_3d(coords, rel_tol);
}

std::vector<Index> ordered_vertices_2d(const Matrix& points, double rel_tol) {
  if (points.rows() != 2) throw Error(ErrorKind::invalid_argument, "ordered hull needs planar points");
  std::vector<Index> v = vertices_lowdim(points, rel_tol);
  if (v.size() < 3) return v;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (Index i : v) c += points.col(i);
  c /= static_cast<double>(v.size());
  auto angle = [&](Index i) { return std::atan2(points(1, i) - c.y(), points(0, i) - c.x()); };
  std::sort(v.begin(), v.end(), [&](Index a, Index b) { return angle(a) < angle(b); });
  return v;
}

}  // namespace dpc::hull
