#include "doctest.h"

#include "dpc/atomgeo.hpp"
#include "test_support.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

using namespace dpc;

namespace {

// Any r x l matrix as a data matrix (io layout, m = 0, p = 1).
DataDictionary raw_dictionary(const Matrix& d) {
  DictionaryDims dims{Setting::io, 0, 1, std::nullopt, 1, d.rows() - 1};
  std::vector<ColumnProvenance> prov;
  for (Index c = 0; c < d.cols(); ++c) prov.push_back({c, 0});
  return DataDictionary(dims, d, prov);
}

AtomSet originals(const Matrix& d) { return AtomSet::from_dictionary(raw_dictionary(d)); }

Matrix cols(std::initializer_list<std::initializer_list<double>> c) {
  Matrix m(static_cast<Index>(c.begin()->size()), static_cast<Index>(c.size()));
  Index j = 0;
  for (const auto& col : c) {
    Index i = 0;
    for (double v : col) m(i++, j) = v;
    ++j;
  }
  return m;
}

std::vector<Index> retained_indices(const ExtremePointResult& r) {
  std::vector<Index> out;
  for (size_t i = 0; i < r.retained.size(); ++i)
    if (r.retained[i]) out.push_back(static_cast<Index>(i));
  return out;
}

// Is w in conv(points)?  Plain feasibility LP built here.
bool in_hull(const Vector& w, const Matrix& pts) {
  const Index k = pts.cols(), r = pts.rows();
  LinearProgram lp;
  lp.cost = Vector::Zero(k);
  lp.constraints = LinearConstraints::unconstrained(k);
  lp.constraints.lower = Vector::Zero(k);
  lp.constraints.eq_matrix.resize(r + 1, k);
  lp.constraints.eq_matrix << pts, Matrix::Ones(1, k);
  lp.constraints.eq_rhs.resize(r + 1);
  lp.constraints.eq_rhs << w, 1.0;
  return solve_lp(lp).optimal();
}

// Gauge by bisection on t: smallest t with w in t * conv(points).
double bisection_gauge(const Vector& w, const Matrix& pts) {
  double lo = 0.0, hi = 1.0;
  while (!in_hull(w / hi, pts)) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid > 0.0 && in_hull(w / mid, pts)) hi = mid; else lo = mid;
  }
  return hi;
}

}  // namespace

TEST_CASE("mirror doubles the atom set and labels signs") {
  auto m = mirror(originals(cols({{1, 0}})));
  CHECK(m.set.size() == 2);
  CHECK(m.set.atom(0) == Vector((Vector(2) << 1, 0).finished()));
  CHECK(m.set.atom(1) == Vector((Vector(2) << -1, 0).finished()));
  CHECK(m.set.labels()[1] == AtomLabel{0, -1});
  CHECK(m.report.clean());

  test::Rng rng(11);
  auto eight = mirror(originals(rng.gaussian_matrix(2, 8)));
  CHECK(eight.report.candidates == 16);
  CHECK(eight.set.size() == 16);
  CHECK(eight.set.kind() == AtomKind::mirrored);
  CHECK(eight.set.centrally_symmetric());
}

TEST_CASE("mirror removes antipodal pairs, duplicates and zero atoms") {
  auto m = mirror(originals(cols({{1, 2}, {-1, -2}})));
  CHECK(m.set.size() == 2);
  REQUIRE(m.report.antipodal.size() == 1);
  CHECK(m.report.antipodal[0] == std::pair<Index, Index>{0, 1});

  auto d = mirror(originals(cols({{0, 0}, {3, 1}, {3, 1}, {1, 1}})));
  CHECK(d.set.size() == 4);
  CHECK(d.report.zero_atoms == std::vector<Index>{0});
  CHECK(d.report.duplicates == std::vector<std::pair<Index, Index>>{{1, 2}});
  CHECK(d.set.positive_sources() == std::vector<Index>{1, 3});
}

TEST_CASE("collinear interior points are pruned") {
  auto orig = originals(cols({{1, 0}, {0.4, 0}}));
  auto m = mirror(orig);
  for (auto method : {HullMethod::lp_test, HullMethod::quickhull_lowdim}) {
    auto ext = extreme_points(m.set, method);
    CHECK(ext.pruned.size() == 2);
    CHECK(ext.pruned.positive_sources() == std::vector<Index>{0});
    auto bar = unmirror(ext.pruned, orig);
    CHECK(bar.size() == 1);
    CHECK(bar.atom(0)(0) == 1.0);
    CHECK(bar.kind() == AtomKind::pruned);
  }
}

TEST_CASE("lp certificate reproduces each discarded atom") {
  test::Rng rng(5);
  auto m = mirror(originals(rng.gaussian_matrix(3, 15)));
  auto ext = extreme_points(m.set);
  Index discarded = 0;
  for (Index j = 0; j < m.set.size(); ++j) {
    if (ext.retained[static_cast<size_t>(j)]) continue;
    ++discarded;
    const Vector& th = ext.certificates[static_cast<size_t>(j)];
    CHECK(th.minCoeff() >= 0.0);
    CHECK(th(j) == 0.0);
    CHECK(std::abs(th.sum() - 1.0) < 1e-8);
    CHECK((m.set.atoms() * th - m.set.atom(j)).norm() < 1e-8);
  }
  CHECK(discarded > 0);
}

TEST_CASE("facet points are removed and counted") {
  auto m = mirror(originals(cols({{1, 0}, {0, 1}, {0.5, 0.5}, {0.1, 0.2}})));
  auto ext = extreme_points(m.set);
  CHECK(ext.pruned.positive_sources() == std::vector<Index>{0, 1});
  CHECK(ext.boundary_removed == 2);  // +-(0.5, 0.5)
  CHECK(ext.symmetry_repairs == 0);
}

TEST_CASE("lp test and quickhull agree on random atoms in R^3 and R^2") {
  for (unsigned seed = 1; seed <= 6; ++seed) {
    test::Rng rng(seed);
    auto m3 = mirror(originals(rng.gaussian_matrix(3, 30)));
    CHECK(retained_indices(extreme_points(m3.set, HullMethod::lp_test)) ==
          retained_indices(extreme_points(m3.set, HullMethod::quickhull_lowdim)));
    auto m2 = mirror(originals(rng.gaussian_matrix(2, 25)));
    CHECK(retained_indices(extreme_points(m2.set, HullMethod::lp_test)) ==
          retained_indices(extreme_points(m2.set, HullMethod::quickhull_lowdim)));
  }
}

TEST_CASE("quickhull on a flat set embedded in R^3") {
  test::Rng rng(9);
  Matrix basis = rng.gaussian_matrix(3, 2);
  auto m = mirror(originals(basis * rng.gaussian_matrix(2, 12)));
  CHECK(retained_indices(extreme_points(m.set, HullMethod::lp_test)) ==
        retained_indices(extreme_points(m.set, HullMethod::quickhull_lowdim)));
}

TEST_CASE("ordered 2d hull is counter-clockwise") {
  Matrix sq = cols({{1, 1}, {-1, 1}, {0.2, 0.1}, {-1, -1}, {1, -1}});
  auto v = hull::ordered_vertices_2d(sq);
  REQUIRE(v.size() == 4);
  double area = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const auto a = sq.col(v[i]), b = sq.col(v[(i + 1) % v.size()]);
    area += a(0) * b(1) - a(1) * b(0);
  }
  CHECK(area == doctest::Approx(8.0));
}

TEST_CASE("serial and parallel pruning agree") {
  test::Rng rng(21);
  auto m = mirror(originals(rng.gaussian_matrix(6, 40)));
  auto s = extreme_points(m.set, HullMethod::lp_test, default_tolerances(), Execution::serial);
  auto p = extreme_points(m.set, HullMethod::lp_test, default_tolerances(), Execution::parallel);
  CHECK(s.retained == p.retained);
  CHECK(s.pruned.atoms() == p.pruned.atoms());
  for (size_t i = 0; i < s.certificates.size(); ++i) CHECK(s.certificates[i] == p.certificates[i]);
}

TEST_CASE("pruning is idempotent and preserves central symmetry") {
  test::Rng rng(33);
  for (Index r : {2, 3, 5}) {
    auto m = mirror(originals(rng.gaussian_matrix(r, 20)));
    auto once = extreme_points(m.set);
    auto twice = extreme_points(once.pruned);
    CHECK(once.pruned.centrally_symmetric());
    CHECK(std::all_of(twice.retained.begin(), twice.retained.end(), [](bool b) { return b; }));
    CHECK(twice.pruned.atoms() == once.pruned.atoms());
    CHECK(once.pruned.size() % 2 == 0);
  }
}

TEST_CASE("extreme_points rejects degenerate and unmirrored input") {
  AtomSet zeros(Matrix::Zero(2, 2), {{0, 1}, {0, -1}}, AtomKind::mirrored);
  CHECK_THROWS_AS(extreme_points(zeros), Error);
  CHECK_THROWS_AS(extreme_points(originals(cols({{1, 0}}))), Error);
  test::Rng rng(1);
  auto m = mirror(originals(rng.gaussian_matrix(4, 6)));
  CHECK_THROWS_AS(extreme_points(m.set, HullMethod::quickhull_lowdim), Error);
  CHECK_THROWS_AS(AtomSet(cols({{1, 0}}), {{0, 1}}, AtomKind::mirrored), Error);
}

TEST_CASE("unmirror rejects mismatched labels") {
  auto orig = originals(cols({{1, 0}, {0, 1}}));
  AtomSet bogus(cols({{2, 0}, {-2, 0}}), {{0, 1}, {0, -1}}, AtomKind::pruned_mirrored);
  CHECK_THROWS_AS(unmirror(bogus, orig), Error);
  AtomSet missing(cols({{1, 0}, {-1, 0}}), {{7, 1}, {7, -1}}, AtomKind::pruned_mirrored);
  CHECK_THROWS_AS(unmirror(missing, orig), Error);
}

TEST_CASE("atomic norm basic values") {
  test::Rng rng(2);
  auto m = mirror(originals(rng.gaussian_matrix(2, 8)));
  auto ext = extreme_points(m.set);
  auto zero = atomic_norm(Vector::Zero(2), ext.pruned);
  CHECK(zero.value == 0.0);
  CHECK(zero.support.empty());
  for (Index i = 0; i < ext.pruned.size(); ++i)
    CHECK(atomic_norm(ext.pruned.atom(i), ext.pruned).value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("atomic norm of the unit square matches a bisection oracle") {
  Matrix corners = cols({{1, 1}, {1, -1}, {-1, -1}, {-1, 1}});
  AtomSet sq(corners, {{0, 1}, {1, 1}, {0, -1}, {1, -1}}, AtomKind::mirrored);
  test::Rng rng(4);
  for (int t = 0; t < 15; ++t) {
    Vector w = rng.gaussian_vector(2) * 2.0;
    auto g = atomic_norm(w, sq);
    CHECK(g.value == doctest::Approx(w.cwiseAbs().maxCoeff()).epsilon(1e-9));
    // The bisection oracle resolves the gauge only up to its membership LP's feasibility slack.
    CHECK(std::abs(g.value - bisection_gauge(w, corners)) < 1e-7 * std::max(1.0, g.value));
    CHECK((corners * g.coefficients - w).norm() < 1e-8);
    CHECK(g.coefficients.sum() == doctest::Approx(g.value));
  }
}

TEST_CASE("atomic norm is homogeneous and subadditive") {
  test::Rng rng(8);
  auto m = mirror(originals(rng.gaussian_matrix(4, 14)));
  auto ext = extreme_points(m.set);
  for (int t = 0; t < 10; ++t) {
    Vector w = rng.gaussian_vector(4), v = rng.gaussian_vector(4);
    const double nw = atomic_norm(w, ext.pruned).value;
    for (double a : {-2.0, -1.0, 0.5, 3.0})
      CHECK(std::abs(atomic_norm(a * w, ext.pruned).value - std::abs(a) * nw) < 1e-8);
    CHECK(atomic_norm(w + v, ext.pruned).value <= nw + atomic_norm(v, ext.pruned).value + 1e-8);
  }
}

TEST_CASE("atomic norm outside the span is an explicit error") {
  AtomSet line(cols({{1, 0}, {-1, 0}}), {{0, 1}, {0, -1}}, AtomKind::mirrored);
  try {
    atomic_norm((Vector(2) << 0, 1).finished(), line);
    FAIL("expected span violation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::span_violation);
  }
}

TEST_CASE("full-data LP equals the scaled pruned atomic norm") {
  test::Rng rng(17);
  Matrix d = rng.gaussian_matrix(2, 8);
  DataDictionary dict = raw_dictionary(d);
  PrunedData pd = prune_dictionary(dict);
  CHECK(pd.pruned.size() < 8);
  CHECK(pd.dictionary.columns() == pd.pruned.size());
  for (int t = 0; t < 50; ++t) {
    Vector w = rng.gaussian_vector(2) * 3.0;
    auto eff = trajectory_specific_effect(w, dict, pd.extreme.pruned, 100.0);
    CHECK(std::abs(eff.full_lp - eff.scaled_norm) < 1e-7 * std::max(1.0, eff.full_lp));
    CHECK(eff.discrepancy == doctest::Approx(std::abs(eff.full_lp - eff.scaled_norm)));
  }
  Vector w = rng.gaussian_vector(2);
  CHECK(trajectory_specific_effect(Vector::Zero(2), dict, 2.0).full_lp == 0.0);
  CHECK(trajectory_specific_effect(w, dict, 2.0).full_lp ==
        doctest::Approx(2.0 * trajectory_specific_effect(w, dict, 1.0).full_lp).epsilon(1e-10));
  CHECK_THROWS_AS(trajectory_specific_effect(w, dict, 0.0), Error);
}

TEST_CASE("conic membership examples") {
  AtomSet two(cols({{1, 0}, {0, 1}}), {{0, 1}, {1, 1}}, AtomKind::original);
  CHECK(conic_membership((Vector(2) << 1, 1).finished(), two));
  CHECK_FALSE(conic_membership((Vector(2) << -1, 1).finished(), two));
  AtomSet line(cols({{1, 0}, {-1, 0}}), {{0, 1}, {0, -1}}, AtomKind::mirrored);
  CHECK_FALSE(conic_membership((Vector(2) << 0, 1).finished(), line));
}

TEST_CASE("membership predicates agree on rank-deficient data") {
  test::Rng rng(44);
  Matrix basis = rng.gaussian_matrix(5, 3);
  DataDictionary dict = raw_dictionary(basis * rng.gaussian_matrix(3, 25));
  PrunedData pd = prune_dictionary(dict);
  int inside = 0;
  for (int t = 0; t < 100; ++t) {
    Vector w = t % 2 == 0 ? Vector(basis * rng.gaussian_vector(3)) : rng.gaussian_vector(5);
    auto p = membership_probe(w, pd);
    CHECK(p.agree());
    inside += p.span_original;
  }
  CHECK(inside == 50);
}

TEST_CASE("pruning report lists provenance and certificates") {
  test::Rng rng(3);
  Matrix d = rng.gaussian_matrix(2, 8);
  d.col(7) = -d.col(2);
  DataDictionary dict = raw_dictionary(d);
  PrunedData pd = prune_dictionary(dict);
  auto j = pruning_report(pd, dict);
  CHECK(j["method"] == "lp_test");
  CHECK(j["candidates"] == 16);
  CHECK(j["dedup"]["antipodal"].size() == 1);
  CHECK(j["retained"].size() == static_cast<size_t>(pd.pruned.size()));
  CHECK(j["retained"].size() + j["discarded"].size() + j["dedup"]["columns"].size() == 8);
  for (const auto& e : j["discarded"]) {
    CHECK(e.contains("record"));
    CHECK(!e["certificate"].empty());
  }
}

TEST_CASE("pruning exact rank-deficient LTI data") {
  const auto sys = test::second_order_siso();
  for (unsigned seed : {3u, 11u, 21u}) {
    test::Rng rng(seed);
    DataDictionary dict =
        build_dictionary(test::lti_bank(sys, rng, 1, 40), 2, 2, Windowing::hankel_sliding, 2);
    REQUIRE(numeric_rank(dict.matrix()) == 6);
    PrunedData pd = prune_dictionary(dict);
    CHECK(pd.dictionary.columns() >= 1);
    for (Index i = 0; i < pd.extreme.pruned.size(); ++i)
      CHECK(std::abs(atomic_norm(pd.extreme.pruned.atom(i), pd.extreme.pruned).value - 1.0) <= 1e-8);
    for (int k = 0; k < 10; ++k) {
      const Vector w = dict.matrix() * rng.gaussian_vector(dict.columns());
      const auto e = trajectory_specific_effect(w, dict, pd.extreme.pruned, 2.0);
      CHECK(e.discrepancy <= 1e-7);
    }
  }
}
