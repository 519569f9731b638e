#include "doctest.h"

#include "dpc/atomgeo.hpp"
#include "dpc/ocp.hpp"
#include "dpc/predictor.hpp"
#include "test_support.hpp"

#include <nlohmann/json.hpp>

#include <set>

using namespace dpc;

namespace {

PredictorSpec quadratic_spec(unsigned seed, double lambda = 100.0) {
  test::Rng rng(seed);
  DataDictionary full = build_dictionary(test::quadratic_samples(rng, 20), 0, 1, Windowing::one_column_per_record);
  return {prune_dictionary(full).dictionary, Matrix::Identity(1, 1), lambda};
}

Box square(double h) { return {Vector::Constant(2, -h), Vector::Constant(2, h)}; }

Matrix uniform_probes(test::Rng& rng, Index dim, Index count, double h) {
  Matrix p(dim, count);
  for (Index i = 0; i < count; ++i) p.col(i) = rng.uniform_vector(dim, -h, h);
  return p;
}

}  // namespace

TEST_CASE("parametric program matrices and the reduced form") {
  PredictorSpec spec = quadratic_spec(1);
  MpqpForm f = MpqpForm::build(spec);
  const Index k = spec.atoms();
  CHECK(f.hessian.rows() == 1 + k);
  CHECK(f.linear.tail(k) == Vector::Constant(k, 100.0));
  CHECK(f.eq.rows() == 3);
  CHECK(numeric_rank(f.eq) == 3);
  ReducedMpqpForm r = ReducedMpqpForm::build(f);
  CHECK((f.eq * r.nullspace).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((f.eq * r.particular - f.param).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(r.nullspace.cols() == 1 + k - 3);
}

TEST_CASE("predictor rejects semidefinite output weights") {
  PredictorSpec spec = quadratic_spec(1);
  spec.output_weight(0, 0) = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.output_weight(0, 0) = 1.0;
  spec.lambda = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("pointwise predictor: origin, oddness and agreement with the control problem") {
  PredictorSpec spec = quadratic_spec(2);
  auto origin = predict_pointwise(spec, Vector::Zero(2));
  CHECK(origin.y.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(origin.support.empty());

  test::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    Vector z = rng.uniform_vector(2, -1, 1);
    CHECK((predict_pointwise(spec, z).y + predict_pointwise(spec, -z).y).cwiseAbs().maxCoeff() <= 1e-7);
  }

  // Same problem through the control module with u pinned by a tight box.
  auto ocp = OcpSpec::make(spec.dict, Matrix::Identity(1, 1), Matrix::Zero(1, 1), spec.lambda);
  ocp.input_box = {Vector::Constant(1, 0.5), Vector::Constant(1, 0.5)};
  auto sol = solve_ocp(ocp, Vector::Constant(1, 0.5));
  CHECK(std::abs(sol.y(0) - predict_pointwise(spec, Vector::Constant(2, 0.5)).y(0)) <= 1e-7);
}

TEST_CASE("single atom pair: two half-line regions, as classified by probes") {
  Matrix d(2, 1);
  d << 1.0, 2.0;
  DataDictionary dict({Setting::state_space, 0, 1, 1, 0, 1}, d, {{0, 0}});
  PredictorSpec spec{dict, Matrix::Identity(1, 1), 3.0};
  Box box{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
  PwaFunction pwa = enumerate_pwa(spec, box);

  std::set<std::vector<Index>> probe_supports;
  for (int i = -10; i <= 10; ++i) {
    if (i == 0) continue;
    Vector z = Vector::Constant(1, 0.1 * i);
    auto pt = predict_pointwise(spec, z);
    probe_supports.insert(pt.support);
    CHECK(pt.y(0) == doctest::Approx(2.0 * z(0)));
    auto ev = evaluate_pwa(pwa, z);
    CHECK(pwa.regions[static_cast<size_t>(ev.region)].support == pt.support);
  }
  CHECK(pwa.regions.size() == probe_supports.size());
  CHECK(pwa.regions.size() == 2);
  CHECK(evaluate_pwa(pwa, Vector::Zero(1)).y(0) == 0.0);
}

TEST_CASE("explicit predictor matches pointwise solves on the plane") {
  PredictorSpec spec = quadratic_spec(4);
  PwaFunction pwa = enumerate_pwa(spec, square(1.0));
  CHECK(pwa.complete);
  CHECK(pwa.regions.size() > 1);

  test::Rng rng(5);
  double worst = 0.0;
  for (int t = 0; t < 400; ++t) {
    Vector z = rng.uniform_vector(2, -1, 1);
    auto pt = predict_pointwise(spec, z);
    auto ev = evaluate_pwa(pwa, z);
    worst = std::max(worst, (ev.y - pt.y).cwiseAbs().maxCoeff());
    // The pointwise support belongs to some region containing z.
    bool linked = false;
    for (Index r : containing_regions(pwa, z)) linked = linked || pwa.regions[static_cast<size_t>(r)].support == pt.support;
    CHECK(linked);
  }
  CHECK(worst <= 1e-6);

  auto ev0 = evaluate_pwa(pwa, Vector::Zero(2));
  CHECK(ev0.y.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(evaluate_pwa(pwa, Vector::Constant(2, 5.0)), Error);
}

TEST_CASE("region interiors use a constant set of atoms") {
  PredictorSpec spec = quadratic_spec(6);
  PwaFunction pwa = enumerate_pwa(spec, square(1.0));
  test::Rng rng(7);
  for (const auto& reg : pwa.regions) {
    for (int t = 0; t < 10; ++t) {
      Vector z = reg.chebyshev_center + 0.5 * reg.chebyshev_radius * rng.uniform_vector(2, -0.7, 0.7);
      REQUIRE(reg.contains(z, 0.0));
      CHECK(predict_pointwise(spec, z).support == reg.support);
      CHECK((reg.generator_gain * z + reg.generator_offset).minCoeff() >= -1e-9);
    }
  }
}

TEST_CASE("maps agree across shared facets") {
  PredictorSpec spec = quadratic_spec(8);
  PwaFunction pwa = enumerate_pwa(spec, square(1.0));
  Index shared = 0;
  for (const auto& reg : pwa.regions) {
    for (Index k = 0; k < reg.C.rows(); ++k) {
      const Vector c = reg.C.row(k).transpose();
      const Vector zf = reg.chebyshev_center + (reg.d(k) - c.dot(reg.chebyshev_center)) * c;
      if (!reg.contains(zf, 1e-9)) continue;
      auto owners = containing_regions(pwa, zf, 1e-9);
      for (Index o : owners) {
        CHECK((pwa.regions[static_cast<size_t>(o)].predict(zf) - reg.predict(zf)).cwiseAbs().maxCoeff() <= 1e-7);
        shared += owners.size() > 1;
      }
    }
  }
  CHECK(shared > 0);
}

TEST_CASE("serial and parallel enumeration agree") {
  PredictorSpec spec = quadratic_spec(9);
  auto a = enumerate_pwa(spec, square(1.0), default_tolerances(), {2'000'000, Execution::serial});
  auto b = enumerate_pwa(spec, square(1.0), default_tolerances(), {2'000'000, Execution::parallel});
  REQUIRE(a.regions.size() == b.regions.size());
  for (size_t i = 0; i < a.regions.size(); ++i) {
    CHECK(a.regions[i].support == b.regions[i].support);
    CHECK(a.regions[i].C == b.regions[i].C);
  }
  auto cut = enumerate_pwa(spec, square(1.0), default_tolerances(), {5, Execution::serial});
  CHECK_FALSE(cut.complete);
  CHECK(cut.candidates_examined == 5);

  // Brute-force count of sign-consistent subsets with nz <= |S| <= rows.
  const Index l = spec.dict.columns();
  REQUIRE(l <= 12);
  Index brute = 0;
  for (unsigned long mask = 0; mask < (1UL << (2 * l)); ++mask) {
    const unsigned long plus = mask & ((1UL << l) - 1), minus = mask >> l;
    const Index size = __builtin_popcountl(mask);
    if ((plus & minus) == 0 && size >= spec.z_dim() && size <= spec.dict.rows()) ++brute;
  }
  CHECK(a.candidates_examined == brute);
  CHECK(candidate_support_count(spec) == doctest::Approx(static_cast<double>(brute)));
}

TEST_CASE("regularization scaling: active sets and optimizers") {
  PredictorSpec spec = quadratic_spec(10);
  test::Rng rng(11);
  Matrix probes = uniform_probes(rng, 2, 100, 1.0);
  for (double eta : {1.0, 0.5, 2.0, 3.0, 10.0}) {
    auto rep = verify_scaling(spec, eta, probes);
    CHECK(rep.passed());
    CHECK(rep.max_optimizer_deviation <= 1e-6);
  }
  CHECK_THROWS_AS(verify_scaling(spec, 0.0, probes), Error);
}

TEST_CASE("critical regions scale with the regularization weight") {
  PredictorSpec spec = quadratic_spec(12, 100.0);
  PredictorSpec half = spec;
  half.lambda = 50.0;
  PwaFunction a = enumerate_pwa(spec, square(1.0));
  PwaFunction b = enumerate_pwa(half, square(0.5));
  auto rep = compare_scaled_regions(a, b, 0.5);
  CHECK(rep.passed());
  CHECK(a.regions.size() == b.regions.size());
  // A different weight does not reproduce the same regions.
  half.lambda = 70.0;
  CHECK_FALSE(compare_scaled_regions(a, enumerate_pwa(half, square(0.5)), 0.5).passed());
}

TEST_CASE("oddness: pointwise report and negated regions") {
  PredictorSpec spec = quadratic_spec(13);
  test::Rng rng(14);
  auto rep = verify_symmetry(spec, uniform_probes(rng, 2, 100, 1.0));
  CHECK(rep.passed());
  CHECK(rep.origin_norm <= 1e-8);
  PwaFunction pwa = enumerate_pwa(spec, square(1.0));
  auto pairing = check_negated_pairing(pwa);
  CHECK(pairing.passed());
  // An asymmetric box breaks the pairing.
  Box skew{Vector::Constant(2, -1.0), Vector::Constant(2, 0.6)};
  CHECK_FALSE(check_negated_pairing(enumerate_pwa(spec, skew)).passed());
}

TEST_CASE("pwa json export") {
  PredictorSpec spec = quadratic_spec(15);
  PwaFunction pwa = enumerate_pwa(spec, square(1.0));
  auto j = to_json(pwa);
  CHECK(j["regions"].size() == pwa.regions.size());
  CHECK(j["dims"]["z"] == 2);
  CHECK(j["lambda"] == 100.0);
  CHECK(j["regions"][0].contains("support"));
  CHECK(j["regions"][0]["C"][0].size() == 2);
}
