#include "doctest.h"

#include "dpc/atomgeo.hpp"
#include "dpc/simcore.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace dpc;

namespace {

Matrix eye(Index n) { return Matrix::Identity(n, n); }

Plant siso_plant() {
  const auto s = test::second_order_siso();
  return Plant::lti(s.a, s.b, s.c, s.d);
}

DataDictionary pruned_quadratic(std::uint64_t seed) {
  DataDictionary full = build_dictionary(protocols::quadratic_plant_samples(seed), 0, 1,
                                         Windowing::one_column_per_record);
  return prune_dictionary(full).dictionary;
}

}  // namespace

TEST_CASE("generator follows the standard engine and is reproducible") {
  Rng a(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = a.next();
  CHECK(v == 9981545732273789042ULL);  // reference value required of std::mt19937_64

  Rng b(17), c(17);
  for (int i = 0; i < 100; ++i) CHECK(b.normal() == c.normal());
  CHECK(Rng::algorithm == "mt19937_64");
}

TEST_CASE("uniform and normal transforms have the right moments") {
  Rng rng(3);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, lo = 1, hi = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    su += u;
    su2 += u * u;
    const double g = rng.normal();
    sn += g;
    sn2 += g * g;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(su2 / n - (su / n) * (su / n) == doctest::Approx(1.0 / 12.0).epsilon(0.02));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("distributions") {
  Rng rng(9);
  auto levels = Distribution::prbs({-1.0, 1.0});
  std::set<double> seen;
  for (int i = 0; i < 200; ++i) seen.insert(levels.sample(rng));
  CHECK(seen == std::set<double>{-1.0, 1.0});
  auto box = Distribution::uniform_on(2.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double x = box.sample(rng);
    CHECK(x >= 2.0);
    CHECK(x < 3.0);
  }
  CHECK_THROWS_AS(Distribution::uniform_on(1.0, 1.0).validate(), Error);
  CHECK_THROWS_AS(Distribution::prbs({}).validate(), Error);
  CHECK_THROWS_AS(Distribution::gaussian(0.0, -1.0).validate(), Error);
}

TEST_CASE("quadratic plant map") {
  Plant p = Plant::scalar_quadratic();
  CHECK(p.f(0.0, 0.0) == -1.0);
  CHECK(p.f(1.0, 1.0) == 3.0);
  CHECK(p.f(-0.5, 0.5) == 0.0);
  CHECK(p.setting() == Setting::state_space);
  CHECK(p.step(Vector::Constant(1, 1.0), Vector::Constant(1, -1.0))(0) == 3.0);

  Plant cubic = Plant::custom_polynomial({{1.0, 3, 0}, {0.5, 1, 1}});
  CHECK(cubic.f(2.0, 3.0) == doctest::Approx(8.0 + 3.0));
  CHECK_THROWS_AS(Plant::custom_polynomial({{1.0, -1, 0}}), Error);
  CHECK_THROWS_AS((void)siso_plant().f(0, 0), Error);
}

TEST_CASE("lti collection matches an independent simulation") {
  const auto sys = test::second_order_siso();
  ExcitationSpec ex;
  ex.input = Distribution::gaussian(0.0, 1.0);
  ex.initial_state = Distribution::gaussian(0.0, 1.0);
  ex.horizon = 30;
  ex.records = 3;
  ex.seed = 42;
  TrajectoryBank bank = collect(siso_plant(), ex);
  REQUIRE(bank.records.size() == 3);
  Rng rng(42);
  for (const auto& r : bank.records) {
    Vector x0 = ex.initial_state.sample(rng, 2);
    Matrix u(1, 30);
    for (Index k = 0; k < 30; ++k) u(0, k) = ex.input.sample(rng);
    CHECK(r.inputs == u);
    CHECK((r.outputs - sys.simulate(x0, u)).cwiseAbs().maxCoeff() < 1e-14);
  }

  TrajectoryBank again = collect(siso_plant(), ex);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.records[i].outputs == bank.records[i].outputs);
  ex.seed = 43;
  CHECK(collect(siso_plant(), ex).records[0].inputs != bank.records[0].inputs);

  ex.seed = 42;
  ex.output_noise_std = 0.1;
  TrajectoryBank noisy = collect(siso_plant(), ex);
  CHECK(noisy.records[0].inputs == bank.records[0].inputs);
  const double dev = (noisy.records[0].outputs - bank.records[0].outputs).cwiseAbs().maxCoeff();
  CHECK(dev > 0.0);
  CHECK(dev < 1.0);
}

TEST_CASE("quadratic plant samples are consistent with the map") {
  TrajectoryBank bank = protocols::quadratic_plant_samples(7);
  REQUIRE(bank.records.size() == 20);
  for (const auto& r : bank.records) {
    const double x0 = r.initial(0), u = r.inputs(0, 0);
    CHECK(std::abs(x0) <= 1.0);
    CHECK(std::abs(u) <= 1.0);
    CHECK(r.outputs(0, 0) == doctest::Approx(2 * x0 * x0 + 2 * u * u - 1).epsilon(1e-15));
  }
  DataDictionary d = build_dictionary(bank, 0, 1, Windowing::one_column_per_record);
  CHECK(d.rows() == 3);
  CHECK(d.columns() == 20);
}

TEST_CASE("abstract planar atoms become data matrix columns") {
  TrajectoryBank bank = protocols::planar_gaussian_atoms(5);
  DataDictionary d = build_dictionary(bank, 0, 1, Windowing::one_column_per_record);
  CHECK(d.rows() == 2);
  CHECK(d.columns() == 8);
  CHECK(d.z_dim() == 1);
  Rng rng(5);
  for (Index j = 0; j < 8; ++j) {
    const double a = rng.normal();
    const double b = rng.normal();
    CHECK(d.matrix()(0, j) == a);
    CHECK(d.matrix()(1, j) == b);
  }
}

TEST_CASE("unregularized closed loop on exact data equals model-based control") {
  const auto sys = test::second_order_siso();
  const Index past = 2, horizon = 3;
  ExcitationSpec ex;
  ex.input = Distribution::gaussian(0.0, 1.0);
  ex.initial_state = Distribution::gaussian(0.0, 1.0);
  ex.horizon = 60;
  ex.seed = 8;
  DataDictionary dict = build_dictionary(collect(siso_plant(), ex), past, horizon, Windowing::hankel_sliding, 2);
  const Matrix q = eye(horizon), r = 0.1 * eye(horizon);
  auto spec = OcpSpec::make(dict, q, r, 0.0);
  spec.allow_unregularized = true;

  ClosedLoopInit init;
  init.plant_state = Vector::Zero(2);
  init.plant_state << 1.0, -0.5;
  init.past_inputs = Matrix::Constant(1, past, 0.3);
  ClosedLoopLog log = run_closed_loop(siso_plant(), spec, init, 10);
  REQUIRE(log.steps.size() == 10);
  CHECK_FALSE(log.truncated);

  // Model-based receding horizon: y = O x + T u over the horizon.
  Matrix obs(horizon, 2), toeplitz = Matrix::Zero(horizon, horizon);
  Matrix ak = eye(2);
  for (Index k = 0; k < horizon; ++k) {
    obs.row(k) = sys.c * ak;
    ak = sys.a * ak;
  }
  for (Index k = 0; k < horizon; ++k) {
    toeplitz(k, k) = sys.d(0, 0);
    Matrix apow = eye(2);
    for (Index j = k - 1; j >= 0; --j) {
      toeplitz(k, j) = (sys.c * apow * sys.b)(0, 0);
      apow = sys.a * apow;
    }
  }
  const Matrix gain = -(toeplitz.transpose() * q * toeplitz + r).ldlt().solve(toeplitz.transpose() * q * obs);
  Vector x;
  sys.simulate(init.plant_state, init.past_inputs, &x);
  for (const auto& s : log.steps) {
    const Vector u = (gain * x).head(1);
    const Vector y = sys.c * x + sys.d * u;
    CHECK((s.u_applied - u).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((s.y_measured - y).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(s.prediction_error < 1e-6);
    x = sys.a * x + sys.b * u;
  }
}

TEST_CASE("zero regressor on the quadratic plant") {
  auto spec = OcpSpec::make(pruned_quadratic(1), eye(1), eye(1), 1.0);
  ClosedLoopInit init{Vector::Zero(1), Matrix()};
  ClosedLoopLog log = run_closed_loop(Plant::scalar_quadratic(), spec, init, 1);
  REQUIRE(log.steps.size() == 1);
  const auto& s = log.steps.front();
  CHECK(std::abs(s.u_applied(0)) < 1e-9);
  CHECK(std::abs(s.y_predicted(0)) < 1e-9);
  CHECK(s.y_measured(0) == doctest::Approx(-1.0));
  CHECK(s.prediction_error == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.support.empty());
  CHECK(s.l1_generator < 1e-9);
}

TEST_CASE("zero steps gives an empty log") {
  auto spec = OcpSpec::make(pruned_quadratic(1), eye(1), eye(1), 1.0);
  ClosedLoopLog log = run_closed_loop(Plant::scalar_quadratic(), spec, {Vector::Constant(1, 0.4), Matrix()}, 0);
  CHECK(log.steps.empty());
  CHECK_FALSE(log.truncated);
  std::ostringstream os;
  write_closed_loop_csv(os, log);
  CHECK(os.str() == "step,cost,l1_generator,support\n");
}

TEST_CASE("infeasible step truncates the log") {
  ExcitationSpec ex;
  ex.input = Distribution::gaussian(0.0, 1.0);
  ex.initial_state = Distribution::gaussian(0.0, 1.0);
  ex.horizon = 60;
  ex.seed = 2;
  DataDictionary dict = build_dictionary(collect(siso_plant(), ex), 2, 2, Windowing::hankel_sliding, 2);
  auto spec = OcpSpec::make(dict, eye(2), eye(2), 0.1);
  spec.input_box = {Vector::Zero(2), Vector::Zero(2)};
  spec.output_box = {Vector::Constant(2, 1.0), Vector::Constant(2, 2.0)};
  ClosedLoopLog log = run_closed_loop(siso_plant(), spec, {Vector::Zero(2), Matrix::Zero(1, 2)}, 5);
  CHECK(log.truncated);
  CHECK(log.failed_step == 0);
  CHECK(log.steps.empty());
  CHECK_FALSE(log.failure.empty());
}

TEST_CASE("closed loop supports agree with the explicit predictor regions") {
  DataDictionary dict = pruned_quadratic(1);
  const double lambda = 1.0;
  PredictorSpec pspec{dict, eye(1), lambda};
  Box box{Vector::Constant(2, -1.5), Vector::Constant(2, 1.5)};
  PwaFunction pwa = enumerate_pwa(pspec, box);
  REQUIRE(pwa.complete);
  auto spec = OcpSpec::make(dict, eye(1), 0.5 * eye(1), lambda);
  ClosedLoopOptions opts;
  opts.pwa = &pwa;
  ClosedLoopLog log = run_closed_loop(Plant::scalar_quadratic(), spec, {Vector::Constant(1, 0.6), Matrix()}, 8, opts);
  REQUIRE(log.steps.size() == 8);
  for (const auto& s : log.steps) {
    CHECK(s.region_checked);
    CHECK(s.region >= 0);
    CHECK(s.support_matches_region);
    Vector z(2);
    z << s.xi, s.u_solved;
    CHECK(std::abs(evaluate_pwa(pwa, z).y(0) - s.y_predicted(0)) < 1e-6);
  }
  std::ostringstream os;
  write_closed_loop_csv(os, log);
  std::string header;
  std::getline(std::istringstream(os.str()) >> std::ws, header);
  CHECK(header == "step,xi1,u_applied1,y_measured1,cost,l1_generator,support");
}

TEST_CASE("prediction error map") {
  DataDictionary dict = pruned_quadratic(1);
  PredictorSpec pspec{dict, eye(1), 1.0};
  Box box{Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)};
  PwaFunction pwa = enumerate_pwa(pspec, box);
  const auto xs = linspace(-1, 1, 9), us = linspace(-1, 1, 7);
  CHECK(xs.front() == -1.0);
  CHECK(xs.back() == 1.0);
  Plant plant = Plant::scalar_quadratic();
  auto par = prediction_error_map(plant, pointwise_handle(pspec), xs, us, Execution::parallel);
  auto ser = prediction_error_map(plant, pointwise_handle(pspec), xs, us, Execution::serial);
  auto exp = prediction_error_map(plant, explicit_handle(pwa), xs, us);
  REQUIRE(par.size() == 63);
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].x0 == xs[i / 7]);
    CHECK(par[i].u == us[i % 7]);
    CHECK(par[i].plant == plant.f(par[i].x0, par[i].u));
    CHECK(par[i].predictor == ser[i].predictor);
    CHECK(std::abs(exp[i].predictor - par[i].predictor) < 1e-6);
    CHECK(par[i].abs_error == doctest::Approx(std::abs(par[i].predictor - par[i].plant)));
  }
  std::ostringstream os;
  write_error_map_csv(os, par);
  CHECK(os.str().rfind("x0,u,plant,predictor,abs_error\n", 0) == 0);
  CHECK_THROWS_AS(prediction_error_map(siso_plant(), pointwise_handle(pspec), xs, us), Error);
}
