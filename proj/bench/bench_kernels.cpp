// Serial reference vs OpenMP execution of the parallel kernels.
// Argument 0 runs the serial path, 1 the parallel path.

#include "dpc/atomgeo.hpp"
#include "dpc/ocp.hpp"
#include "dpc/predictor.hpp"
#include "dpc/simcore.hpp"

#include <benchmark/benchmark.h>

using namespace dpc;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) == 0 ? Execution::serial : Execution::parallel; }

Plant siso_plant() {
  Matrix a(2, 2), b(2, 1), c(1, 2), d(1, 1);
  a << 0.7, 0.2, -0.3, 0.5;
  b << 1.0, 0.5;
  c << 1.0, -0.4;
  d << 0.1;
  return Plant::lti(a, b, c, d);
}

DataDictionary lti_dictionary(Index samples) {
  ExcitationSpec ex;
  ex.input = Distribution::gaussian(0.0, 1.0);
  ex.horizon = samples;
  ex.seed = 11;
  ex.output_noise_std = 0.05;
  return build_dictionary(collect(siso_plant(), ex), 2, 2, Windowing::hankel_sliding, 2);
}

DataDictionary quadratic_dictionary() {
  return build_dictionary(protocols::quadratic_plant_samples(8), 0, 1, Windowing::one_column_per_record);
}

void BM_ExtremePoints(benchmark::State& state) {
  const AtomSet mirrored = mirror(AtomSet::from_dictionary(lti_dictionary(120))).set;
  for (auto _ : state) benchmark::DoNotOptimize(extreme_points(mirrored, HullMethod::lp_test, default_tolerances(), mode(state)));
  state.counters["atoms"] = static_cast<double>(mirrored.size());
}

void BM_EnumeratePwa(benchmark::State& state) {
  const PredictorSpec spec{prune_dictionary(quadratic_dictionary()).dictionary, Matrix::Identity(1, 1), 100.0};
  const Box box{Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)};
  EnumerationOptions options;
  options.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_pwa(spec, box, default_tolerances(), options));
}

void BM_SolveOcpBatch(benchmark::State& state) {
  const DataDictionary dict = prune_dictionary(lti_dictionary(60)).dictionary;
  const OcpSpec spec = OcpSpec::make(dict, Matrix::Identity(2, 2), 0.1 * Matrix::Identity(2, 2), 1.0);
  const Matrix xis = Matrix::Random(dict.dims().past_rows(), 64);
  for (auto _ : state) benchmark::DoNotOptimize(solve_ocp_batch(spec, xis, default_tolerances(), mode(state)));
}

void BM_ErrorMap(benchmark::State& state) {
  const PredictorSpec spec{prune_dictionary(quadratic_dictionary()).dictionary, Matrix::Identity(1, 1), 100.0};
  const Plant plant = Plant::scalar_quadratic();
  const PredictorHandle handle = pointwise_handle(spec);
  const auto grid = linspace(-1.0, 1.0, 21);
  for (auto _ : state) benchmark::DoNotOptimize(prediction_error_map(plant, handle, grid, grid, mode(state)));
}

}  // namespace

BENCHMARK(BM_ExtremePoints)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnumeratePwa)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveOcpBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorMap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
