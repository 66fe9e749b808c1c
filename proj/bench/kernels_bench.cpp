// Serial reference vs OpenMP kernels. Arg 0 = Serial, 1 = Parallel.
// Thread count follows OMP_NUM_THREADS / CAPIT_THREADS.

#include <benchmark/benchmark.h>

#include "capit/baselines.hpp"
#include "capit/bench.hpp"
#include "capit/model.hpp"
#include "capit/precision.hpp"

using namespace capit;

namespace {

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

const model::PairedDataset& scenario_two(Index p, Index n) {
  static model::PairedDataset data = [&] {
    model::ScenarioConfig sc;
    sc.scenario_id = model::ScenarioId::BandedPrecision;
    sc.p1 = sc.p2 = p;
    sc.n = n;
    return model::sample(model::make_scenario_model(sc), n, 3);
  }();
  return data;
}

void BM_CLIMERaw(benchmark::State& state) {
  const Matrix s = precision::sample_covariance(scenario_two(80, 300).x);
  for (auto _ : state) benchmark::DoNotOptimize(precision::clime_raw(s, 0.1, exec_of(state)));
}

void BM_CLIMEPath(benchmark::State& state) {
  const Matrix s = precision::sample_covariance(scenario_two(80, 300).x);
  const std::vector<double> lambdas{0.05, 0.1, 0.2, 0.4};
  for (auto _ : state) benchmark::DoNotOptimize(precision::clime_path(s, lambdas, exec_of(state)));
}

void BM_CvSelectTapering(benchmark::State& state) {
  const Matrix& x = scenario_two(80, 300).x;
  const std::vector<double> grid = precision::default_grid(precision::Method::Tapering, x.cols());
  for (auto _ : state) {
    benchmark::DoNotOptimize(precision::cv_select(x, precision::Method::Tapering, grid, 5, exec_of(state)));
  }
}

void BM_PmdTune(benchmark::State& state) {
  const model::PairedDataset& d = scenario_two(80, 300);
  for (auto _ : state) {
    benchmark::DoNotOptimize(baselines::pmd_permutation_tune(d, baselines::default_pmd_fractions(), 10, 7, exec_of(state)));
  }
}

void BM_Replicates(benchmark::State& state) {
  bench::BenchmarkSpec spec = bench::table1_spec(60, 200, 4);
  spec.methods = {bench::MethodId::CapitToep, bench::MethodId::CapitTap, bench::MethodId::Svd};
  for (auto _ : state) benchmark::DoNotOptimize(bench::run_benchmark(spec, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_CLIMERaw)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CLIMEPath)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CvSelectTapering)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PmdTune)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Replicates)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
