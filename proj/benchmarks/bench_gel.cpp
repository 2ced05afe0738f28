#include <gelkit/dual_solver.hpp>
#include <gelkit/gel.hpp>
#include <gelkit/simulate.hpp>
#include <gelkit/two_sample.hpp>

#include <benchmark/benchmark.h>

using namespace gelkit;

static void BM_DualSolve(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const DataMatrix d = gen_example1(n, 0.1, 1.0, 1);
  Matrix z(n, 3);
  const auto m = normal_three_moment_model();
  Vector th(2);
  th << 0.0, 1.0;
  for (Index i = 0; i < n; ++i) z.row(i) = m->eval_moment({d.row(i).data(), 1}, th).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(solve_dual(z).objective);
}
BENCHMARK(BM_DualSolve)->Arg(100)->Arg(10000);

static void BM_GelEstimate(benchmark::State& state) {
  const auto N = static_cast<Index>(state.range(0));
  const DataMatrix d = gen_example1(N, 0.0, 2.0, 2);
  const Grouping g = make_grouping(N, 100, 3);
  const auto m = normal_three_moment_model();
  for (auto _ : state) benchmark::DoNotOptimize(gel_estimate(d, g, *m).theta_hat[0]);
}
BENCHMARK(BM_GelEstimate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_ElEstimate(benchmark::State& state) {
  const auto N = static_cast<Index>(state.range(0));
  const DataMatrix d = gen_example1(N, 0.0, 2.0, 2);
  const auto m = normal_three_moment_model();
  for (auto _ : state) benchmark::DoNotOptimize(el_estimate(d, *m).theta_hat[0]);
}
BENCHMARK(BM_ElEstimate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_TwoSample(benchmark::State& state) {
  const auto s = gen_example3(3000, 3000, 2, 4);
  for (auto _ : state) benchmark::DoNotOptimize(two_sample_mean_test(s.x, s.y, 100, Vector::Zero(1)).p_value);
}
BENCHMARK(BM_TwoSample)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
