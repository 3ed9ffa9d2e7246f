// Serial reference vs OpenMP kernels, plus independent chains.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "geowalk/kernels.hpp"
#include "geowalk/polytope.hpp"
#include "geowalk/walk.hpp"

using namespace geowalk;

namespace {

struct Setup {
  Polytope P;
  Matrix L, Ax;
};

Setup make_setup(Index n, Index m) {
  Rng rng(1);
  std::normal_distribution<double> z;
  Matrix A(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = z(rng);
  const Vector b = -Vector::Ones(m);  // origin is interior
  Polytope P(A, b, "bench");
  const LocalMetric p(P, Vector::Zero(n));
  return {P, p.lower(), p.Ax()};
}

void BM_LeverageSerial(benchmark::State& st) {
  const auto s = make_setup(st.range(0), 10 * st.range(0));
  Matrix W;
  Vector sigma;
  for (auto _ : st) {
    kernels::leverage_serial(s.L, s.Ax, W, sigma);
    benchmark::DoNotOptimize(sigma.data());
  }
}

void BM_LeverageParallel(benchmark::State& st) {
  const auto s = make_setup(st.range(0), 10 * st.range(0));
  Matrix W;
  Vector sigma;
  for (auto _ : st) {
    kernels::leverage_parallel(s.L, s.Ax, W, sigma);
    benchmark::DoNotOptimize(sigma.data());
  }
}

void BM_GramSerial(benchmark::State& st) {
  const auto s = make_setup(st.range(0), 10 * st.range(0));
  const Vector d = Vector::Ones(s.Ax.rows());
  for (auto _ : st) benchmark::DoNotOptimize(kernels::weighted_gram_serial(s.Ax, d));
}

void BM_GramParallel(benchmark::State& st) {
  const auto s = make_setup(st.range(0), 10 * st.range(0));
  const Vector d = Vector::Ones(s.Ax.rows());
  for (auto _ : st) benchmark::DoNotOptimize(kernels::weighted_gram_parallel(s.Ax, d));
}

void BM_Chains(benchmark::State& st) {
  const Polytope C = make_hypercube(3);
  WalkConfig cfg;
  cfg.burn_in = 0;
  for (auto _ : st)
    benchmark::DoNotOptimize(run_chains(C, Vector::Zero(3), 200, cfg, 4, st.range(0) != 0));
}

}  // namespace

BENCHMARK(BM_LeverageSerial)->Arg(8)->Arg(32)->Arg(128);
BENCHMARK(BM_LeverageParallel)->Arg(8)->Arg(32)->Arg(128);
BENCHMARK(BM_GramSerial)->Arg(8)->Arg(32)->Arg(128);
BENCHMARK(BM_GramParallel)->Arg(8)->Arg(32)->Arg(128);
BENCHMARK(BM_Chains)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
