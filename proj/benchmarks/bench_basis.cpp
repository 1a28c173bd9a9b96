#include <benchmark/benchmark.h>

#include "invmeas/basis.hpp"
#include "invmeas/rng.hpp"

using namespace invmeas;

static void BM_EvalBasis(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int l = static_cast<int>(state.range(1));
  BasisSpec spec = chebyshev_basis(n, l);
  Rng rng(1);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = 2.0 * rng.next_uniform() - 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_basis(spec, x));
  }
  state.SetItemsProcessed(state.iterations() * spec.size());
}
BENCHMARK(BM_EvalBasis)->Args({1, 40})->Args({2, 12})->Args({3, 15});

static void BM_ProductLinearize(benchmark::State& state) {
  BasisSpec spec = chebyshev_basis(3, 15);
  MultiIndex a{3, 2, 1}, b{4, 0, 3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(product_linearize(a, b, spec));
  }
}
BENCHMARK(BM_ProductLinearize);
