#include <benchmark/benchmark.h>

#include "invmeas/dynamics.hpp"
#include "invmeas/edmd.hpp"

using namespace invmeas;

static void BM_GramAccumulate(benchmark::State& state) {
  const auto m = state.range(0);
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  SnapshotSet snaps = simulate_map(logistic_map, x0, m, unit_box(1));
  BasisSpec spec = chebyshev_basis(1, 40);
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_gram(snaps, 20, 40, spec));
  }
  state.SetItemsProcessed(state.iterations() * m);
}
BENCHMARK(BM_GramAccumulate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_KoopmanSvd(benchmark::State& state) {
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  SnapshotSet snaps = simulate_map(logistic_map, x0, 10000, unit_box(1));
  BasisSpec spec = chebyshev_basis(1, 40);
  auto [P, Q] = build_data_matrices(snaps, 20, 40, spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(koopman_matrix(P, Q));
  }
}
BENCHMARK(BM_KoopmanSvd)->Unit(benchmark::kMillisecond);
