#include <benchmark/benchmark.h>

#include "invmeas/dynamics.hpp"
#include "invmeas/edmd.hpp"
#include "invmeas/moment_problem.hpp"
#include "invmeas/solver.hpp"

using namespace invmeas;

static void BM_PsdProject(benchmark::State& state) {
  const auto s = state.range(0);
  Eigen::MatrixXd R = Eigen::MatrixXd::Random(s, s);
  Eigen::MatrixXd M = 0.5 * (R + R.transpose());
  for (auto _ : state) {
    benchmark::DoNotOptimize(psd_project(M));
  }
}
BENCHMARK(BM_PsdProject)->Arg(26)->Arg(41)->Arg(120);

static void BM_SolveLogisticFit(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  BasisSpec spec = chebyshev_basis(1, 2 * k);
  PolyMap f;
  f.components.push_back(interpolate_on_grid(
      spec.with_degree(2),
      [](const Eigen::VectorXd& x) { return 2.0 * x[0] * x[0] - 1.0; }));
  LieMatrix L = exact_lie_map(f, k, 2 * k, spec);
  MomentFitObjective fit;
  fit.targets.push_back(MomentTarget{MultiIndex{1}, 0.0, 1.0});
  MomentProblem problem = lift_momentfit(assemble_problem(L, box_set(spec), fit));
  ConicStandardForm form = to_standard_form(problem);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_conic(form));
  }
}
BENCHMARK(BM_SolveLogisticFit)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);
