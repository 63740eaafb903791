// Microbenchmarks for the three solver hot paths: the boundary-layer cell
// solve, the annulus macro solve, and the per-piece divergence solve.

#include <benchmark/benchmark.h>

#include <cmath>

#include "roughflow/cell_solver.hpp"
#include "roughflow/divergence_lab.hpp"
#include "roughflow/macro_solver.hpp"

using namespace roughflow;

static void BM_CellSolve2D(benchmark::State& state) {
  CellProblemSpec spec;
  spec.coeffs = make_cell_coefficients(Mat::Identity(2, 2));
  spec.profile = make_cosine_profile(0.25);
  spec.jump_vector = Eigen::Vector2d(1, 0);
  spec.resolution = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const CellSolution sol = solve_cell(spec);
    benchmark::DoNotOptimize(sol.bl_constant(0));
  }
  state.SetLabel("lateral cells per unit");
}
BENCHMARK(BM_CellSolve2D)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_MacroDirichlet(benchmark::State& state) {
  MacroProblemSpec spec;
  spec.domain = build_rough_annulus(1.0, 2.0, 1.0 / 16, make_cosine_profile(0.25), 16);
  spec.variant = MacroVariant::Dirichlet;
  spec.radial_cells = static_cast<int>(state.range(0));
  spec.angular_cells = 8;
  for (auto _ : state) {
    const MacroSolution sol = solve_macro(spec);
    benchmark::DoNotOptimize(sol.divergence_residual);
  }
  state.SetLabel("radial cells");
}
BENCHMARK(BM_MacroDirichlet)->Arg(96)->Arg(192)->Unit(benchmark::kMillisecond);

static void BM_MacroRough(benchmark::State& state) {
  AnnulusDomain dom =
      build_rough_annulus(1.0, 2.0, 1.0 / 16, make_cosine_profile(0.25), 64);
  MacroProblemSpec spec;
  spec.domain = dom;
  spec.variant = MacroVariant::Rough;
  spec.radial_cells = static_cast<int>(state.range(0));
  spec.wall_spacing = dom.eps / 32;
  for (auto _ : state) {
    const MacroSolution sol = solve_macro(spec);
    benchmark::DoNotOptimize(sol.divergence_residual);
  }
  state.SetLabel("radial cells");
}
BENCHMARK(BM_MacroRough)->Arg(96)->Unit(benchmark::kMillisecond);

static void BM_DivergenceSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  LabGrid g;
  g.h = 1.0 / n;
  g.nx = g.ny = n;
  LabField f;
  f.grid = g;
  f.v.resize(g.cells());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.v[g.id(i, j)] = std::sin(2 * M_PI * g.cx(i)) * std::cos(2 * M_PI * g.cy(j));
  const Rect box{0, 0, 1, 1};
  for (auto _ : state) {
    const DivergenceSolution sol = divergence_solve(box, f);
    benchmark::DoNotOptimize(sol.ratio);
  }
  state.SetLabel("cells per side");
}
BENCHMARK(BM_DivergenceSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
