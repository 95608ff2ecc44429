#include <benchmark/benchmark.h>

#include <cmath>

#include "specdeconf/grouplasso.hpp"
#include "specdeconf/hdam.hpp"
#include "specdeconf/simgen.hpp"

using namespace specdeconf;

namespace {

hdam::PreparedDesign design_for(Index n, Index p) {
  simgen::SimConfig c;
  c.n = n;
  c.p = p;
  c.seed = 7;
  const auto d = simgen::gen_dataset(c);
  return hdam::prepare_design(d.X, d.Y, 7, hdam::make_adjustment(d.X, hdam::Method::Deconfounded));
}

void BM_SolveSingle(benchmark::State& state) {
  const auto design = design_for(state.range(0), state.range(1));
  const double lambda = 0.1 * grouplasso::lambda_max(design.problem);
  for (auto _ : state) benchmark::DoNotOptimize(grouplasso::solve(design.problem, lambda));
}
BENCHMARK(BM_SolveSingle)->Args({100, 100})->Args({150, 300})->Unit(benchmark::kMillisecond);

// Twenty-point descending path with warm starts, as used by cross-validation.
void BM_SolvePath(benchmark::State& state) {
  const auto design = design_for(state.range(0), state.range(1));
  const double lmax = grouplasso::lambda_max(design.problem);
  for (auto _ : state) {
    grouplasso::GroupSolution prev;
    bool have = false;
    for (int k = 0; k < 20; ++k) {
      const double lambda = lmax * std::pow(10.0, -3.0 * k / 19.0);
      prev = grouplasso::solve(design.problem, lambda, {}, have ? &prev : nullptr);
      have = true;
    }
    benchmark::DoNotOptimize(prev);
  }
}
BENCHMARK(BM_SolvePath)->Args({100, 100})->Args({150, 300})->Unit(benchmark::kMillisecond);

void BM_PrepareDesign(benchmark::State& state) {
  simgen::SimConfig c;
  c.n = state.range(0);
  c.p = state.range(1);
  c.seed = 7;
  const auto d = simgen::gen_dataset(c);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        hdam::prepare_design(d.X, d.Y, 7, hdam::make_adjustment(d.X, hdam::Method::Deconfounded)));
}
BENCHMARK(BM_PrepareDesign)->Args({150, 300})->Unit(benchmark::kMillisecond);

}  // namespace
