#include <benchmark/benchmark.h>

#include "specdeconf/rng.hpp"
#include "specdeconf/spectral.hpp"

using namespace specdeconf;

namespace {

Matrix noise(Index rows, Index cols, std::uint64_t seed) {
  auto rng = make_stream(seed, "bench");
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = rng.normal();
  return M;
}

void BM_TrimTransform(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix X = noise(n, 2 * n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::trim_transform(X, 0.5));
}
BENCHMARK(BM_TrimTransform)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

// Factored application vs materializing the n x n matrix.
void BM_TrimApply(benchmark::State& state) {
  const Index n = state.range(0);
  const auto Q = spectral::trim_transform(noise(n, 2 * n, 2), 0.5);
  const Matrix B = noise(n, 7 * 50, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Q.apply(B));
}
BENCHMARK(BM_TrimApply)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_TrimDenseApply(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix Q = spectral::trim_transform(noise(n, 2 * n, 2), 0.5).dense();
  const Matrix B = noise(n, 7 * 50, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Matrix(Q * B));
}
BENCHMARK(BM_TrimDenseApply)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
