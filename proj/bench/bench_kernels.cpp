#include <benchmark/benchmark.h>

#include "mmfuse/kernels.hpp"
#include "mmfuse/rng.hpp"

using namespace mmfuse;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

void BM_matmul_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 256, 1), b = random_matrix(256, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

void BM_matmul_parallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 256, 1), b = random_matrix(256, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

void BM_matmul_tn_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 128, 3), b = random_matrix(n, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::matmul_tn(a, b));
}

void BM_matmul_tn_parallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 128, 3), b = random_matrix(n, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul_tn(a, b));
}

void BM_softmax_serial(benchmark::State& state) {
  const Matrix m = random_matrix(static_cast<std::size_t>(state.range(0)), 16, 5);
  for (auto _ : state) {
    Matrix x = m;
    kernels::serial::softmax_rows(x);
    benchmark::DoNotOptimize(x);
  }
}

void BM_softmax_parallel(benchmark::State& state) {
  const Matrix m = random_matrix(static_cast<std::size_t>(state.range(0)), 16, 5);
  for (auto _ : state) {
    Matrix x = m;
    kernels::softmax_rows(x);
    benchmark::DoNotOptimize(x);
  }
}

}  // namespace

BENCHMARK(BM_matmul_serial)->Arg(256)->Arg(2048);
BENCHMARK(BM_matmul_parallel)->Arg(256)->Arg(2048);
BENCHMARK(BM_matmul_tn_serial)->Arg(256)->Arg(2048);
BENCHMARK(BM_matmul_tn_parallel)->Arg(256)->Arg(2048);
BENCHMARK(BM_softmax_serial)->Arg(1024)->Arg(16384);
BENCHMARK(BM_softmax_parallel)->Arg(1024)->Arg(16384);

BENCHMARK_MAIN();
