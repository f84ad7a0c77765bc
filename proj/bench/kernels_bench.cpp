// Serial reference vs OpenMP kernels on dense N x N propagation shapes.

#include <random>

#include <benchmark/benchmark.h>

#include "topoguard/kernels.hpp"

namespace tk = topoguard::kernels;
using topoguard::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, double density, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.values()) v = u(rng) < density ? u(rng) : 0.0;
  return m;
}

Matrix random_adjacency(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(0.05);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edge(rng)) a(i, j) = a(j, i) = 1.0;
  return a;
}

template <auto Fn>
void bm_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1.0, 1), b = random_matrix(n, 32, 1.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
}

template <auto Fn>
void bm_normalize(benchmark::State& state) {
  const Matrix a = random_adjacency(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a));
}

template <auto Norm, auto Back>
void bm_normalize_backward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_adjacency(n, 4), g = random_matrix(n, n, 1.0, 5);
  const tk::Normalized norm = Norm(a);
  for (auto _ : state) benchmark::DoNotOptimize(Back(g, a, norm.inv_sqrt_degree));
}

template <auto Fn>
void bm_pair_gradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_adjacency(n, 6), g = random_matrix(n, n, 1.0, 7);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(g, a));
}

}  // namespace

BENCHMARK(bm_matmul<tk::serial::matmul>)->Name("matmul/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_matmul<tk::parallel::matmul>)->Name("matmul/parallel")->Arg(256)->Arg(1024);
BENCHMARK(bm_normalize<tk::serial::normalize>)->Name("normalize/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_normalize<tk::parallel::normalize>)->Name("normalize/parallel")->Arg(256)->Arg(1024);
BENCHMARK(bm_normalize_backward<tk::serial::normalize, tk::serial::normalize_backward>)
    ->Name("normalize_backward/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_normalize_backward<tk::parallel::normalize, tk::parallel::normalize_backward>)
    ->Name("normalize_backward/parallel")->Arg(256)->Arg(1024);
BENCHMARK(bm_pair_gradient<tk::serial::pair_gradient>)->Name("pair_gradient/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_pair_gradient<tk::parallel::pair_gradient>)->Name("pair_gradient/parallel")->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
