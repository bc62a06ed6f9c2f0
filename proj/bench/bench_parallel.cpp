// Serial reference implementations against the OpenMP/BLAS paths.

#include <cpme/reference.hpp>
#include <cpme/scenarios.hpp>
#include <cpme/testing.hpp>

#include <benchmark/benchmark.h>

using namespace cpme;

namespace {

Matrix normals(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix M(rows, cols);
  for (Index i = 0; i < M.size(); ++i) M.data()[i] = rng.normal();
  return M;
}

Scenario scenario_i(Index n) {
  ScenarioSpec s;
  s.n = n;
  s.seed = 3;
  return generate(s);
}

void BM_gram_reference(benchmark::State& st) {
  const Matrix W = normals(st.range(0), 5, 1);
  const auto k = KernelSpec::gaussian(2.0);
  for (auto _ : st) benchmark::DoNotOptimize(reference::gram(k, W, W));
}

void BM_gram_parallel(benchmark::State& st) {
  const Matrix W = normals(st.range(0), 5, 1);
  const auto k = KernelSpec::gaussian(2.0);
  for (auto _ : st) benchmark::DoNotOptimize(gram(k, W));
}

void BM_kernel_means_reference(benchmark::State& st) {
  const auto sc = scenario_i(st.range(0));
  const auto [kA, kX] = median_heuristic_kernels(sc.data);
  const CmeModel m(sc.data, kA, kX, KernelSpec::linear(), 1e-2);
  Rng rng(4);
  const auto atoms = policy_atoms(sc.target, sc.data.X, sc.data.space, 32, rng);
  for (auto _ : st) benchmark::DoNotOptimize(reference::policy_kernel_means(m, atoms));
}

void BM_kernel_means_parallel(benchmark::State& st) {
  const auto sc = scenario_i(st.range(0));
  const auto [kA, kX] = median_heuristic_kernels(sc.data);
  const CmeModel m(sc.data, kA, kX, KernelSpec::linear(), 1e-2);
  Rng rng(4);
  const auto atoms = policy_atoms(sc.target, sc.data.X, sc.data.space, 32, rng);
  for (auto _ : st) benchmark::DoNotOptimize(policy_kernel_means(m, atoms));
}

void BM_permutations_reference(benchmark::State& st) {
  const Index n = st.range(0);
  const Vector d = normals(n, 1, 5).col(0);
  const GramMatrix K = gram(KernelSpec::gaussian(1.0), normals(n, 1, 6));
  for (auto _ : st) benchmark::DoNotOptimize(reference::permutation_statistics(d, K, 200, 7));
}

void BM_permutations_parallel(benchmark::State& st) {
  const Index n = st.range(0);
  const Vector d = normals(n, 1, 5).col(0);
  const GramMatrix K = gram(KernelSpec::gaussian(1.0), normals(n, 1, 6));
  for (auto _ : st) benchmark::DoNotOptimize(permutation_statistics(d, K, 200, 7));
}

EmbeddingFunctional bench_embedding(Index atoms) {
  EmbeddingFunctional e;
  e.atoms = normals(atoms, 1, 8).col(0);
  e.coeffs = Vector::Constant(atoms, 1.0 / static_cast<double>(atoms));
  e.kY = KernelSpec::gaussian(0.5);
  return e;
}

void BM_herd_reference(benchmark::State& st) {
  const auto chi = bench_embedding(st.range(0));
  HerdConfig hc;
  hc.m = 50;
  hc.grid = linear_grid(-4.0, 4.0, 512);
  for (auto _ : st) benchmark::DoNotOptimize(reference::herd(chi, hc));
}

void BM_herd_parallel(benchmark::State& st) {
  const auto chi = bench_embedding(st.range(0));
  HerdConfig hc;
  hc.m = 50;
  hc.grid = linear_grid(-4.0, 4.0, 512);
  for (auto _ : st) benchmark::DoNotOptimize(herd(chi, hc));
}

}  // namespace

BENCHMARK(BM_gram_reference)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gram_parallel)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kernel_means_reference)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kernel_means_parallel)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_permutations_reference)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_permutations_parallel)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_herd_reference)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_herd_parallel)->Arg(500)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
