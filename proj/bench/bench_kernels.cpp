// Serial reference versus OpenMP paths of the data-parallel kernels.

#include "qds/gksl.hpp"
#include "qds/kernels.hpp"
#include "qds/lyapunov.hpp"
#include "support.hpp"

#include <benchmark/benchmark.h>

using namespace qds;

namespace {

kernels::Exec exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? kernels::Exec::serial : kernels::Exec::parallel;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(1) == 0 ? "serial" : "parallel x" + std::to_string(kernels::max_threads()));
}

void BM_AssembleSuperoperator(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const auto model = testing::two_photon_model(dim, 1.5);
  const kernels::Exec exec = exec_of(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::assemble_superoperator(model.hamiltonian(), model.couplings(), exec));
  }
  label(state);
}

void BM_Advance(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const ComplexMatrix step = testing::random_matrix(dim * dim, dim * dim, rng);
  const ComplexMatrix columns = testing::random_matrix(dim * dim, 8, rng);
  const kernels::Exec exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::advance(step, columns, exec));
  label(state);
}

void BM_BruteForceBatch(benchmark::State& state) {
  const int count = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::vector<ComplexMatrix> rhos, projectors;
  for (int i = 0; i < count; ++i) {
    rhos.push_back(testing::random_density_matrix(5, 3, rng));
    projectors.push_back(opalg::leading_projector(5, 2));
  }
  lyapunov::SearchBudget budget;
  budget.starts = 8;
  const kernels::Exec exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(lyapunov::brute_force_distance_batch(rhos, projectors, budget, exec));
  label(state);
}

}  // namespace

BENCHMARK(BM_AssembleSuperoperator)->ArgsProduct({{10, 20, 40}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Advance)->ArgsProduct({{10, 20, 30}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BruteForceBatch)->ArgsProduct({{16}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
