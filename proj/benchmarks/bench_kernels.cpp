#include <vector>

#include <benchmark/benchmark.h>

#include "hkwave/coherent_sum.hpp"
#include "hkwave/dynamics.hpp"
#include "hkwave/grid.hpp"
#include "hkwave/hk_core.hpp"
#include "hkwave/reference.hpp"

using namespace hkwave;

namespace {

Potential morse() {
  MorseSpec spec;
  spec.chi = 0.01;
  spec.omega_eq = 0.0041;
  spec.v_eq = 0.1;
  spec.q_eq = 20.95;
  return Potential(spec.potential());
}

void BM_VerletStepMorse(benchmark::State& state) {
  const Potential pot = morse();
  const double z0[2] = {0.0, 0.0};
  Trajectory tr(1, z0);
  for (auto _ : state) {
    advance(tr, pot, 8.0);
    benchmark::DoNotOptimize(tr.q(0));
  }
}
BENCHMARK(BM_VerletStepMorse);

void BM_EnsemblePropagate(benchmark::State& state) {
  const auto psi0 = GaussianWavepacket::one_dim(0.0, 0.0, 0.00456);
  const auto n = static_cast<std::size_t>(state.range(0));
  HKEnsemble ens(psi0, SamplingScheme::sqrt_husimi(psi0), morse(), n, 1);
  for (auto _ : state) ens.propagate(8.0, 1);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EnsemblePropagate)->Arg(1024)->Arg(16384);

void BM_AccumulateGaussian(benchmark::State& state) {
  const SpatialGrid grid(-200.0, 10000.0, static_cast<std::size_t>(state.range(0)));
  std::vector<Complex> out(grid.n_points);
  for (auto _ : state) {
    accumulate_gaussian(out, grid, 20.0, 0.1, 0.00456, 1.0, Complex{1.0, 0.0});
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_AccumulateGaussian)->Arg(4096)->Arg(16384);

void BM_EstimateWavefunction(benchmark::State& state) {
  const auto psi0 = GaussianWavepacket::one_dim(-1.0, 0.0, 2.0);
  const SpatialGrid grid(-10.0, 10.0, 1024);
  const HKEnsemble ens(psi0, SamplingScheme::sqrt_husimi(psi0), Potential(HarmonicPotential{}),
                       static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_wavefunction(ens, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateWavefunction)->Arg(4096);

void BM_InitialErrorFock(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto psi0 = GaussianWavepacket::isotropic(Eigen::VectorXd::Constant(d, -1.0), Eigen::VectorXd::Zero(d), 2.0);
  const auto scheme = SamplingScheme::sqrt_husimi(psi0);
  const std::vector<std::size_t> prefixes{static_cast<std::size_t>(state.range(1))};
  CoherentSumOptions opt;
  opt.backend = CoherentSumBackend::Fock;
  for (auto _ : state) benchmark::DoNotOptimize(initial_sampling_error(scheme, prefixes, 7, 0, opt));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_InitialErrorFock)->Args({1, 102400})->Args({4, 12800})->Unit(benchmark::kMillisecond);

void BM_SplitOperatorStep(benchmark::State& state) {
  const SpatialGrid grid(-200.0, 10000.0, static_cast<std::size_t>(state.range(0)));
  const Potential pot = morse();
  const SplitOperatorPropagator prop(grid, pot, 8.0);
  auto psi = evaluate_gaussian(GaussianWavepacket::one_dim(0.0, 0.0, 0.00456), grid);
  for (auto _ : state) prop.advance(psi.values, 1);
}
BENCHMARK(BM_SplitOperatorStep)->Arg(4096)->Arg(16384);

}  // namespace

BENCHMARK_MAIN();
