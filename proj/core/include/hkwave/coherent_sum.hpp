#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hkwave/phase_space.hpp"

namespace hkwave {

enum class CoherentSumBackend { Auto, Fock, Pairwise };

struct CoherentSumOptions {
  CoherentSumBackend backend = CoherentSumBackend::Auto;
  // Per-sample truncation: neglected squared amplitude |c_j|^2 * tail <= tail_tolerance.
  double tail_tolerance = 1e-10;
  // Largest number-state table the Fock backend may allocate.
  std::size_t max_states = 8'000'000;
};

/// Exact L2 distances || (1/N) sum_{j<N} exp(log_coef_j) g_{z_j} - psi0 || for every N in
/// `prefixes` (ascending, each <= number of points). The Gaussians share psi0's width.
///
/// The Fock backend expands every coherent state in the number states of the oscillator
/// matched to psi0, where psi0 is the vacuum, and accumulates the coefficients over a
/// total-degree simplex, so the cost is linear in N. The pairwise backend sums all N^2
/// analytic overlaps. Auto picks the cheaper one that fits in memory.
std::vector<double> coherent_sum_distance(const GaussianWavepacket& psi0, const PhaseSpaceSamples& points,
                                          std::span<const Complex> log_coef, std::span<const std::size_t> prefixes,
                                          const CoherentSumOptions& options = {});

/// Sampling error ||psi_N(0) - psi0|| of the HK estimator at t = 0 for each N in `prefixes`,
/// using samples 0..N-1 of (seed, stream).
std::vector<double> initial_sampling_error(const SamplingScheme& scheme, std::span<const std::size_t> prefixes,
                                           std::uint64_t seed, std::uint32_t stream = 0,
                                           const CoherentSumOptions& options = {});

/// Smallest m with P(Poisson(mean) > m) <= eps.
int poisson_cutoff(double mean, double eps);

}  // namespace hkwave
