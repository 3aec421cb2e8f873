#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hkwave/dynamics.hpp"
#include "hkwave/grid.hpp"
#include "hkwave/phase_space.hpp"

namespace hkwave {

/// Closed-form solution of the harmonic oscillator for a Gaussian initial state:
/// psi(x, t) = exp{(i/hbar) [alpha_t/2 (x - q_t)^2 + p_t (x - q_t) + beta_t]}.
struct HarmonicExactState {
  Complex alpha_t;
  double q_t = 0.0;
  double p_t = 0.0;
  Complex beta_t;
  double omega = 1.0;
  double mass = 1.0;
  double b = 1.0;
  Complex alpha_0;
  Complex beta_0;
  double hbar = 1.0;
  double t = 0.0;

  Complex operator()(double x) const;
};

/// Width after time t under the oscillator (b = m omega), starting from alpha.
Complex harmonic_width_flow(Complex alpha, double b, double omega, double t);

/// State at time t; beta_0 is chosen so that psi(x, 0) equals the frozen Gaussian psi0.
HarmonicExactState harmonic_exact_state(const GaussianWavepacket& psi0, double omega, double mass, double t);

GridWavefunction harmonic_exact(const GaussianWavepacket& psi0, double omega, double mass, double t,
                                const SpatialGrid& grid);

/// Strang-split Fourier propagator exp(-iV dt/2hbar) exp(-iT dt/hbar) exp(-iV dt/2hbar)
/// on a periodic 1D grid.
class SplitOperatorPropagator {
 public:
  SplitOperatorPropagator(const SpatialGrid& grid, const Potential& pot, double dt, double hbar = 1.0);
  ~SplitOperatorPropagator();
  SplitOperatorPropagator(SplitOperatorPropagator&&) noexcept;
  SplitOperatorPropagator& operator=(SplitOperatorPropagator&&) noexcept;

  const SpatialGrid& grid() const { return grid_; }
  double dt() const { return dt_; }

  /// Applies n_steps steps in place. Consecutive half potential kicks are merged.
  void advance(std::span<Complex> values, std::size_t n_steps) const;

  /// Largest fraction of |psi|^2 found within five points of either grid edge.
  static double edge_mass_fraction(std::span<const Complex> values);

 private:
  struct Plans;
  SpatialGrid grid_;
  double dt_;
  std::vector<Complex> half_kick_, full_kick_, kinetic_;
  std::unique_ptr<Plans> plans_;
};

/// Edge mass above this fraction of the norm sets the truncation warning.
inline constexpr double kEdgeMassThreshold = 1e-10;

GridWavefunction split_operator_propagate(const GridWavefunction& psi, const Potential& pot, double dt,
                                          std::size_t n_steps, double hbar = 1.0);

}  // namespace hkwave
