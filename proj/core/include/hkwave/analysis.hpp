#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hkwave/grid.hpp"

namespace hkwave {

/// sqrt(sum |a - b|^2 dx); the grids must be identical.
double l2_error(const GridWavefunction& a, const GridWavefunction& b);

/// Variance of the sqrt-Husimi estimator at t = 0: 4^D - 1.
double variance_initial_sqrt_husimi(int dim);

/// Variance of the rho_a estimator at t = 0: (a^2 / (2 (a - 2)))^D - 1, a > 2.
double variance_rho_a_initial(double a, int dim);

/// Variance of the sqrt-Husimi estimator for the harmonic oscillator:
/// 2 [4 cos^2(wt) + (g/b + b/g)^2 sin^2(wt)]^{1/2} - 1 with b = m w.
double variance_harmonic_sqrt_husimi(double gamma, double mass, double omega, double t);

/// F(N) = c N^{-s}, fitted by least squares on (log N, log F).
struct ConvergenceFit {
  double c = 0.0;
  double s = 0.0;
  double residual = 0.0;  // RMS residual in log space
  std::vector<double> n_values;
  std::vector<double> errors;

  double operator()(double n) const;
};

ConvergenceFit fit_power_law(std::span<const double> n_values, std::span<const double> errors);

struct RmseResult {
  double s_k = 0.0;   // mean of squared L2 errors
  double root = 0.0;  // sqrt(s_k)
};

/// S_K = (1/K) sum_j ||run_j - reference||^2.
RmseResult empirical_rmse(std::span<const GridWavefunction> runs, const GridWavefunction& reference);
/// Same from precomputed (unsquared) L2 errors.
RmseResult empirical_rmse(std::span<const double> l2_errors);

struct TrajectoryCountQuery {
  double sigma2;
  double epsilon;
  double p;
};

/// ceil(sigma^2 / (p eps^2)).
std::uint64_t chebyshev_min_trajectories(const TrajectoryCountQuery& q);

/// ceil((sigma^2 / 2 eps^2) [erfc^{-1}(2p)]^2); empty when p >= 1/2.
std::optional<std::uint64_t> clt_trajectory_estimate(const TrajectoryCountQuery& q);

/// Inverse complementary error function on (0, 2).
double erfc_inv(double y);

struct Spectrum {
  std::vector<double> energy;     // ascending, spacing 2 pi hbar / (n dt)
  std::vector<double> intensity;  // Re of the one-sided transform of C(t)

  double bin_width() const { return energy.size() > 1 ? energy[1] - energy[0] : 0.0; }
};

/// I(E) = Re sum_n w_n C(t_n) exp(i E t_n / hbar) dt with t_n = n dt, w_0 = 1/2 and the
/// optional Gaussian damping exp(-t^2 / (2 tau^2)).
Spectrum spectrum(std::span<const Complex> autocorr, double dt, double hbar = 1.0,
                  std::optional<double> damping_tau = std::nullopt);

/// Damping time that gives a Gaussian line of half width at half maximum `hwhm` (energy).
double damping_time_for_hwhm(double hwhm, double hbar = 1.0);

/// Energies of local maxima whose intensity exceeds min_relative * max intensity, ascending.
std::vector<double> find_peaks(const Spectrum& s, double min_relative = 0.01);

}  // namespace hkwave
