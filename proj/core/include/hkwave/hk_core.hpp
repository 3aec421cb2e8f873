#pragma once

#include <cstdint>
#include <vector>

#include "hkwave/dynamics.hpp"
#include "hkwave/grid.hpp"
#include "hkwave/phase_space.hpp"

namespace hkwave {

/// HK prefactor R = sqrt(A) with A = 2^{-D} det(M_qq + g^{-1} M_pp g - i M_qp g + i g^{-1} M_pq).
/// The argument of A is tracked continuously in time; R uses half of it.
struct HKPrefactorState {
  Complex R{1.0, 0.0};
  double log_abs_a = 0.0;
  double unwrapped_arg = 0.0;
  double t = 0.0;

  /// log R = log|A| / 2 + i arg / 2.
  Complex log_r() const { return {0.5 * log_abs_a, 0.5 * unwrapped_arg}; }
};

/// A = 2^{-D} det(...) for the given stability matrix and width.
Complex prefactor_determinant(const Eigen::Ref<const Eigen::MatrixXd>& m, const Eigen::MatrixXd& gamma);

/// Advances the branch of sqrt(A) from prev. Throws CausticError when |A| < 1e-30.
HKPrefactorState hk_prefactor(const Eigen::Ref<const Eigen::MatrixXd>& m, const Eigen::MatrixXd& gamma,
                              const HKPrefactorState& prev, double t);

struct PrefactorBound {
  double lhs;  // |R|^2 = |A|
  double rhs;  // 2^{-D} sqrt(det(Id + M'^T M'))
};

/// Both sides of |R|^2 = 2^{-D} sqrt(det(Id + M'^T M')) with
/// M' = diag(g^{1/2}, g^{-1/2}) M diag(g^{-1/2}, g^{1/2}).
PrefactorBound prefactor_bound_check(const Eigen::Ref<const Eigen::MatrixXd>& m, const Eigen::MatrixXd& gamma);

/// Closed-form prefactor of the isotropic harmonic oscillator (b = m omega, scalar width),
/// with the argument continued through the zeros of Re A.
HKPrefactorState harmonic_prefactor(double gamma, double b, double omega, double t, int dim);

/// N guiding trajectories with fixed initial weights r(z_j).
class HKEnsemble {
 public:
  HKEnsemble(GaussianWavepacket psi0, SamplingScheme scheme, Potential potential, std::size_t n,
             std::uint64_t seed, std::uint32_t stream = 0);

  std::size_t size() const { return log_weights_.size(); }
  int dim() const { return psi0_.dim(); }
  double time() const { return time_; }
  std::uint64_t seed() const { return seed_; }
  const GaussianWavepacket& psi0() const { return psi0_; }
  const SamplingScheme& scheme() const { return scheme_; }
  const Potential& potential() const { return potential_; }

  const PhaseSpaceSamples& initial_points() const { return initial_; }
  Complex log_weight(std::size_t j) const { return log_weights_[j]; }
  Complex weight(std::size_t j) const { return std::exp(log_weights_[j]); }
  const Trajectory& trajectory(std::size_t j) const { return trajectories_[j]; }
  const HKPrefactorState& prefactor(std::size_t j) const { return prefactors_[j]; }
  bool valid(std::size_t j) const { return trajectories_[j].valid(); }

  std::size_t invalid_count() const;
  std::size_t caustic_count() const { return caustics_; }

  /// Integrates every valid trajectory by n_steps Verlet steps of size dt, tracking the
  /// prefactor branch after each step. Trajectories that hit a caustic or produce
  /// non-finite values are flagged and drop out of all sums.
  void propagate(double dt, std::size_t n_steps);

  /// Replaces the integrated state by the exact harmonic flow at time t (requires a
  /// harmonic potential and a scalar width).
  void set_exact_harmonic(double t);

  /// log of r_j R_j e^{i S_j / hbar}.
  Complex log_coefficient(std::size_t j) const;

 private:
  GaussianWavepacket psi0_;
  SamplingScheme scheme_;
  Potential potential_;
  std::uint64_t seed_;
  PhaseSpaceSamples initial_;
  std::vector<Complex> log_weights_;
  std::vector<Trajectory> trajectories_;
  std::vector<HKPrefactorState> prefactors_;
  double time_ = 0.0;
  std::size_t caustics_ = 0;
};

HKEnsemble build_ensemble(const GaussianWavepacket& psi0, const SamplingScheme& scheme, const Potential& potential,
                          std::size_t n, std::uint64_t seed, std::uint32_t stream = 0);

/// Trajectories handled per partial sum of the estimator.
inline constexpr std::size_t kEstimatorChunk = 1024;

/// psi_N(x, t) = (1/count) sum_{j < count} r_j R_j e^{i S_j/hbar} g_{z_j(t)}(x) on a 1D grid,
/// summed in chunks over a fixed reduction tree. count = 0 uses the whole ensemble.
GridWavefunction estimate_wavefunction(const HKEnsemble& ens, const SpatialGrid& grid, std::size_t count = 0);

/// <psi0 | psi_N(t)> from analytic Gaussian overlaps. count = 0 uses the whole ensemble.
Complex autocorrelation(const HKEnsemble& ens, const GaussianWavepacket& psi0, std::size_t count = 0);

}  // namespace hkwave
