#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "hkwave/types.hpp"

namespace hkwave {

struct HarmonicPotential {
  double mass = 1.0;
  double omega = 1.0;
  double b() const { return mass * omega; }
};

/// V(x) = v_eq + d_e [1 - exp(-a (x - q_eq))]^2, one-dimensional.
struct MorsePotential {
  double v_eq = 0.0;
  double d_e = 1.0;
  double a = 1.0;
  double q_eq = 0.0;
  double mass = 1.0;
};

struct CustomPotential {
  int dim = 1;
  double mass = 1.0;
  std::function<double(const SmallVec&)> value;
  std::function<SmallVec(const SmallVec&)> gradient;
  std::function<SmallMat(const SmallVec&)> hessian;
};

/// Morse oscillator parametrised by anharmonicity chi = hbar omega_eq / (4 d_e)
/// and harmonic frequency omega_eq at the minimum.
struct MorseSpec {
  double chi = 0.01;
  double omega_eq = 0.0041;
  double v_eq = 0.0;
  double q_eq = 0.0;
  double mass = 1.0;
  double hbar = 1.0;

  double d_e() const { return hbar * omega_eq / (4.0 * chi); }
  double a() const { return std::sqrt(2.0 * mass * omega_eq * chi / hbar); }
  MorsePotential potential() const { return {v_eq, d_e(), a(), q_eq, mass}; }
  int bound_state_count() const;
};

class Potential {
 public:
  Potential(HarmonicPotential h, int dim = 1);
  Potential(MorsePotential m);
  Potential(CustomPotential c);

  int dim() const { return dim_; }
  double mass() const;
  double value(const SmallVec& q) const;
  /// Value, gradient and Hessian at q, sharing intermediate work.
  void evaluate(const SmallVec& q, double& v, SmallVec& grad, SmallMat& hess) const;
  void evaluate_1d(double q, double& v, double& grad, double& hess) const;

  const HarmonicPotential* harmonic() const { return std::get_if<HarmonicPotential>(&kind_); }
  const MorsePotential* morse() const { return std::get_if<MorsePotential>(&kind_); }

 private:
  std::variant<HarmonicPotential, MorsePotential, CustomPotential> kind_;
  int dim_;
};

/// Classical state along one guiding trajectory: z(t) = (q, p), action S, and the
/// stability matrix M = d z(t) / d z(0) with blocks [[M_qq, M_qp], [M_pq, M_pp]].
class Trajectory {
 public:
  Trajectory() = default;
  /// z0 holds (q, p); M = Id, S = 0, t = 0.
  Trajectory(int dim, std::span<const double> z0);

  int dim() const { return dim_; }
  double time() const { return time_; }
  double action() const { return action_; }
  bool valid() const { return valid_; }

  std::span<const double> z() const { return {data_.data(), 2 * static_cast<std::size_t>(dim_)}; }
  double q(int i) const { return data_[i]; }
  double p(int i) const { return data_[dim_ + i]; }
  /// Full 2D x 2D stability matrix (column-major storage).
  Eigen::Map<const Eigen::MatrixXd> stability() const {
    return {data_.data() + 2 * dim_, 2 * dim_, 2 * dim_};
  }

  void invalidate() { valid_ = false; }

  /// Overwrites the state with externally known values (closed-form flows).
  void assign(std::span<const double> z, const Eigen::Ref<const Eigen::MatrixXd>& m, double action, double t);

 private:
  friend void advance(Trajectory&, const Potential&, double);

  int dim_ = 0;
  double time_ = 0.0;
  double action_ = 0.0;
  bool valid_ = true;
  bool force_cached_ = false;
  double v_cached_ = 0.0;
  // [q (D) | p (D) | M (4D^2, column-major) | grad V (D) | Hess V (D^2)]
  std::vector<double> data_;
};

/// Classical energy |p|^2 / 2m + V(q).
double energy(const Trajectory& traj, const Potential& pot);

/// One velocity-Verlet step applied in place to z, M (its exact linearisation) and S
/// (trapezoid of T - V at the step endpoints). Non-finite results invalidate the trajectory.
void advance(Trajectory& traj, const Potential& pot, double dt);

/// Value-returning form of advance().
Trajectory step(Trajectory traj, const Potential& pot, double dt);

/// Final state after n_steps steps from (z0, M = Id, S = 0).
Trajectory propagate(std::span<const double> z0, const Potential& pot, double dt, std::size_t n_steps);

/// States after 0, 1, ..., n_steps steps.
std::vector<Trajectory> propagate_history(std::span<const double> z0, const Potential& pot, double dt,
                                          std::size_t n_steps);

/// Exact harmonic flow from z0 over time t (isotropic oscillator in any dimension).
Trajectory harmonic_flow(std::span<const double> z0, const HarmonicPotential& osc, double t);

/// E_n = hbar omega_eq [(n + 1/2) - chi (n + 1/2)^2] for n = 0..n_max, relative to v_eq.
std::vector<double> morse_levels(const MorseSpec& spec, int n_max);

}  // namespace hkwave
