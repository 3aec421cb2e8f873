#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hkwave/grid.hpp"
#include "hkwave/types.hpp"

namespace hkwave {

/// Frozen Gaussian g_z(x) = (det gamma / (pi hbar)^D)^{1/4}
///   * exp(-(x-q)^T gamma (x-q) / (2 hbar) + i p^T (x-q) / hbar)
/// centred at z = (q, p) with a real symmetric positive-definite width matrix gamma.
class GaussianWavepacket {
 public:
  GaussianWavepacket(Eigen::VectorXd q, Eigen::VectorXd p, Eigen::MatrixXd gamma, double hbar = 1.0);

  /// gamma = width * Id_D.
  static GaussianWavepacket isotropic(const Eigen::VectorXd& q, const Eigen::VectorXd& p,
                                      double width, double hbar = 1.0);
  static GaussianWavepacket one_dim(double q, double p, double width, double hbar = 1.0);

  int dim() const { return static_cast<int>(q_.size()); }
  const Eigen::VectorXd& q() const { return q_; }
  const Eigen::VectorXd& p() const { return p_; }
  Eigen::VectorXd center() const;
  const Eigen::MatrixXd& gamma() const { return gamma_; }
  const Eigen::MatrixXd& gamma_inv() const { return gamma_inv_; }
  const Eigen::MatrixXd& gamma_sqrt() const { return gamma_sqrt_; }
  const Eigen::MatrixXd& gamma_inv_sqrt() const { return gamma_inv_sqrt_; }
  double hbar() const { return hbar_; }
  double normalization() const { return normalization_; }

  /// Scalar width when gamma is a multiple of the identity, otherwise NaN.
  double scalar_width() const;

  /// Sigma0 = diag(gamma, gamma^{-1}).
  Eigen::MatrixXd sigma0() const;

  /// (z - z0)^T Sigma0 (z - z0) for a phase-space point z (length 2D) relative to this centre.
  double weighted_distance(std::span<const double> z) const;

  /// Same D, gamma and hbar (to 1e-12 relative).
  bool same_family(const GaussianWavepacket& other) const;

  GaussianWavepacket moved_to(std::span<const double> z) const;

 private:
  Eigen::VectorXd q_, p_;
  Eigen::MatrixXd gamma_, gamma_inv_, gamma_sqrt_, gamma_inv_sqrt_;
  double hbar_;
  double normalization_;
};

/// log <g_z | g_w> for two members of the same family, given their phase-space centres.
Complex log_overlap(const GaussianWavepacket& family, std::span<const double> z, std::span<const double> w);

/// <bra | ket>; both must share D, gamma and hbar.
Complex gaussian_overlap(const GaussianWavepacket& bra, const GaussianWavepacket& ket);

/// Grid values of a one-dimensional frozen Gaussian. Flags truncation when the grid does
/// not cover six standard deviations of |g|^2 on either side.
GridWavefunction evaluate_gaussian(const GaussianWavepacket& g, const SpatialGrid& grid);

/// Phase-space points stored contiguously, 2D doubles per point: (q_1..q_D, p_1..p_D).
class PhaseSpaceSamples {
 public:
  PhaseSpaceSamples() = default;
  PhaseSpaceSamples(int dim, std::size_t count) : dim_(dim), data_(count * 2 * static_cast<std::size_t>(dim)) {}

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / (2 * static_cast<std::size_t>(dim_)); }
  std::span<const double> operator[](std::size_t i) const {
    return {data_.data() + i * 2 * static_cast<std::size_t>(dim_), 2 * static_cast<std::size_t>(dim_)};
  }
  std::span<double> operator[](std::size_t i) {
    return {data_.data() + i * 2 * static_cast<std::size_t>(dim_), 2 * static_cast<std::size_t>(dim_)};
  }

 private:
  int dim_ = 0;
  std::vector<double> data_;
};

enum class SamplingKind { Husimi, SqrtHusimi, GeneralA };

/// Importance-sampling density over phase space together with the prefactor r(z)
/// such that r(z) rho(z) = <g_z | psi0>. Densities are taken with respect to
/// d nu = dz / (2 pi hbar)^D. The normal family rho_a has covariance (a hbar / 2) Sigma0^{-1};
/// a = 2 is the Husimi density and a = 4 the normalised square root of it.
class SamplingScheme {
 public:
  SamplingScheme(SamplingKind kind, GaussianWavepacket reference, double a = 0.0);

  static SamplingScheme husimi(const GaussianWavepacket& psi0) { return {SamplingKind::Husimi, psi0}; }
  static SamplingScheme sqrt_husimi(const GaussianWavepacket& psi0) { return {SamplingKind::SqrtHusimi, psi0}; }
  static SamplingScheme general(const GaussianWavepacket& psi0, double a) { return {SamplingKind::GeneralA, psi0, a}; }

  SamplingKind kind() const { return kind_; }
  double a() const { return a_; }
  const GaussianWavepacket& reference() const { return reference_; }
  std::string name() const;

  double density(std::span<const double> z) const;
  double log_density(std::span<const double> z) const;

  /// log r(z). Never overflows; see prefactor() for the checked linear value.
  Complex log_prefactor(std::span<const double> z) const;
  /// r(z). Throws NumericalError when |<g_z|psi0>| < 1e-300 for the Husimi scheme.
  Complex prefactor(std::span<const double> z) const;

  /// i.i.d. draws; sample i depends only on (seed, stream, i).
  PhaseSpaceSamples sample(std::size_t n, std::uint64_t seed, std::uint32_t stream = 0) const;
  void sample_into(std::span<double> z, std::uint64_t seed, std::uint32_t stream, std::uint64_t index) const;

 private:
  SamplingKind kind_;
  GaussianWavepacket reference_;
  double a_;
  Eigen::MatrixXd sampling_factor_;  // Cholesky factor of the covariance
};

SamplingKind parse_sampling_kind(const std::string& name);

}  // namespace hkwave
