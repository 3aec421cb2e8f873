#include "hkwave/phase_space.hpp"

#include <cmath>
#include <numbers>

#include "hkwave/rng.hpp"

namespace hkwave {

namespace {

// -log(1e-300)
constexpr double kMaxLogPrefactor = 690.7755278982137;

Eigen::MatrixXd symmetric_power(const Eigen::MatrixXd& m, double power) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd values = eig.eigenvalues().array().pow(power);
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

double quadratic_form(const Eigen::MatrixXd& m, const double* u, int d) {
  double sum = 0.0;
  for (int i = 0; i < d; ++i) {
    double row = 0.0;
    for (int j = 0; j < d; ++j) row += m(i, j) * u[j];
    sum += u[i] * row;
  }
  return sum;
}

}  // namespace

GaussianWavepacket::GaussianWavepacket(Eigen::VectorXd q, Eigen::VectorXd p, Eigen::MatrixXd gamma, double hbar)
    : q_(std::move(q)), p_(std::move(p)), gamma_(std::move(gamma)), hbar_(hbar) {
  const auto d = q_.size();
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("GaussianWavepacket: dimension must be in [1, 8]");
  if (p_.size() != d) throw std::invalid_argument("GaussianWavepacket: q and p differ in length");
  if (gamma_.rows() != d || gamma_.cols() != d)
    throw std::invalid_argument("GaussianWavepacket: width matrix must be D x D");
  if (!(hbar_ > 0.0)) throw std::invalid_argument("GaussianWavepacket: hbar must be positive");
  const double scale = gamma_.cwiseAbs().maxCoeff();
  if (!((gamma_ - gamma_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale))
    throw std::invalid_argument("GaussianWavepacket: width matrix is not symmetric");
  gamma_ = 0.5 * (gamma_ + gamma_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gamma_);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("GaussianWavepacket: width matrix is not positive definite");
  gamma_inv_ = gamma_.inverse();
  gamma_sqrt_ = symmetric_power(gamma_, 0.5);
  gamma_inv_sqrt_ = symmetric_power(gamma_, -0.5);
  normalization_ = std::pow(gamma_.determinant() / std::pow(std::numbers::pi * hbar_, static_cast<double>(d)), 0.25);
}

GaussianWavepacket GaussianWavepacket::isotropic(const Eigen::VectorXd& q, const Eigen::VectorXd& p,
                                                 double width, double hbar) {
  return {q, p, width * Eigen::MatrixXd::Identity(q.size(), q.size()), hbar};
}

GaussianWavepacket GaussianWavepacket::one_dim(double q, double p, double width, double hbar) {
  return isotropic(Eigen::VectorXd::Constant(1, q), Eigen::VectorXd::Constant(1, p), width, hbar);
}

Eigen::VectorXd GaussianWavepacket::center() const {
  Eigen::VectorXd z(2 * dim());
  z << q_, p_;
  return z;
}

double GaussianWavepacket::scalar_width() const {
  const double w = gamma_(0, 0);
  const Eigen::MatrixXd diff = gamma_ - w * Eigen::MatrixXd::Identity(dim(), dim());
  return diff.cwiseAbs().maxCoeff() <= 1e-14 * std::abs(w) ? w : std::nan("");
}

Eigen::MatrixXd GaussianWavepacket::sigma0() const {
  const int d = dim();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  s.topLeftCorner(d, d) = gamma_;
  s.bottomRightCorner(d, d) = gamma_inv_;
  return s;
}

double GaussianWavepacket::weighted_distance(std::span<const double> z) const {
  const int d = dim();
  SmallVec dq(d), dp(d);
  for (int i = 0; i < d; ++i) {
    dq[i] = z[i] - q_[i];
    dp[i] = z[d + i] - p_[i];
  }
  return quadratic_form(gamma_, dq.data(), d) + quadratic_form(gamma_inv_, dp.data(), d);
}

bool GaussianWavepacket::same_family(const GaussianWavepacket& other) const {
  if (other.dim() != dim()) return false;
  const double scale = gamma_.cwiseAbs().maxCoeff();
  return (gamma_ - other.gamma_).cwiseAbs().maxCoeff() <= 1e-12 * scale &&
         std::abs(hbar_ - other.hbar_) <= 1e-12 * hbar_;
}

GaussianWavepacket GaussianWavepacket::moved_to(std::span<const double> z) const {
  GaussianWavepacket g = *this;
  for (int i = 0; i < dim(); ++i) {
    g.q_[i] = z[i];
    g.p_[i] = z[dim() + i];
  }
  return g;
}

Complex log_overlap(const GaussianWavepacket& family, std::span<const double> z, std::span<const double> w) {
  const int d = family.dim();
  double dq[kMaxDim], dp[kMaxDim];
  double phase = 0.0;
  for (int i = 0; i < d; ++i) {
    dq[i] = z[i] - w[i];
    dp[i] = z[d + i] - w[d + i];
    phase += (z[d + i] + w[d + i]) * dq[i];
  }
  const double dist = quadratic_form(family.gamma(), dq, d) + quadratic_form(family.gamma_inv(), dp, d);
  const double hbar = family.hbar();
  return {-dist / (4.0 * hbar), phase / (2.0 * hbar)};
}

Complex gaussian_overlap(const GaussianWavepacket& bra, const GaussianWavepacket& ket) {
  if (!bra.same_family(ket))
    throw std::invalid_argument("gaussian_overlap: wavepackets differ in dimension, width or hbar");
  const Eigen::VectorXd z = bra.center(), w = ket.center();
  return std::exp(log_overlap(bra, {z.data(), static_cast<std::size_t>(z.size())},
                              {w.data(), static_cast<std::size_t>(w.size())}));
}

GridWavefunction evaluate_gaussian(const GaussianWavepacket& g, const SpatialGrid& grid) {
  if (g.dim() != 1) throw std::invalid_argument("evaluate_gaussian: grid evaluation is one-dimensional");
  GridWavefunction psi(grid);
  const double gamma = g.gamma()(0, 0);
  const double q = g.q()[0];
  const double lost = accumulate_gaussian(psi.values, grid, q, g.p()[0], gamma, g.hbar(), Complex{1.0, 0.0});
  const double sigma = std::sqrt(g.hbar() / (2.0 * gamma));
  psi.truncation_warning = (q - 6.0 * sigma < grid.x_min) || (q + 6.0 * sigma > grid.x_max);
  psi.lost_mass_estimate = lost;
  return psi;
}

SamplingScheme::SamplingScheme(SamplingKind kind, GaussianWavepacket reference, double a)
    : kind_(kind), reference_(std::move(reference)) {
  switch (kind_) {
    case SamplingKind::Husimi: a_ = 2.0; break;
    case SamplingKind::SqrtHusimi: a_ = 4.0; break;
    case SamplingKind::GeneralA:
      if (!(a >= 2.0)) throw std::invalid_argument("SamplingScheme: rho_a requires a >= 2");
      a_ = a;
      break;
  }
  const int d = reference_.dim();
  const double scale = std::sqrt(a_ * reference_.hbar() / 2.0);
  sampling_factor_ = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  sampling_factor_.topLeftCorner(d, d) = Eigen::LLT<Eigen::MatrixXd>(reference_.gamma_inv()).matrixL();
  sampling_factor_.bottomRightCorner(d, d) = Eigen::LLT<Eigen::MatrixXd>(reference_.gamma()).matrixL();
  sampling_factor_ *= scale;
}

std::string SamplingScheme::name() const {
  switch (kind_) {
    case SamplingKind::Husimi: return "husimi";
    case SamplingKind::SqrtHusimi: return "sqrt_husimi";
    case SamplingKind::GeneralA: break;
  }
  return "general_a";
}

double SamplingScheme::log_density(std::span<const double> z) const {
  const double d = reference_.dim();
  return d * std::log(2.0 / a_) - reference_.weighted_distance(z) / (a_ * reference_.hbar());
}

double SamplingScheme::density(std::span<const double> z) const { return std::exp(log_density(z)); }

Complex SamplingScheme::log_prefactor(std::span<const double> z) const {
  const Eigen::VectorXd z0 = reference_.center();
  const std::span<const double> center{z0.data(), static_cast<std::size_t>(z0.size())};
  switch (kind_) {
    case SamplingKind::Husimi:
      // r_H = <psi0 | g_z>^{-1}
      return -log_overlap(reference_, center, z);
    case SamplingKind::SqrtHusimi:
      return {reference_.dim() * std::numbers::ln2, log_overlap(reference_, z, center).imag()};
    case SamplingKind::GeneralA:
      break;
  }
  return log_overlap(reference_, z, center) - log_density(z);
}

Complex SamplingScheme::prefactor(std::span<const double> z) const {
  const Complex lr = log_prefactor(z);
  if (kind_ == SamplingKind::Husimi && lr.real() > kMaxLogPrefactor)
    throw NumericalError("Husimi prefactor overflow: overlap with psi0 below 1e-300");
  return std::exp(lr);
}

void SamplingScheme::sample_into(std::span<double> z, std::uint64_t seed, std::uint32_t stream,
                                 std::uint64_t index) const {
  const int n = 2 * reference_.dim();
  double xi[2 * kMaxDim];
  normal_deviates(seed, stream, index, {xi, static_cast<std::size_t>(n)});
  for (int i = 0; i < n; ++i) {
    double v = 0.0;
    for (int j = 0; j <= i; ++j) v += sampling_factor_(i, j) * xi[j];
    z[i] = v;
  }
  for (int i = 0; i < reference_.dim(); ++i) {
    z[i] += reference_.q()[i];
    z[reference_.dim() + i] += reference_.p()[i];
  }
}

PhaseSpaceSamples SamplingScheme::sample(std::size_t n, std::uint64_t seed, std::uint32_t stream) const {
  if (n < 1) throw std::invalid_argument("sample: n must be at least 1");
  PhaseSpaceSamples out(reference_.dim(), n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    sample_into(out[static_cast<std::size_t>(i)], seed, stream, static_cast<std::uint64_t>(i));
  return out;
}

SamplingKind parse_sampling_kind(const std::string& name) {
  if (name == "husimi") return SamplingKind::Husimi;
  if (name == "sqrt_husimi") return SamplingKind::SqrtHusimi;
  if (name == "general_a") return SamplingKind::GeneralA;
  throw std::invalid_argument("unknown sampling scheme '" + name + "'");
}

}  // namespace hkwave
