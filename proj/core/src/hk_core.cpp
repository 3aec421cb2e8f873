#include "hkwave/hk_core.hpp"

#include <cmath>
#include <numbers>

#include "hkwave/parallel.hpp"

namespace hkwave {

namespace {

constexpr double kCausticThreshold = 1e-30;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 1D fast path: A = (M_qq + M_pp + i (M_pq / g - M_qp g)) / 2.
Complex determinant_1d(const double* m, double gamma) {
  // column-major [M_qq, M_pq, M_qp, M_pp]
  return {0.5 * (m[0] + m[3]), 0.5 * (m[1] / gamma - m[2] * gamma)};
}

Complex determinant_nd(const Eigen::Ref<const Eigen::MatrixXd>& m, const Eigen::MatrixXd& gamma,
                       const Eigen::MatrixXd& gamma_inv) {
  const Eigen::Index d = gamma.rows();
  SmallMat re(d, d), im(d, d);
  re.noalias() = gamma_inv * m.bottomRightCorner(d, d) * gamma;
  re += m.topLeftCorner(d, d);
  im.noalias() = gamma_inv * m.bottomLeftCorner(d, d);
  im.noalias() -= m.topRightCorner(d, d) * gamma;
  SmallCMat c(d, d);
  c.real() = re;
  c.imag() = im;
  return std::ldexp(1.0, -static_cast<int>(d)) * c.determinant();
}

HKPrefactorState next_state(Complex a, const HKPrefactorState& prev, double t) {
  const double abs_a = std::abs(a);
  if (!(abs_a >= kCausticThreshold))
    throw CausticError("HK prefactor: |det| below 1e-30 near a caustic");
  HKPrefactorState s;
  s.t = t;
  s.log_abs_a = std::log(abs_a);
  // Principal increment relative to the previous continuous argument.
  s.unwrapped_arg = prev.unwrapped_arg + std::arg(a * std::polar(1.0, -prev.unwrapped_arg));
  s.R = std::exp(s.log_r());
  return s;
}

}  // namespace

Complex prefactor_determinant(const Eigen::Ref<const Eigen::MatrixXd>& m, const Eigen::MatrixXd& gamma) {
  const Eigen::Index d = gamma.rows();
  if (m.rows() != 2 * d || m.cols() != 2 * d)
    throw std::invalid_argument("prefactor_determinant: stability matrix must be 2D x 2D");
  if (d == 1) {
    const double mm[4] = {m(0, 0), m(1, 0), m(0, 1), m(1, 1)};
    return determinant_1d(mm, gamma(0, 0));
  }
  return determinant_nd(m, gamma, gamma.inverse());
}

HKPrefactorState hk_prefactor(const Eigen::Ref<const Eigen::MatrixXd>& m, const Eigen::MatrixXd& gamma,
                              const HKPrefactorState& prev, double t) {
  return next_state(prefactor_determinant(m, gamma), prev, t);
}

PrefactorBound prefactor_bound_check(const Eigen::Ref<const Eigen::MatrixXd>& m, const Eigen::MatrixXd& gamma) {
  const Eigen::Index d = gamma.rows();
  const Complex a = prefactor_determinant(m, gamma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gamma);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseSqrt();
  const Eigen::MatrixXd g_half = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::MatrixXd g_half_inv =
      eig.eigenvectors() * root.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  Eigen::MatrixXd left = Eigen::MatrixXd::Zero(2 * d, 2 * d), right = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  left.topLeftCorner(d, d) = g_half;
  left.bottomRightCorner(d, d) = g_half_inv;
  right.topLeftCorner(d, d) = g_half_inv;
  right.bottomRightCorner(d, d) = g_half;
  const Eigen::MatrixXd mt = left * m * right;
  const Eigen::MatrixXd f = Eigen::MatrixXd::Identity(2 * d, 2 * d) + mt.transpose() * mt;
  const double rhs = std::ldexp(std::sqrt(f.determinant()), -static_cast<int>(d));
  return {std::abs(a), rhs};
}

HKPrefactorState harmonic_prefactor(double gamma, double b, double omega, double t, int dim) {
  const double s = omega * t;
  const double k = gamma / b + b / gamma;
  const double c = std::cos(s), sn = std::sin(s);
  const Complex a1{c, -0.5 * k * sn};
  const double turns = std::round((s - std::atan2(sn, c)) / kTwoPi);
  const double arg1 = -(std::atan2(k * sn, 2.0 * c) + kTwoPi * turns);
  HKPrefactorState st;
  st.t = t;
  st.log_abs_a = dim * std::log(std::abs(a1));
  st.unwrapped_arg = dim * arg1;
  st.R = std::exp(st.log_r());
  return st;
}

HKEnsemble::HKEnsemble(GaussianWavepacket psi0, SamplingScheme scheme, Potential potential, std::size_t n,
                       std::uint64_t seed, std::uint32_t stream)
    : psi0_(std::move(psi0)), scheme_(std::move(scheme)), potential_(std::move(potential)), seed_(seed) {
  if (n < 1) throw std::invalid_argument("HKEnsemble: n must be at least 1");
  if (!psi0_.same_family(scheme_.reference()) ||
      (psi0_.center() - scheme_.reference().center()).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("HKEnsemble: sampling scheme must be built on psi0");
  if (potential_.dim() != psi0_.dim())
    throw std::invalid_argument("HKEnsemble: potential and wavepacket dimensions differ");
  initial_ = scheme_.sample(n, seed, stream);
  log_weights_.resize(n);
  trajectories_.resize(n);
  prefactors_.assign(n, HKPrefactorState{});
  const int d = psi0_.dim();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto j = static_cast<std::size_t>(i);
    log_weights_[j] = scheme_.log_prefactor(initial_[j]);
    trajectories_[j] = Trajectory(d, initial_[j]);
  }
}

std::size_t HKEnsemble::invalid_count() const {
  std::size_t count = 0;
  for (const auto& t : trajectories_) count += t.valid() ? 0 : 1;
  return count;
}

void HKEnsemble::propagate(double dt, std::size_t n_steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt must be positive");
  const int d = dim();
  const Eigen::MatrixXd& gamma = psi0_.gamma();
  const Eigen::MatrixXd& gamma_inv = psi0_.gamma_inv();
  const double g1 = gamma(0, 0);
  std::size_t caustics = 0;
#pragma omp parallel for schedule(static) reduction(+ : caustics)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(size()); ++i) {
    Trajectory& traj = trajectories_[static_cast<std::size_t>(i)];
    HKPrefactorState& pref = prefactors_[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < n_steps && traj.valid(); ++k) {
      advance(traj, potential_, dt);
      if (!traj.valid()) break;
      const Complex a = d == 1 ? determinant_1d(traj.stability().data(), g1)
                               : determinant_nd(traj.stability(), gamma, gamma_inv);
      if (!(std::abs(a) >= kCausticThreshold)) {
        traj.invalidate();
        ++caustics;
        break;
      }
      pref = next_state(a, pref, traj.time());
    }
  }
  caustics_ += caustics;
  time_ += dt * static_cast<double>(n_steps);
}

void HKEnsemble::set_exact_harmonic(double t) {
  const HarmonicPotential* osc = potential_.harmonic();
  if (osc == nullptr) throw std::invalid_argument("set_exact_harmonic: potential is not harmonic");
  const double gamma = psi0_.scalar_width();
  if (std::isnan(gamma)) throw std::invalid_argument("set_exact_harmonic: width matrix must be scalar");
  const HKPrefactorState pref = harmonic_prefactor(gamma, osc->b(), osc->omega, t, dim());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(size()); ++i) {
    const auto j = static_cast<std::size_t>(i);
    trajectories_[j] = harmonic_flow(initial_[j], *osc, t);
    prefactors_[j] = pref;
  }
  time_ = t;
}

Complex HKEnsemble::log_coefficient(std::size_t j) const {
  return log_weights_[j] + prefactors_[j].log_r() + Complex{0.0, trajectories_[j].action() / psi0_.hbar()};
}

HKEnsemble build_ensemble(const GaussianWavepacket& psi0, const SamplingScheme& scheme, const Potential& potential,
                          std::size_t n, std::uint64_t seed, std::uint32_t stream) {
  return {psi0, scheme, potential, n, seed, stream};
}

namespace {

std::size_t resolve_count(const HKEnsemble& ens, std::size_t count) {
  if (count == 0) return ens.size();
  if (count > ens.size()) throw std::invalid_argument("estimator: count exceeds ensemble size");
  return count;
}

struct GridPartial {
  std::vector<Complex> values;
  double lost = 0.0;
  double mass = 0.0;
};

}  // namespace

GridWavefunction estimate_wavefunction(const HKEnsemble& ens, const SpatialGrid& grid, std::size_t count) {
  if (ens.dim() != 1) throw std::invalid_argument("estimate_wavefunction: grid evaluation is one-dimensional");
  const std::size_t n = resolve_count(ens, count);
  const std::size_t chunks = (n + kEstimatorChunk - 1) / kEstimatorChunk;
  const double gamma = ens.psi0().gamma()(0, 0);
  const double hbar = ens.psi0().hbar();

  auto leaf = [&](std::size_t c) {
    GridPartial part;
    part.values.assign(grid.n_points, Complex{});
    const std::size_t end = std::min(n, (c + 1) * kEstimatorChunk);
    for (std::size_t j = c * kEstimatorChunk; j < end; ++j) {
      if (!ens.valid(j)) continue;
      const Trajectory& traj = ens.trajectory(j);
      const Complex coef = std::exp(ens.log_coefficient(j));
      const double lost = accumulate_gaussian(part.values, grid, traj.q(0), traj.p(0), gamma, hbar, coef);
      const double w = std::norm(coef);
      part.lost += w * lost;
      part.mass += w;
    }
    return part;
  };
  auto combine = [](GridPartial& left, const GridPartial& right) {
    for (std::size_t k = 0; k < left.values.size(); ++k) left.values[k] += right.values[k];
    left.lost += right.lost;
    left.mass += right.mass;
  };
  GridPartial total = tree_reduce<GridPartial>(chunks, leaf, combine);

  GridWavefunction psi(grid);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < grid.n_points; ++k) psi.values[k] = total.values[k] * inv_n;
  psi.lost_mass_estimate = total.mass > 0.0 ? total.lost / total.mass : 0.0;
  psi.truncation_warning = psi.lost_mass_estimate > 1e-10;
  return psi;
}

Complex autocorrelation(const HKEnsemble& ens, const GaussianWavepacket& psi0, std::size_t count) {
  if (!psi0.same_family(ens.psi0()))
    throw std::invalid_argument("autocorrelation: psi0 differs in dimension, width or hbar from the ensemble");
  const std::size_t n = resolve_count(ens, count);
  const std::size_t chunks = (n + kEstimatorChunk - 1) / kEstimatorChunk;
  const Eigen::VectorXd z0v = psi0.center();
  const std::span<const double> z0{z0v.data(), static_cast<std::size_t>(z0v.size())};

  auto leaf = [&](std::size_t c) {
    Complex sum{};
    const std::size_t end = std::min(n, (c + 1) * kEstimatorChunk);
    for (std::size_t j = c * kEstimatorChunk; j < end; ++j) {
      if (!ens.valid(j)) continue;
      sum += std::exp(ens.log_coefficient(j) + log_overlap(psi0, z0, ens.trajectory(j).z()));
    }
    return sum;
  };
  auto combine = [](Complex& left, const Complex& right) { left += right; };
  return tree_reduce<Complex>(chunks, leaf, combine) / static_cast<double>(n);
}

}  // namespace hkwave
