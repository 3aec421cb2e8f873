#include "hkwave/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft_plan.hpp"

namespace hkwave {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kEdgePoints = 5;
constexpr std::size_t kEdgeCheckInterval = 32;
}  // namespace

Complex HarmonicExactState::operator()(double x) const {
  const double dx = x - q_t;
  return std::exp(kI / hbar * (0.5 * alpha_t * dx * dx + p_t * dx + beta_t));
}

Complex harmonic_width_flow(Complex alpha, double b, double omega, double t) {
  const double c = std::cos(omega * t), s = std::sin(omega * t);
  return b * (alpha * c - b * s) / (b * c + alpha * s);
}

HarmonicExactState harmonic_exact_state(const GaussianWavepacket& psi0, double omega, double mass, double t) {
  if (psi0.dim() != 1) throw std::invalid_argument("harmonic_exact: one-dimensional states only");
  if (!(omega > 0.0) || !(mass > 0.0)) throw std::invalid_argument("harmonic_exact: mass and omega must be positive");
  const double gamma = psi0.gamma()(0, 0);
  const double hbar = psi0.hbar();
  const double q0 = psi0.q()[0], p0 = psi0.p()[0];

  HarmonicExactState st;
  st.omega = omega;
  st.mass = mass;
  st.b = mass * omega;
  st.hbar = hbar;
  st.t = t;
  st.alpha_0 = Complex{0.0, gamma};
  st.beta_0 = Complex{0.0, -0.25 * hbar * std::log(gamma / (std::numbers::pi * hbar))};

  const double s = omega * t;
  const double c = std::cos(s), sn = std::sin(s);
  const double b = st.b;
  st.q_t = q0 * c + p0 / b * sn;
  st.p_t = p0 * c - b * q0 * sn;
  st.alpha_t = harmonic_width_flow(st.alpha_0, b, omega, t);
  // z_t / b = cos + i (gamma / b) sin, with its argument continued in t.
  const double log_abs = 0.5 * std::log(c * c + (gamma / b) * (gamma / b) * sn * sn);
  // winding count taken from the computed sin/cos so it flips exactly where atan2 does
  const double turns = std::round((s - std::atan2(sn, c)) / kTwoPi);
  const double arg = std::atan2(gamma * sn, b * c) + kTwoPi * turns;
  const Complex log_z{log_abs, arg};
  st.beta_t = st.beta_0 + 0.5 * (st.q_t * st.p_t - q0 * p0 + kI * hbar * log_z);
  return st;
}

GridWavefunction harmonic_exact(const GaussianWavepacket& psi0, double omega, double mass, double t,
                                const SpatialGrid& grid) {
  const HarmonicExactState st = harmonic_exact_state(psi0, omega, mass, t);
  GridWavefunction psi(grid);
  for (std::size_t k = 0; k < grid.n_points; ++k) psi.values[k] = st(grid.x(k));
  const double sigma = std::sqrt(st.hbar / (2.0 * st.alpha_t.imag()));
  psi.truncation_warning = st.q_t - 6.0 * sigma < grid.x_min || st.q_t + 6.0 * sigma > grid.x_max;
  psi.lost_mass_estimate = 0.5 * (std::erfc((st.q_t - grid.x_min) / (std::numbers::sqrt2 * sigma)) +
                                  std::erfc((grid.x_max - st.q_t) / (std::numbers::sqrt2 * sigma)));
  return psi;
}

struct SplitOperatorPropagator::Plans {
  detail::FftPlan forward, backward;
  Plans(std::size_t n) : forward(n, FFTW_FORWARD), backward(n, FFTW_BACKWARD) {}
};

SplitOperatorPropagator::SplitOperatorPropagator(const SpatialGrid& grid, const Potential& pot, double dt,
                                                 double hbar)
    : grid_(grid), dt_(dt) {
  if (pot.dim() != 1) throw std::invalid_argument("split operator: one-dimensional potentials only");
  if (!(dt > 0.0)) throw std::invalid_argument("split operator: dt must be positive");
  if (!(hbar > 0.0)) throw std::invalid_argument("split operator: hbar must be positive");
  const std::size_t n = grid.n_points;
  half_kick_.resize(n);
  full_kick_.resize(n);
  kinetic_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double v, g, h;
    pot.evaluate_1d(grid.x(k), v, g, h);
    half_kick_[k] = std::polar(1.0, -0.5 * v * dt / hbar);
    full_kick_[k] = std::polar(1.0, -v * dt / hbar);
  }
  const double length = grid.x_max - grid.x_min;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double m = k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    const double wave = kTwoPi * m / length;
    // exp(-i hbar k^2 dt / 2m), with the 1/n of the inverse transform folded in.
    kinetic_[k] = std::polar(inv_n, -hbar * wave * wave * dt / (2.0 * pot.mass()));
  }
  plans_ = std::make_unique<Plans>(n);
}

SplitOperatorPropagator::~SplitOperatorPropagator() = default;
SplitOperatorPropagator::SplitOperatorPropagator(SplitOperatorPropagator&&) noexcept = default;
SplitOperatorPropagator& SplitOperatorPropagator::operator=(SplitOperatorPropagator&&) noexcept = default;

void SplitOperatorPropagator::advance(std::span<Complex> values, std::size_t n_steps) const {
  if (values.size() != grid_.n_points) throw std::invalid_argument("split operator: value count differs from grid");
  if (n_steps == 0) return;
  const std::size_t n = values.size();
  for (std::size_t k = 0; k < n; ++k) values[k] *= half_kick_[k];
  for (std::size_t step = 0; step < n_steps; ++step) {
    plans_->forward.execute(values);
    for (std::size_t k = 0; k < n; ++k) values[k] *= kinetic_[k];
    plans_->backward.execute(values);
    const auto& kick = step + 1 == n_steps ? half_kick_ : full_kick_;
    for (std::size_t k = 0; k < n; ++k) values[k] *= kick[k];
  }
}

double SplitOperatorPropagator::edge_mass_fraction(std::span<const Complex> values) {
  double total = 0.0;
  for (const auto& v : values) total += std::norm(v);
  if (!(total > 0.0)) return 0.0;
  const std::size_t m = std::min(kEdgePoints, values.size() / 2);
  double left = 0.0, right = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    left += std::norm(values[k]);
    right += std::norm(values[values.size() - 1 - k]);
  }
  return std::max(left, right) / total;
}

GridWavefunction split_operator_propagate(const GridWavefunction& psi, const Potential& pot, double dt,
                                          std::size_t n_steps, double hbar) {
  const SplitOperatorPropagator prop(psi.grid, pot, dt, hbar);
  GridWavefunction out = psi;
  double edge = SplitOperatorPropagator::edge_mass_fraction(out.values);
  for (std::size_t done = 0; done < n_steps;) {
    const std::size_t block = std::min(kEdgeCheckInterval, n_steps - done);
    prop.advance(out.values, block);
    done += block;
    edge = std::max(edge, SplitOperatorPropagator::edge_mass_fraction(out.values));
  }
  out.lost_mass_estimate = std::max(out.lost_mass_estimate, edge);
  out.truncation_warning = out.truncation_warning || edge > kEdgeMassThreshold;
  return out;
}

}  // namespace hkwave
