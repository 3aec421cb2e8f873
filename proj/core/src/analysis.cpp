#include "hkwave/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fft_plan.hpp"

namespace hkwave {

double l2_error(const GridWavefunction& a, const GridWavefunction& b) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size())
    throw std::invalid_argument("l2_error: grids differ");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) sum += std::norm(a.values[k] - b.values[k]);
  return std::sqrt(sum * a.grid.dx());
}

double variance_initial_sqrt_husimi(int dim) {
  if (dim < 1) throw std::invalid_argument("variance_initial_sqrt_husimi: D must be positive");
  return std::pow(4.0, dim) - 1.0;
}

double variance_rho_a_initial(double a, int dim) {
  if (!(a > 2.0)) throw std::invalid_argument("variance_rho_a_initial: a must exceed 2");
  if (dim < 1) throw std::invalid_argument("variance_rho_a_initial: D must be positive");
  return std::pow(a * a / (2.0 * (a - 2.0)), dim) - 1.0;
}

double variance_harmonic_sqrt_husimi(double gamma, double mass, double omega, double t) {
  if (!(gamma > 0.0) || !(mass > 0.0) || !(omega > 0.0))
    throw std::invalid_argument("variance_harmonic_sqrt_husimi: parameters must be positive");
  const double b = mass * omega;
  const double k = gamma / b + b / gamma;
  const double c = std::cos(omega * t), s = std::sin(omega * t);
  return 2.0 * std::sqrt(4.0 * c * c + k * k * s * s) - 1.0;
}

double ConvergenceFit::operator()(double n) const { return c * std::pow(n, -s); }

ConvergenceFit fit_power_law(std::span<const double> n_values, std::span<const double> errors) {
  if (n_values.size() != errors.size()) throw std::invalid_argument("fit_power_law: length mismatch");
  if (n_values.size() < 3) throw std::invalid_argument("fit_power_law: at least three points are required");
  const std::size_t m = n_values.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(n_values[i] > 0.0) || !(errors[i] > 0.0))
      throw std::invalid_argument("fit_power_law: sample counts and errors must be positive");
    mx += std::log(n_values[i]);
    my += std::log(errors[i]);
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = std::log(n_values[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(errors[i]) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_power_law: sample counts must not all be equal");
  const double slope = sxy / sxx;
  ConvergenceFit fit;
  fit.s = -slope;
  const double log_c = my - slope * mx;
  fit.c = std::exp(log_c);
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = std::log(errors[i]) - (log_c + slope * std::log(n_values[i]));
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / static_cast<double>(m));
  fit.n_values.assign(n_values.begin(), n_values.end());
  fit.errors.assign(errors.begin(), errors.end());
  return fit;
}

RmseResult empirical_rmse(std::span<const GridWavefunction> runs, const GridWavefunction& reference) {
  if (runs.empty()) throw std::invalid_argument("empirical_rmse: at least one run is required");
  std::vector<double> errs;
  errs.reserve(runs.size());
  for (const auto& r : runs) errs.push_back(l2_error(r, reference));
  return empirical_rmse(errs);
}

RmseResult empirical_rmse(std::span<const double> l2_errors) {
  if (l2_errors.empty()) throw std::invalid_argument("empirical_rmse: at least one run is required");
  double sum = 0.0;
  for (double e : l2_errors) sum += e * e;
  RmseResult r;
  r.s_k = sum / static_cast<double>(l2_errors.size());
  r.root = std::sqrt(r.s_k);
  return r;
}

namespace {

void check_query(const TrajectoryCountQuery& q) {
  if (!(q.sigma2 > 0.0) || !(q.epsilon > 0.0) || !(q.p > 0.0) || !(q.p < 1.0))
    throw std::invalid_argument("trajectory count query needs sigma2 > 0, epsilon > 0 and 0 < p < 1");
}

// Ceiling that ignores representation error just above an integer.
std::uint64_t guarded_ceil(double x) {
  if (!(x < 1.8e19)) throw std::overflow_error("trajectory count exceeds 64 bits");
  return static_cast<std::uint64_t>(std::ceil(x * (1.0 - 1e-12)));
}

}  // namespace

std::uint64_t chebyshev_min_trajectories(const TrajectoryCountQuery& q) {
  check_query(q);
  return guarded_ceil(q.sigma2 / (q.p * q.epsilon * q.epsilon));
}

std::optional<std::uint64_t> clt_trajectory_estimate(const TrajectoryCountQuery& q) {
  check_query(q);
  if (q.p >= 0.5) return std::nullopt;
  const double x = erfc_inv(2.0 * q.p);
  return guarded_ceil(q.sigma2 / (2.0 * q.epsilon * q.epsilon) * x * x);
}

double erfc_inv(double y) {
  if (!(y > 0.0) || !(y < 2.0)) throw std::domain_error("erfc_inv: argument must lie in (0, 2)");
  if (y > 1.0) return -erfc_inv(2.0 - y);
  if (y == 1.0) return 0.0;
  // Asymptotic start: erfc(x) ~ exp(-x^2) / (x sqrt(pi)).
  const double t = std::sqrt(-std::log(0.5 * y));
  double x = t - std::log(t * std::sqrt(std::numbers::pi)) / (2.0 * t);
  if (!(x > 0.0)) x = 0.5 * t;
  double lo = 0.0, hi = 30.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double f = std::erfc(x) - y;
    if (f > 0.0) lo = x; else hi = x;
    const double df = -2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
    double next = x - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

Spectrum spectrum(std::span<const Complex> autocorr, double dt, double hbar, std::optional<double> damping_tau) {
  if (autocorr.size() < 2) throw std::invalid_argument("spectrum: at least two samples are required");
  if (!(dt > 0.0) || !(hbar > 0.0)) throw std::invalid_argument("spectrum: dt and hbar must be positive");
  if (damping_tau && !(*damping_tau > 0.0)) throw std::invalid_argument("spectrum: damping time must be positive");
  const std::size_t n = autocorr.size();
  std::vector<Complex> buf(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    double w = k == 0 ? 0.5 : 1.0;
    if (damping_tau) w *= std::exp(-t * t / (2.0 * *damping_tau * *damping_tau));
    buf[k] = autocorr[k] * (w * dt);
  }
  // sum_k C_k e^{+2 pi i j k / n}
  detail::FftPlan(n, FFTW_BACKWARD).execute(buf);

  Spectrum s;
  s.energy.resize(n);
  s.intensity.resize(n);
  const double de = 2.0 * std::numbers::pi * hbar / (static_cast<double>(n) * dt);
  // Bins above n/2 correspond to negative energies; emit in ascending order.
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + half + 1) % n;
    const double m = j <= half ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
    s.energy[i] = m * de;
    s.intensity[i] = buf[j].real();
  }
  return s;
}

double damping_time_for_hwhm(double hwhm, double hbar) {
  if (!(hwhm > 0.0)) throw std::invalid_argument("damping_time_for_hwhm: width must be positive");
  return hbar * std::sqrt(2.0 * std::numbers::ln2) / hwhm;
}

std::vector<double> find_peaks(const Spectrum& s, double min_relative) {
  std::vector<double> peaks;
  if (s.intensity.size() < 3) return peaks;
  const double top = *std::max_element(s.intensity.begin(), s.intensity.end());
  const double floor = min_relative * top;
  for (std::size_t i = 1; i + 1 < s.intensity.size(); ++i) {
    const double v = s.intensity[i];
    if (v > floor && v > s.intensity[i - 1] && v >= s.intensity[i + 1]) peaks.push_back(s.energy[i]);
  }
  return peaks;
}

}  // namespace hkwave
