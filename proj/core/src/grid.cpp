#include "hkwave/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace hkwave {

namespace {
// exp(-37) ~ 8.5e-17 of the peak amplitude.
constexpr double kWindowExponent = 37.0;
}  // namespace

SpatialGrid::SpatialGrid(double lo, double hi, std::size_t n) : x_min(lo), x_max(hi), n_points(n) {
  if (!(hi > lo)) throw std::invalid_argument("SpatialGrid: x_max must exceed x_min");
  if (n < 2 || !std::has_single_bit(n))
    throw std::invalid_argument("SpatialGrid: n_points must be a power of two >= 2");
}

double inner_norm_squared(std::span<const Complex> values, double dx) {
  double sum = 0.0;
  for (const auto& v : values) sum += std::norm(v);
  return sum * dx;
}

double GridWavefunction::norm() const { return std::sqrt(inner_norm_squared(values, grid.dx())); }

std::vector<double> GridWavefunction::density() const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](Complex v) { return std::norm(v); });
  return out;
}

double accumulate_gaussian(std::span<Complex> out, const SpatialGrid& grid, double q, double p,
                           double gamma, double hbar, Complex coef) {
  const double dx = grid.dx();
  const auto n = static_cast<std::ptrdiff_t>(grid.n_points);
  const double half_width = std::sqrt(2.0 * hbar * kWindowExponent / gamma);

  // |g|^2 is a normal density with standard deviation sqrt(hbar / (2 gamma)).
  const double sigma = std::sqrt(hbar / (2.0 * gamma));
  const double lost = 0.5 * std::erfc((q - grid.x_min) / (std::sqrt(2.0) * sigma)) +
                      0.5 * std::erfc((grid.x_max - q) / (std::sqrt(2.0) * sigma));

  const double kc = std::round((q - grid.x_min) / dx);
  const auto k_lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil((q - half_width - grid.x_min) / dx)));
  const auto k_hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::floor((q + half_width - grid.x_min) / dx)));
  if (k_lo > k_hi) return lost;

  const auto k0 = std::clamp(static_cast<std::ptrdiff_t>(kc), k_lo, k_hi);
  const double u0 = grid.x(static_cast<std::size_t>(k0)) - q;
  const double norm = std::pow(gamma / (std::numbers::pi * hbar), 0.25);
  const Complex start = coef * norm * std::exp(Complex{-gamma * u0 * u0 / (2.0 * hbar), p * u0 / hbar});

  // f(k0 + j) = start * exp(j B + j^2 C); ratio r_j = f(j+1)/f(j) = exp(B + (2j+1) C).
  const double c = -gamma * dx * dx / (2.0 * hbar);
  const double shrink = std::exp(2.0 * c);

  out[static_cast<std::size_t>(k0)] += start;
  {
    Complex value = start;
    Complex ratio = std::exp(Complex{-gamma * u0 * dx / hbar + c, p * dx / hbar});
    for (std::ptrdiff_t k = k0 + 1; k <= k_hi; ++k) {
      value *= ratio;
      ratio *= shrink;
      out[static_cast<std::size_t>(k)] += value;
    }
  }
  {
    Complex value = start;
    Complex ratio = std::exp(Complex{gamma * u0 * dx / hbar + c, -p * dx / hbar});
    for (std::ptrdiff_t k = k0 - 1; k >= k_lo; --k) {
      value *= ratio;
      ratio *= shrink;
      out[static_cast<std::size_t>(k)] += value;
    }
  }
  return lost;
}

}  // namespace hkwave
