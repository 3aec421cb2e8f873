#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hkwave/types.hpp"

namespace hkwave {

/// Uniform periodic 1D grid: x_k = x_min + k dx, k = 0..n_points-1, dx = (x_max - x_min)/n_points.
struct SpatialGrid {
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t n_points = 1024;

  SpatialGrid() = default;
  SpatialGrid(double lo, double hi, std::size_t n);

  double dx() const { return (x_max - x_min) / static_cast<double>(n_points); }
  double x(std::size_t k) const { return x_min + static_cast<double>(k) * dx(); }
  bool operator==(const SpatialGrid&) const = default;
};

struct GridWavefunction {
  SpatialGrid grid;
  std::vector<Complex> values;
  // Set when part of the represented state lies outside the grid.
  bool truncation_warning = false;
  double lost_mass_estimate = 0.0;

  GridWavefunction() = default;
  explicit GridWavefunction(const SpatialGrid& g) : grid(g), values(g.n_points, Complex{}) {}

  double norm() const;
  std::vector<double> density() const;
};

double inner_norm_squared(std::span<const Complex> values, double dx);

/// Adds coef * g(x) on the grid, where g(x) = norm * exp(-gamma (x-q)^2 / (2 hbar) + i p (x-q) / hbar).
/// Only points where |g| exceeds ~1e-16 of its peak are touched. Values are generated by a
/// two-term multiplicative recurrence started at the grid point nearest q.
/// Returns the fraction of |g|^2 that falls outside [x_min, x_max).
double accumulate_gaussian(std::span<Complex> out, const SpatialGrid& grid, double q, double p,
                           double gamma, double hbar, Complex coef);

}  // namespace hkwave
