#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hkwave/driver/config.hpp"
#include "hkwave/driver/table.hpp"

namespace hkwave::driver {

/// Too many trajectories were lost to caustics or overflow for the result to be trusted.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest tolerated fraction of invalid trajectories in an ensemble.
inline constexpr double kMaxInvalidFraction = 0.01;

enum class Preset { None, Desk, Paper };

Preset parse_preset(const std::string& name);

struct Overrides {
  Preset preset = Preset::None;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
};

/// Subcommand names in CLI order.
const std::vector<std::string>& command_names();

/// Applies a preset and then the explicit overrides for `command`. Throws ConfigError when
/// the result is unusable (e.g. --n below the smallest ladder entry).
ExperimentConfig apply_overrides(ExperimentConfig cfg, const std::string& command, const Overrides& o);

/// Columns: scheme, N, l2_error, analytic_prediction, fit_c, fit_s.
Table initial_error(const ExperimentConfig& cfg);
/// Columns: D, scheme, N, error, analytic_prediction.
Table dimension_sweep(const ExperimentConfig& cfg);
/// Columns: t, scheme, error_single_run, s_k, rmse, analytic.
Table harmonic_error(const ExperimentConfig& cfg);
/// Columns: checkpoint_steps, t, scheme, N, error, fit_c, fit_s.
Table morse_converge(const ExperimentConfig& cfg);
/// Columns: x, density_reference, density_husimi, density_sqrt_husimi, abs_err_husimi, abs_err_sqrt_husimi.
Table position_density(const ExperimentConfig& cfg);
/// Columns: energy, intensity_hk, intensity_reference.
Table spectrum(const ExperimentConfig& cfg);

/// Dispatches one of the table-producing subcommands by name.
Table run_command(const std::string& command, const ExperimentConfig& cfg);

/// {"sigma2", "epsilon", "p", "chebyshev", "clt"}; clt is null when p >= 1/2.
nlohmann::json plan(double sigma2, double epsilon, double p);

}  // namespace hkwave::driver
