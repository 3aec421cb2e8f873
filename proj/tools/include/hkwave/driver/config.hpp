#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hkwave/dynamics.hpp"
#include "hkwave/phase_space.hpp"

namespace hkwave::driver {

/// Invalid or inconsistent configuration. what() carries "<source>:<line>: <key>: <reason>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& key, const std::string& reason);
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

struct SystemConfig {
  enum class Kind { Harmonic, Morse };
  Kind kind = Kind::Harmonic;
  double mass = 1.0;
  // harmonic
  double omega = 1.0;
  // morse
  double chi = 0.01;
  double omega_eq = 0.0041;
  double v_eq = 0.0;
  double q_eq = 0.0;

  bool is_morse() const { return kind == Kind::Morse; }
  MorseSpec morse_spec(double hbar) const;
  Potential potential(int dim, double hbar) const;
};

struct InitialStateConfig {
  std::vector<double> q0{-1.0};
  std::vector<double> p0{0.0};
  std::vector<double> gamma{2.0};  // one value (isotropic) or D*D row-major
  double hbar = 1.0;

  int dim() const { return static_cast<int>(q0.size()); }
  GaussianWavepacket wavepacket() const;
  /// Scalar width; throws ConfigError-free std::invalid_argument when gamma is a full matrix.
  double scalar_gamma() const;
};

struct SamplingConfig {
  std::vector<std::string> schemes{"husimi", "sqrt_husimi"};
  double a = 0.0;  // for "general"

  std::vector<SamplingScheme> build(const GaussianWavepacket& psi0) const;
};

struct RunConfig {
  double dt = 0.0;
  std::size_t n_steps = 0;
  std::size_t n_trajectories = 0;
  std::uint64_t seed = 0;
  std::size_t k_runs = 1;
};

struct GridConfig {
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t n_points = 1024;
};

struct OutputConfig {
  std::string directory = ".";
  std::vector<std::string> formats{"csv"};
};

/// Subcommand parameters that are not part of the physical setup.
struct ExperimentParams {
  std::vector<std::size_t> ladder;
  std::vector<std::size_t> checkpoints;
  int d_max = 4;
  std::size_t n_fixed = 819200;
  bool exact_classical = true;
  double damping_hwhm = 0.0008;
  std::size_t n_times = 100;
  std::size_t repetitions = 1;
  std::string backend = "auto";  // initial-error evaluation: auto | fock | pairwise
  double tail_tolerance = 1e-10;
};

struct ExperimentConfig {
  std::string source = "<config>";
  bool has_system = false;
  SystemConfig system;
  InitialStateConfig initial_state;
  SamplingConfig sampling;
  RunConfig run;
  std::optional<GridConfig> grid;
  OutputConfig output;
  ExperimentParams experiment;
  std::map<std::string, int> key_lines;

  /// Line of a dotted key, falling back to its enclosing section (0 when unknown).
  int line_of(std::string key) const;
  /// Canonical JSON form of the effective configuration (stable key order).
  nlohmann::json to_json() const;
  /// 16 hex digits of the FNV-1a hash of to_json().dump().
  std::string hash() const;
};

/// Parses and validates a configuration document. Unknown keys, wrong types and out-of-range
/// values raise ConfigError with the line of the offending key.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Line of every key in a JSON document, addressed by its dotted path ("run.seed").
std::map<std::string, int> json_key_lines(const std::string& text);

std::uint64_t fnv1a64(const std::string& bytes);

/// Builds N = base * 2^k for k = k_min..k_max.
std::vector<std::size_t> doubling_ladder(std::size_t base, int k_min, int k_max);

}  // namespace hkwave::driver
