#include "hkwave/driver/commands.hpp"

#include <algorithm>
#include <cmath>

#include "hkwave/hkwave.hpp"

#ifndef HKWAVE_VERSION
#define HKWAVE_VERSION "unknown"
#endif

namespace hkwave::driver {

namespace {

[[noreturn]] void config_fail(const ExperimentConfig& cfg, const std::string& key, const std::string& reason) {
  throw ConfigError(cfg.source, cfg.line_of(key), key, reason);
}

Table make_table(const ExperimentConfig& cfg, const std::string& command, std::vector<std::string> columns) {
  Table t;
  t.meta("hkwave", HKWAVE_VERSION);
  t.meta("command", command);
  t.meta("config_hash", cfg.hash());
  t.meta("seed", std::to_string(cfg.run.seed));
  t.columns = std::move(columns);
  return t;
}

void check_valid(const HKEnsemble& ens, const std::string& what) {
  const double lost = static_cast<double>(ens.invalid_count()) / static_cast<double>(ens.size());
  if (lost > kMaxInvalidFraction)
    throw NumericalFailure(what + ": " + std::to_string(ens.invalid_count()) + " of " + std::to_string(ens.size()) +
                           " trajectories invalid (caustics " + std::to_string(ens.caustic_count()) + ")");
}

SpatialGrid require_grid(const ExperimentConfig& cfg, const std::string& command) {
  if (!cfg.grid) config_fail(cfg, "grid", command + " needs a grid section");
  return {cfg.grid->x_min, cfg.grid->x_max, cfg.grid->n_points};
}

void require_system(const ExperimentConfig& cfg, const std::string& command) {
  if (!cfg.has_system) config_fail(cfg, "system", command + " needs a system section");
}

void require_1d(const ExperimentConfig& cfg, const std::string& command) {
  if (cfg.initial_state.dim() != 1) config_fail(cfg, "initial_state.q0", command + " is one-dimensional");
}

void require_steps(const ExperimentConfig& cfg, const std::string& command) {
  if (!(cfg.run.dt > 0.0)) config_fail(cfg, "run", command + " needs run.dt");
  if (cfg.run.n_steps == 0) config_fail(cfg, "run.n_steps", command + " needs n_steps >= 1");
}

Cell fit_cell(const std::optional<ConvergenceFit>& fit, bool want_c) {
  if (!fit) return {};
  return want_c ? fit->c : fit->s;
}

std::optional<ConvergenceFit> maybe_fit(const std::vector<std::size_t>& n, const std::vector<double>& err) {
  if (n.size() < 3) return std::nullopt;
  std::vector<double> x(n.begin(), n.end());
  return fit_power_law(x, err);
}

std::string fit_text(const ConvergenceFit& f) {
  return "c=" + format_double(f.c) + " s=" + format_double(f.s) + " residual=" + format_double(f.residual);
}

// sqrt(V/N) for estimators whose variance at t = 0 is known.
Cell initial_prediction(const SamplingScheme& s, int dim, std::size_t n) {
  double v;
  switch (s.kind()) {
    case SamplingKind::SqrtHusimi: v = variance_initial_sqrt_husimi(dim); break;
    case SamplingKind::GeneralA:
      if (!(s.a() > 2.0)) return {};
      v = variance_rho_a_initial(s.a(), dim);
      break;
    default: return {};
  }
  return std::sqrt(v / static_cast<double>(n));
}

CoherentSumOptions sum_options(const ExperimentParams& e) {
  CoherentSumOptions o;
  o.backend = e.backend == "fock" ? CoherentSumBackend::Fock
              : e.backend == "pairwise" ? CoherentSumBackend::Pairwise
                                         : CoherentSumBackend::Auto;
  o.tail_tolerance = e.tail_tolerance;
  return o;
}

std::vector<std::size_t> ladder_or_n(const ExperimentConfig& cfg) {
  return cfg.experiment.ladder.empty() ? std::vector<std::size_t>{cfg.run.n_trajectories} : cfg.experiment.ladder;
}

// Step counts of the output times 0, T/n, ..., T.
std::vector<std::size_t> output_steps(std::size_t n_steps, std::size_t n_times) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i <= n_times; ++i) {
    const std::size_t s = (i * n_steps + n_times / 2) / n_times;
    if (out.empty() || s != out.back()) out.push_back(s);
  }
  return out;
}

Complex grid_inner(const GridWavefunction& a, const GridWavefunction& b) {
  Complex sum{};
  for (std::size_t k = 0; k < a.values.size(); ++k) sum += std::conj(a.values[k]) * b.values[k];
  return sum * a.grid.dx();
}

}  // namespace

Preset parse_preset(const std::string& name) {
  if (name == "desk") return Preset::Desk;
  if (name == "paper") return Preset::Paper;
  if (name.empty() || name == "none") return Preset::None;
  throw std::invalid_argument("unknown preset '" + name + "' (desk, paper)");
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"initial-error", "dim-sweep", "harmonic-error", "morse-converge",
                                              "density",       "spectrum",  "plan"};
  return names;
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const std::string& command, const Overrides& o) {
  auto& e = cfg.experiment;
  auto& r = cfg.run;
  if (o.preset != Preset::None) {
    const bool paper = o.preset == Preset::Paper;
    if (command == "initial-error") {
      e.ladder = doubling_ladder(100, 0, paper ? 13 : 10);
    } else if (command == "dim-sweep") {
      e.n_fixed = 100u << 13;
    } else if (command == "harmonic-error") {
      r.k_runs = paper ? 100 : 20;
      r.n_trajectories = paper ? 65536 : 4096;
    } else if (command == "morse-converge") {
      e.ladder = doubling_ladder(100, 0, paper ? 13 : 8);
      e.repetitions = paper ? 1 : 5;
    } else if (command == "density" || command == "spectrum") {
      r.n_trajectories = paper ? (100u << 14) : (command == "density" ? 800 : 4096);
    }
  }
  if (o.seed) r.seed = *o.seed;
  if (o.n) {
    if (*o.n == 0) config_fail(cfg, "--n", "must be positive");
    if (command == "initial-error" || command == "morse-converge") {
      if (e.ladder.empty()) {
        r.n_trajectories = *o.n;
      } else {
        std::erase_if(e.ladder, [&](std::size_t v) { return v > *o.n; });
        if (e.ladder.empty()) config_fail(cfg, "--n", "is below the smallest ladder entry");
      }
    } else if (command == "dim-sweep") {
      e.n_fixed = *o.n;
    } else {
      r.n_trajectories = *o.n;
    }
  }
  return cfg;
}

Table initial_error(const ExperimentConfig& cfg) {
  const GaussianWavepacket psi0 = cfg.initial_state.wavepacket();
  const auto ladder = ladder_or_n(cfg);
  Table t = make_table(cfg, "initial-error", {"scheme", "N", "l2_error", "analytic_prediction", "fit_c", "fit_s"});
  for (const auto& scheme : cfg.sampling.build(psi0)) {
    const auto err = initial_sampling_error(scheme, ladder, cfg.run.seed, 0, sum_options(cfg.experiment));
    const auto fit = maybe_fit(ladder, err);
    if (fit) t.meta("fit " + scheme.name(), fit_text(*fit));
    for (std::size_t i = 0; i < ladder.size(); ++i)
      t.add_row({scheme.name(), std::uint64_t{ladder[i]}, err[i], initial_prediction(scheme, psi0.dim(), ladder[i]),
                 fit_cell(fit, true), fit_cell(fit, false)});
  }
  return t;
}

Table dimension_sweep(const ExperimentConfig& cfg) {
  const auto& is = cfg.initial_state;
  const double gamma = is.scalar_gamma();
  const std::size_t n = cfg.experiment.n_fixed;
  Table t = make_table(cfg, "dim-sweep", {"D", "scheme", "N", "error", "analytic_prediction"});
  t.meta("centre", "q=" + format_double(is.q0[0]) + " p=" + format_double(is.p0[0]) + " in every dimension");
  const std::vector<std::size_t> prefix{n};
  for (int d = 1; d <= cfg.experiment.d_max; ++d) {
    const GaussianWavepacket psi0 = GaussianWavepacket::isotropic(Eigen::VectorXd::Constant(d, is.q0[0]),
                                                                  Eigen::VectorXd::Constant(d, is.p0[0]), gamma, is.hbar);
    for (const auto& scheme : cfg.sampling.build(psi0)) {
      const double err = initial_sampling_error(scheme, prefix, cfg.run.seed, 0, sum_options(cfg.experiment))[0];
      t.add_row({std::uint64_t(d), scheme.name(), std::uint64_t{n}, err, initial_prediction(scheme, d, n)});
    }
  }
  return t;
}

Table harmonic_error(const ExperimentConfig& cfg) {
  const std::string cmd = "harmonic-error";
  require_system(cfg, cmd);
  require_1d(cfg, cmd);
  require_steps(cfg, cmd);
  if (cfg.system.is_morse()) config_fail(cfg, "system", cmd + " needs a harmonic system");
  const SpatialGrid grid = require_grid(cfg, cmd);
  const GaussianWavepacket psi0 = cfg.initial_state.wavepacket();
  const double hbar = cfg.initial_state.hbar;
  const Potential pot = cfg.system.potential(1, hbar);
  const auto& osc = cfg.system;
  const auto steps = output_steps(cfg.run.n_steps, cfg.experiment.n_times);
  const double dt = cfg.run.dt;
  const std::size_t n = cfg.run.n_trajectories, k_runs = cfg.run.k_runs;

  std::vector<GridWavefunction> exact;
  bool truncated = false;
  for (std::size_t s : steps) {
    exact.push_back(harmonic_exact(psi0, osc.omega, osc.mass, static_cast<double>(s) * dt, grid));
    truncated = truncated || exact.back().truncation_warning;
  }

  const auto schemes = cfg.sampling.build(psi0);
  Table t = make_table(cfg, cmd, {"t", "scheme", "error_single_run", "s_k", "rmse", "analytic"});
  t.meta("classical", cfg.experiment.exact_classical ? "exact" : "verlet");
  t.meta("runs", std::to_string(k_runs) + " x " + std::to_string(n));
  for (const auto& scheme : schemes) {
    std::vector<double> first(steps.size()), sum_sq(steps.size(), 0.0);
    for (std::size_t k = 0; k < k_runs; ++k) {
      HKEnsemble ens(psi0, scheme, pot, n, cfg.run.seed, static_cast<std::uint32_t>(k));
      std::size_t done = 0;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        if (cfg.experiment.exact_classical) {
          ens.set_exact_harmonic(static_cast<double>(steps[i]) * dt);
        } else {
          ens.propagate(dt, steps[i] - done);
          done = steps[i];
          check_valid(ens, cmd);
        }
        const GridWavefunction psi = estimate_wavefunction(ens, grid);
        truncated = truncated || psi.truncation_warning;
        const double e = l2_error(psi, exact[i]);
        if (k == 0) first[i] = e;
        sum_sq[i] += e * e;
      }
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const double time = static_cast<double>(steps[i]) * dt;
      const RmseResult r{sum_sq[i] / static_cast<double>(k_runs), std::sqrt(sum_sq[i] / static_cast<double>(k_runs))};
      Cell analytic;
      if (scheme.kind() == SamplingKind::SqrtHusimi)
        analytic = std::sqrt(variance_harmonic_sqrt_husimi(cfg.initial_state.scalar_gamma(), osc.mass, osc.omega, time) /
                             static_cast<double>(n));
      t.add_row({time, scheme.name(), first[i], r.s_k, r.root, analytic});
    }
  }
  if (truncated) t.meta("warning", "grid truncates part of a wavefunction");
  return t;
}

Table morse_converge(const ExperimentConfig& cfg) {
  const std::string cmd = "morse-converge";
  require_system(cfg, cmd);
  require_1d(cfg, cmd);
  if (!cfg.system.is_morse()) config_fail(cfg, "system", cmd + " needs a Morse system");
  if (cfg.experiment.checkpoints.empty()) require_steps(cfg, cmd);
  else if (!(cfg.run.dt > 0.0)) config_fail(cfg, "run", cmd + " needs run.dt");
  const SpatialGrid grid = require_grid(cfg, cmd);
  const auto ladder = ladder_or_n(cfg);
  auto checkpoints = cfg.experiment.checkpoints;
  if (checkpoints.empty()) checkpoints.push_back(cfg.run.n_steps);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

  const GaussianWavepacket psi0 = cfg.initial_state.wavepacket();
  const Potential pot = cfg.system.potential(1, cfg.initial_state.hbar);
  const std::size_t reps = cfg.experiment.repetitions;
  const double dt = cfg.run.dt;

  // psi_N and psi_2N for every ladder entry come from prefixes of one ensemble of 2 N_max.
  std::vector<std::size_t> counts;
  for (std::size_t n : ladder) counts.insert(counts.end(), {n, 2 * n});
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  auto slot = [&](std::size_t n) { return static_cast<std::size_t>(std::lower_bound(counts.begin(), counts.end(), n) - counts.begin()); };

  Table t = make_table(cfg, cmd, {"checkpoint_steps", "t", "scheme", "N", "error", "fit_c", "fit_s"});
  t.meta("repetitions", std::to_string(reps));
  bool truncated = false;
  for (const auto& scheme : cfg.sampling.build(psi0)) {
    // mean over repetitions of ||psi_N - psi_2N||, indexed [checkpoint][ladder]
    std::vector<std::vector<double>> mean(checkpoints.size(), std::vector<double>(ladder.size(), 0.0));
    for (std::size_t r = 0; r < reps; ++r) {
      HKEnsemble ens(psi0, scheme, pot, 2 * ladder.back(), cfg.run.seed, static_cast<std::uint32_t>(r));
      std::size_t done = 0;
      for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        ens.propagate(dt, checkpoints[c] - done);
        done = checkpoints[c];
        check_valid(ens, cmd);
        std::vector<GridWavefunction> psi;
        psi.reserve(counts.size());
        for (std::size_t n : counts) {
          psi.push_back(estimate_wavefunction(ens, grid, n));
          truncated = truncated || psi.back().truncation_warning;
        }
        for (std::size_t i = 0; i < ladder.size(); ++i)
          mean[c][i] += l2_error(psi[slot(ladder[i])], psi[slot(2 * ladder[i])]) / static_cast<double>(reps);
      }
    }
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const auto fit = maybe_fit(ladder, mean[c]);
      if (fit) t.meta("fit " + scheme.name() + " at " + std::to_string(checkpoints[c]), fit_text(*fit));
      for (std::size_t i = 0; i < ladder.size(); ++i)
        t.add_row({std::uint64_t{checkpoints[c]}, static_cast<double>(checkpoints[c]) * dt, scheme.name(),
                   std::uint64_t{ladder[i]}, mean[c][i], fit_cell(fit, true), fit_cell(fit, false)});
    }
  }
  if (truncated) t.meta("warning", "grid truncates part of a wavefunction");
  return t;
}

Table position_density(const ExperimentConfig& cfg) {
  const std::string cmd = "density";
  require_system(cfg, cmd);
  require_1d(cfg, cmd);
  require_steps(cfg, cmd);
  const SpatialGrid grid = require_grid(cfg, cmd);
  const GaussianWavepacket psi0 = cfg.initial_state.wavepacket();
  const double hbar = cfg.initial_state.hbar;
  const Potential pot = cfg.system.potential(1, hbar);
  const double time = static_cast<double>(cfg.run.n_steps) * cfg.run.dt;

  GridWavefunction ref = cfg.system.is_morse()
                             ? split_operator_propagate(evaluate_gaussian(psi0, grid), pot, cfg.run.dt, cfg.run.n_steps, hbar)
                             : harmonic_exact(psi0, cfg.system.omega, cfg.system.mass, time, grid);
  bool truncated = ref.truncation_warning;
  std::vector<std::vector<double>> dens;
  for (const auto& scheme : {SamplingScheme::husimi(psi0), SamplingScheme::sqrt_husimi(psi0)}) {
    HKEnsemble ens(psi0, scheme, pot, cfg.run.n_trajectories, cfg.run.seed, 0);
    ens.propagate(cfg.run.dt, cfg.run.n_steps);
    check_valid(ens, cmd);
    const GridWavefunction psi = estimate_wavefunction(ens, grid);
    truncated = truncated || psi.truncation_warning;
    dens.push_back(psi.density());
  }
  const auto rho = ref.density();
  Table t = make_table(cfg, cmd,
                       {"x", "density_reference", "density_husimi", "density_sqrt_husimi", "abs_err_husimi",
                        "abs_err_sqrt_husimi"});
  t.meta("t", format_double(time));
  t.meta("reference", cfg.system.is_morse() ? "split-operator" : "closed form");
  for (std::size_t k = 0; k < grid.n_points; ++k)
    t.add_row({grid.x(k), rho[k], dens[0][k], dens[1][k], std::abs(dens[0][k] - rho[k]), std::abs(dens[1][k] - rho[k])});
  if (truncated) t.meta("warning", "grid truncates part of a wavefunction");
  return t;
}

Table spectrum(const ExperimentConfig& cfg) {
  const std::string cmd = "spectrum";
  require_system(cfg, cmd);
  require_1d(cfg, cmd);
  require_steps(cfg, cmd);
  const SpatialGrid grid = require_grid(cfg, cmd);
  const GaussianWavepacket psi0 = cfg.initial_state.wavepacket();
  const double hbar = cfg.initial_state.hbar;
  const Potential pot = cfg.system.potential(1, hbar);
  const double dt = cfg.run.dt;
  const std::size_t n_steps = cfg.run.n_steps;
  const SamplingScheme scheme = cfg.sampling.build(psi0).front();

  std::vector<Complex> c_hk(n_steps + 1), c_ref(n_steps + 1);
  HKEnsemble ens(psi0, scheme, pot, cfg.run.n_trajectories, cfg.run.seed, 0);
  c_hk[0] = autocorrelation(ens, psi0);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    ens.propagate(dt, 1);
    c_hk[s] = autocorrelation(ens, psi0);
  }
  check_valid(ens, cmd);

  const GridWavefunction g0 = evaluate_gaussian(psi0, grid);
  GridWavefunction psi = g0;
  const SplitOperatorPropagator prop(grid, pot, dt, hbar);
  double edge = 0.0;
  c_ref[0] = grid_inner(g0, psi);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    prop.advance(psi.values, 1);
    c_ref[s] = grid_inner(g0, psi);
    edge = std::max(edge, SplitOperatorPropagator::edge_mass_fraction(psi.values));
  }

  std::optional<double> tau;
  if (cfg.experiment.damping_hwhm > 0.0) tau = damping_time_for_hwhm(cfg.experiment.damping_hwhm, hbar);
  const Spectrum s_hk = hkwave::spectrum(c_hk, dt, hbar, tau);
  const Spectrum s_ref = hkwave::spectrum(c_ref, dt, hbar, tau);

  Table t = make_table(cfg, cmd, {"energy", "intensity_hk", "intensity_reference"});
  t.meta("scheme", scheme.name());
  t.meta("autocorrelation_t0", format_double(c_hk[0].real()) + (c_hk[0].imag() < 0 ? "" : "+") +
                                   format_double(c_hk[0].imag()) + "i");
  t.meta("bin_width", format_double(s_hk.bin_width()));
  t.meta("damping_hwhm", format_double(cfg.experiment.damping_hwhm));
  if (edge > kEdgeMassThreshold || g0.truncation_warning) t.meta("warning", "reference wavefunction reaches the grid edge");
  for (std::size_t k = 0; k < s_hk.energy.size(); ++k)
    t.add_row({s_hk.energy[k], s_hk.intensity[k], s_ref.intensity[k]});
  return t;
}

Table run_command(const std::string& command, const ExperimentConfig& cfg) {
  if (command == "initial-error") return initial_error(cfg);
  if (command == "dim-sweep") return dimension_sweep(cfg);
  if (command == "harmonic-error") return harmonic_error(cfg);
  if (command == "morse-converge") return morse_converge(cfg);
  if (command == "density") return position_density(cfg);
  if (command == "spectrum") return spectrum(cfg);
  throw std::invalid_argument("unknown command '" + command + "'");
}

nlohmann::json plan(double sigma2, double epsilon, double p) {
  const TrajectoryCountQuery q{sigma2, epsilon, p};
  nlohmann::json j;
  j["sigma2"] = sigma2;
  j["epsilon"] = epsilon;
  j["p"] = p;
  j["chebyshev"] = chebyshev_min_trajectories(q);
  if (const auto clt = clt_trajectory_estimate(q)) {
    j["clt"] = *clt;
  } else {
    j["clt"] = nullptr;
    j["clt_note"] = "not applicable for p >= 0.5";
  }
  return j;
}

}  // namespace hkwave::driver
