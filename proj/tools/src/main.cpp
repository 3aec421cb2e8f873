#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hkwave/driver/commands.hpp"
#include "hkwave/parallel.hpp"
#include "hkwave/types.hpp"

namespace drv = hkwave::driver;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config;
  std::string preset;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "override run.seed");
  sub->add_option("--n", c.n, "override the trajectory count (caps the ladder for ladder commands)");
  sub->add_option("--preset", c.preset, "desk or paper scale")->check(CLI::IsMember({"desk", "paper"}));
  sub->add_option("--output", c.output, "override output.directory");
  sub->add_option("--threads", c.threads, "worker threads (0 = default)")->check(CLI::NonNegativeNumber);
}

int run_table_command(const std::string& name, const Common& c) {
  drv::Overrides o;
  o.preset = drv::parse_preset(c.preset);
  o.seed = c.seed;
  o.n = c.n;
  const auto cfg = drv::apply_overrides(drv::load_config(c.config), name, o);
  hkwave::set_worker_count(c.threads);
  const drv::Table t = drv::run_command(name, cfg);
  const std::string dir = c.output.empty() ? cfg.output.directory : c.output;
  for (const auto& path : drv::write_table(t, dir, name + "_" + cfg.hash(), cfg.output.formats))
    std::cout << path << "\n";
  for (const auto& [k, v] : t.metadata)
    if (k == "warning") std::cerr << "warning: " << v << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Herman-Kluk wavefunction propagation and sampling-error experiments"};
  app.require_subcommand(1);

  std::map<std::string, Common> common;
  const std::map<std::string, std::string> help{
      {"initial-error", "sampling error of psi_N(0) over an N ladder"},
      {"dim-sweep", "sampling error of psi_N(0) against dimension at fixed N"},
      {"harmonic-error", "error and S_K over one harmonic period"},
      {"morse-converge", "||psi_N - psi_2N|| over an N ladder at checkpoints"},
      {"density", "position densities against the quantum reference"},
      {"spectrum", "spectra from HK and reference autocorrelations"}};
  for (const auto& name : drv::command_names()) {
    if (name == "plan") continue;
    add_common(app.add_subcommand(name, help.at(name)), common[name]);
  }

  double sigma2 = 0.0, epsilon = 0.0, p = 0.0;
  std::string plan_output;
  auto* plan = app.add_subcommand("plan", "trajectory counts for a target error and exceedance probability");
  plan->add_option("--sigma2", sigma2, "estimator variance")->required();
  plan->add_option("--epsilon", epsilon, "error threshold")->required();
  plan->add_option("--p", p, "exceedance probability")->required();
  plan->add_option("--output", plan_output, "directory for plan_<hash>.json (stdout only when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (plan->parsed()) {
      const auto j = drv::plan(sigma2, epsilon, p);
      const std::string text = j.dump(2) + "\n";
      std::cout << text;
      if (!plan_output.empty()) {
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(drv::fnv1a64(j.dump())));
        std::filesystem::create_directories(plan_output);
        std::ofstream(std::filesystem::path(plan_output) / ("plan_" + std::string(hash) + ".json")) << text;
      }
      return 0;
    }
    for (const auto* sub : app.get_subcommands()) return run_table_command(sub->get_name(), common[sub->get_name()]);
  } catch (const drv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const drv::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const hkwave::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
