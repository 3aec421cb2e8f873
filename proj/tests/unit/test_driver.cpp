#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "hkwave/driver/commands.hpp"
#include "hkwave/parallel.hpp"

using namespace hkwave::driver;

namespace {

const std::string kInitial = R"({
  "initial_state": {"q0": -1.0, "p0": 0.0, "gamma": 2.0},
  "sampling": {"scheme": "both"},
  "run": {"n_trajectories": 400, "seed": 11},
  "experiment": {"ladder": [100, 200, 400]}
})";

const std::string kHarmonic = R"({
  "system": {"harmonic": {"m": 1.0, "omega": 1.0}},
  "initial_state": {"q0": -1.0, "p0": 0.0, "gamma": 2.0},
  "sampling": {"scheme": "both"},
  "run": {"dt": 0.0628318530717958, "n_steps": 100, "n_trajectories": 300, "seed": 5, "k_runs": 3},
  "grid": {"x_min": -10.0, "x_max": 10.0, "n_points": 256},
  "experiment": {"n_times": 10, "exact_classical": false}
})";

const std::string kMorse = R"({
  "system": {"morse": {"chi": 0.005, "omega_eq": 0.0041, "V_eq": 0.1, "q_eq": 20.95}},
  "initial_state": {"q0": 0.0, "p0": 0.0, "gamma": 0.00456},
  "sampling": {"scheme": "both"},
  "run": {"dt": 8.0, "n_steps": 60, "n_trajectories": 400, "seed": 3},
  "grid": {"x_min": -200.0, "x_max": 1500.0, "n_points": 2048},
  "experiment": {"ladder": [50, 100, 200], "checkpoints": [30, 60], "repetitions": 2}
})";

ExperimentConfig parse(const std::string& text) { return parse_config(text, "test.json"); }

// Expects a ConfigError and returns it.
ConfigError config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return ConfigError("", 0, "", "");
}

std::string csv_at_workers(const std::string& command, const ExperimentConfig& cfg, int workers) {
  hkwave::set_worker_count(workers);
  const std::string out = to_csv(run_command(command, cfg));
  hkwave::set_worker_count(0);
  return out;
}

}  // namespace

TEST(Config, ParsesExample) {
  const auto cfg = parse(kMorse);
  EXPECT_TRUE(cfg.has_system);
  EXPECT_TRUE(cfg.system.is_morse());
  EXPECT_DOUBLE_EQ(cfg.system.chi, 0.005);
  EXPECT_EQ(cfg.run.n_steps, 60u);
  ASSERT_TRUE(cfg.grid.has_value());
  EXPECT_EQ(cfg.grid->n_points, 2048u);
  EXPECT_EQ(cfg.experiment.checkpoints, (std::vector<std::size_t>{30, 60}));
  EXPECT_EQ(cfg.sampling.schemes, (std::vector<std::string>{"husimi", "sqrt_husimi"}));
  const auto spec = cfg.system.morse_spec(1.0);
  EXPECT_NEAR(spec.d_e(), 0.0041 / 0.02, 1e-15);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& entry : std::filesystem::directory_iterator(HKWAVE_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
  }
}

TEST(Config, UnknownKeyReportsLine) {
  const auto e = config_error(R"({
  "initial_state": {"q0": -1.0, "p0": 0.0, "gamma": 2.0},
  "sampling": {"scheme": "husimi"},
  "run": {"n_trajectories": 10,
          "sedd": 4}
})");
  EXPECT_EQ(e.line(), 5);
  EXPECT_EQ(e.key(), "run.sedd");
  EXPECT_EQ(std::string(e.what()), "test.json:5: run.sedd: unknown key");
}

TEST(Config, WrongTypeReportsLine) {
  const auto e = config_error(R"({
  "initial_state": {"q0": -1.0, "p0": 0.0, "gamma": "wide"},
  "sampling": {"scheme": "husimi"},
  "run": {"n_trajectories": 10, "seed": 1}
})");
  EXPECT_EQ(e.line(), 2);
  EXPECT_EQ(e.key(), "initial_state.gamma");
}

TEST(Config, RangeChecks) {
  const std::string base = R"({
  "system": {"harmonic": {"m": 1.0, "omega": 1.0}},
  "initial_state": {"q0": -1.0, "p0": 0.0, "gamma": 2.0},
  "sampling": {"scheme": "both"},
  "run": {"dt": 0.1, "n_steps": 10, "n_trajectories": 10, "seed": 1},
  "grid": {"x_min": -10.0, "x_max": 10.0, "n_points": NPOINTS}
})";
  auto with_points = [&](const std::string& n) {
    std::string s = base;
    s.replace(s.find("NPOINTS"), 7, n);
    return s;
  };
  EXPECT_NO_THROW(parse(with_points("1024")));
  const auto e = config_error(with_points("1000"));
  EXPECT_EQ(e.key(), "grid.n_points");
  EXPECT_EQ(e.line(), 6);
  EXPECT_EQ(config_error(with_points("-4")).key(), "grid.n_points");
  EXPECT_EQ(config_error(with_points("2.5")).key(), "grid.n_points");
}

TEST(Config, MissingSeedIsAnError) {
  const auto e = config_error(R"({
  "initial_state": {"q0": -1.0, "p0": 0.0, "gamma": 2.0},
  "sampling": {"scheme": "husimi"},
  "run": {"n_trajectories": 10}
})");
  EXPECT_EQ(e.line(), 4);
  EXPECT_NE(std::string(e.what()).find("seed"), std::string::npos);
}

TEST(Config, MissingSection) {
  const auto e = config_error(R"({
  "initial_state": {"q0": -1.0, "p0": 0.0, "gamma": 2.0},
  "run": {"n_trajectories": 10, "seed": 1}
})");
  EXPECT_EQ(e.key(), "sampling");
}

TEST(Config, SyntaxErrorReportsLine) {
  const auto e = config_error("{\n  \"run\": {\"seed\": 1,,}\n}\n");
  EXPECT_EQ(e.line(), 2);
}

TEST(Config, UnknownSchemeAndSystem) {
  EXPECT_EQ(config_error(R"({"initial_state": {"q0": 0, "p0": 0, "gamma": 1}, "sampling": {"scheme": "flat"},
    "run": {"n_trajectories": 1, "seed": 1}})").key(), "sampling.scheme");
  EXPECT_EQ(config_error(R"({"system": {"quartic": {}}, "initial_state": {"q0": 0, "p0": 0, "gamma": 1},
    "sampling": {"scheme": "husimi"}, "run": {"n_trajectories": 1, "seed": 1}})").key(), "system.quartic");
  EXPECT_EQ(config_error(R"({"initial_state": {"q0": [0, 1], "p0": [0], "gamma": 1}, "sampling": {"scheme": "husimi"},
    "run": {"n_trajectories": 1, "seed": 1}})").key(), "initial_state.p0");
}

TEST(Config, MorseIsOneDimensional) {
  EXPECT_EQ(config_error(R"({"system": {"morse": {"chi": 0.01, "omega_eq": 0.0041, "V_eq": 0.1, "q_eq": 20.95}},
    "initial_state": {"q0": [0, 0], "p0": [0, 0], "gamma": 1}, "sampling": {"scheme": "husimi"},
    "run": {"n_trajectories": 1, "seed": 1}})").key(), "initial_state.q0");
}

TEST(Config, HashIgnoresFormattingButNotValues) {
  const auto a = parse(kInitial);
  std::string compact = kInitial;
  std::erase(compact, '\n');
  EXPECT_EQ(a.hash(), parse(compact).hash());
  std::string changed = kInitial;
  changed.replace(changed.find("\"seed\": 11"), 10, "\"seed\": 12");
  EXPECT_NE(a.hash(), parse(changed).hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Config, DoublingLadder) {
  EXPECT_EQ(doubling_ladder(100, 0, 3), (std::vector<std::size_t>{100, 200, 400, 800}));
  const auto cfg = parse(R"({"initial_state": {"q0": 0, "p0": 0, "gamma": 1}, "sampling": {"scheme": "husimi"},
    "run": {"n_trajectories": 1, "seed": 1}, "experiment": {"ladder": {"base": 100, "k_min": 2, "k_max": 4}}})");
  EXPECT_EQ(cfg.experiment.ladder, (std::vector<std::size_t>{400, 800, 1600}));
}

TEST(Config, KeyLines) {
  const auto lines = json_key_lines("{\n \"a\": {\n  \"b\": 1,\n  \"c\": [1, {\"d\": 2}]\n },\n \"e\": 3\n}");
  EXPECT_EQ(lines.at("a"), 2);
  EXPECT_EQ(lines.at("a.b"), 3);
  EXPECT_EQ(lines.at("a.c"), 4);
  EXPECT_EQ(lines.at("e"), 6);
}

TEST(Overrides, PresetsAndN) {
  const auto cfg = parse(kInitial);
  const auto desk = apply_overrides(cfg, "initial-error", {Preset::Desk, std::nullopt, std::nullopt});
  EXPECT_EQ(desk.experiment.ladder, doubling_ladder(100, 0, 10));
  const auto paper = apply_overrides(cfg, "initial-error", {Preset::Paper, std::nullopt, std::nullopt});
  EXPECT_EQ(paper.experiment.ladder.back(), 819200u);
  const auto capped = apply_overrides(desk, "initial-error", {Preset::None, 99u, 1000u});
  EXPECT_EQ(capped.experiment.ladder.back(), 800u);
  EXPECT_EQ(capped.run.seed, 99u);
  EXPECT_THROW(apply_overrides(cfg, "initial-error", {Preset::None, std::nullopt, 50u}), ConfigError);
  const auto harm = apply_overrides(parse(kHarmonic), "harmonic-error", {Preset::Desk, std::nullopt, std::nullopt});
  EXPECT_EQ(harm.run.k_runs, 20u);
  EXPECT_EQ(harm.run.n_trajectories, 4096u);
  const auto harm_p = apply_overrides(parse(kHarmonic), "harmonic-error", {Preset::Paper, std::nullopt, std::nullopt});
  EXPECT_EQ(harm_p.run.k_runs, 100u);
  EXPECT_EQ(harm_p.run.n_trajectories, 65536u);
  EXPECT_THROW(parse_preset("huge"), std::invalid_argument);
}

TEST(Table, CsvLayout) {
  Table t;
  t.meta("seed", "7");
  t.columns = {"scheme", "N", "value", "note"};
  t.add_row({std::string("husimi"), std::uint64_t{100}, 0.1, Cell{}});
  t.add_row({std::string("a,b"), std::uint64_t{200}, 1e-300, std::string("x")});
  EXPECT_EQ(to_csv(t), "# seed: 7\nscheme,N,value,note\nhusimi,100,0.1,\n\"a,b\",200,1e-300,x\n");
  EXPECT_THROW(t.add_row({1.0}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(t.number(1, "N"), 200.0);
  EXPECT_TRUE(t.empty_cell(0, "note"));
  EXPECT_EQ(t.text(1, "note"), "x");
}

TEST(Table, ShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 2.0 / 7.0 * 1e-17, 6.02214076e23, -0.0, 5e-324, 1.7976931348623157e308}) {
    const std::string s = format_double(x);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), x) << s;
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(3.0), "3");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Table, WritesFiles) {
  Table t;
  t.columns = {"x"};
  t.add_row({1.5});
  const auto dir = std::filesystem::temp_directory_path() / "hkwave_table_test";
  std::filesystem::remove_all(dir);
  const auto paths = write_table(t, dir.string(), "stem", {"csv", "json"});
  ASSERT_EQ(paths.size(), 2u);
  std::ifstream in(dir / "stem.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "x\n1.5\n");
  std::ifstream js(dir / "stem.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["rows"][0][0], 1.5);
  std::filesystem::remove_all(dir);
}

TEST(Commands, Plan) {
  const auto j = plan(3.0, 0.1, 0.05);
  EXPECT_EQ(j["chebyshev"], 6000);
  EXPECT_GE(j["clt"].get<int>(), 200);
  EXPECT_LE(j["clt"].get<int>(), 206);
  EXPECT_TRUE(plan(3.0, 0.1, 0.5)["clt"].is_null());
  EXPECT_THROW(plan(3.0, 0.0, 0.1), std::invalid_argument);
}

TEST(Commands, InitialErrorColumns) {
  const auto t = initial_error(parse(kInitial));
  EXPECT_EQ(t.columns, (std::vector<std::string>{"scheme", "N", "l2_error", "analytic_prediction", "fit_c", "fit_s"}));
  ASSERT_EQ(t.rows.size(), 6u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.text(i, "scheme") == "husimi") {
      EXPECT_TRUE(t.empty_cell(i, "analytic_prediction"));
    } else {
      EXPECT_NEAR(t.number(i, "analytic_prediction"), std::sqrt(3.0 / t.number(i, "N")), 1e-15);
    }
    EXPECT_GT(t.number(i, "l2_error"), 0.0);
  }
}

TEST(Commands, SingleLadderEntryHasNoFit) {
  std::string text = kInitial;
  text.replace(text.find("[100, 200, 400]"), 15, "[300]");
  const auto t = initial_error(parse(text));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(t.empty_cell(0, "fit_s"));
}

TEST(Commands, DimensionSweepMatchesInitialError) {
  const auto cfg = parse(R"({"initial_state": {"q0": -1.0, "p0": 0.0, "gamma": 2.0}, "sampling": {"scheme": "both"},
    "run": {"n_trajectories": 400, "seed": 11}, "experiment": {"d_max": 2, "n_fixed": 400, "ladder": [400]}})");
  const auto sweep = dimension_sweep(cfg);
  const auto single = initial_error(cfg);
  ASSERT_EQ(sweep.rows.size(), 4u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(sweep.number(i, "D"), 1.0);
    EXPECT_EQ(sweep.number(i, "error"), single.number(i, "l2_error"));
  }
  EXPECT_NEAR(sweep.number(3, "analytic_prediction"), std::sqrt(15.0 / 400.0), 1e-15);
}

TEST(Commands, RequireMatchingSystem) {
  EXPECT_THROW(harmonic_error(parse(kMorse)), ConfigError);
  EXPECT_THROW(morse_converge(parse(kHarmonic)), ConfigError);
  EXPECT_THROW(position_density(parse(kInitial)), ConfigError);
}

TEST(Commands, SpectrumStartsAtOne) {
  std::string text = kMorse;
  text.replace(text.find("\"both\""), 6, "\"husimi\"");
  const auto t = spectrum(parse(text));
  bool found = false;
  for (const auto& [k, v] : t.metadata)
    if (k == "autocorrelation_t0") {
      EXPECT_EQ(v, "1+0i");
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(Commands, MetadataBlock) {
  const auto cfg = parse(kInitial);
  const std::string csv = to_csv(initial_error(cfg));
  EXPECT_EQ(csv.rfind("# hkwave: ", 0), 0u);
  EXPECT_NE(csv.find("# config_hash: " + cfg.hash() + "\n"), std::string::npos);
  EXPECT_NE(csv.find("# seed: 11\n"), std::string::npos);
}

class Determinism : public ::testing::TestWithParam<std::pair<std::string, std::string>> {};

TEST_P(Determinism, ByteIdenticalAcrossWorkerCounts) {
  const auto& [command, text] = GetParam();
  const auto cfg = parse(text);
  const std::string one = csv_at_workers(command, cfg, 1);
  EXPECT_EQ(one, csv_at_workers(command, cfg, 1));
  EXPECT_EQ(one, csv_at_workers(command, cfg, 4));
  EXPECT_EQ(one, csv_at_workers(command, cfg, 8));
}

INSTANTIATE_TEST_SUITE_P(
    Commands, Determinism,
    ::testing::Values(std::pair{std::string("initial-error"), kInitial},
                      std::pair{std::string("dim-sweep"),
                                std::string(R"({"initial_state": {"q0": -1.0, "p0": 0.0, "gamma": 2.0},
                                  "sampling": {"scheme": "both"}, "run": {"n_trajectories": 300, "seed": 2},
                                  "experiment": {"d_max": 3, "n_fixed": 300}})")},
                      std::pair{std::string("harmonic-error"), kHarmonic},
                      std::pair{std::string("morse-converge"), kMorse},
                      std::pair{std::string("density"), kMorse},
                      std::pair{std::string("spectrum"), kMorse}),
    [](const auto& info) {
      std::string name = info.param.first;
      std::erase(name, '-');
      return name;
    });
