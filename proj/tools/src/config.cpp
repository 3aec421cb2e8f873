#include "hkwave/driver/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace hkwave::driver {

using nlohmann::json;

ConfigError::ConfigError(const std::string& source, int line, const std::string& key, const std::string& reason)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + (key.empty() ? "" : key + ": ") + reason),
      line_(line),
      key_(key) {}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::size_t> doubling_ladder(std::size_t base, int k_min, int k_max) {
  std::vector<std::size_t> out;
  for (int k = k_min; k <= k_max; ++k) out.push_back(base << k);
  return out;
}

std::map<std::string, int> json_key_lines(const std::string& text) {
  // Tracks the path of enclosing keys; containers without a key (array elements) add nothing.
  std::map<std::string, int> lines;
  std::vector<std::string> stack;  // key of every open container
  std::string pending;             // last key seen at the current level
  bool have_pending = false;
  int line = 1;
  auto path_of = [&](const std::string& key) {
    std::string p;
    for (const auto& s : stack)
      if (!s.empty()) p += s + ".";
    return p + key;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '"') {
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        if (text[i] == '\n') ++line;
        s += text[i];
      }
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r' || text[j] == '\n')) ++j;
      if (j < text.size() && text[j] == ':') {
        pending = s;
        have_pending = true;
        lines.emplace(path_of(s), line);
      }
    } else if (c == '{' || c == '[') {
      stack.push_back(have_pending ? pending : "");
      have_pending = false;
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
      have_pending = false;
    } else if (c == ',') {
      have_pending = false;
    }
  }
  return lines;
}

namespace {

class Reader {
 public:
  Reader(const std::string& source, std::map<std::string, int> lines) : source_(source), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& reason) const {
    throw ConfigError(source_, line_of(key), key, reason);
  }

  int line_of(std::string key) const {
    while (true) {
      auto it = lines_.find(key);
      if (it != lines_.end()) return it->second;
      const auto dot = key.rfind('.');
      if (dot == std::string::npos) return 1;
      key.resize(dot);
    }
  }

  void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(path, "must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
      if (!ok.count(k)) fail(join(path, k), "unknown key");
  }

  static std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

  double number(const json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(join(path, key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(join(path, key), "must be finite");
    return x;
  }

  double positive(const json& obj, const std::string& path, const char* key) const {
    const double x = number(obj, path, key);
    if (!(x > 0.0)) fail(join(path, key), "must be positive");
    return x;
  }

  std::uint64_t count(const json& obj, const std::string& path, const char* key, std::uint64_t min = 0) const {
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned())
      fail(join(path, key), "must be a non-negative integer");
    const auto x = v.get<std::uint64_t>();
    if (x < min) fail(join(path, key), "must be at least " + std::to_string(min));
    return x;
  }

  std::vector<double> numbers(const json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    std::vector<double> out;
    if (v.is_number()) {
      out.push_back(number(obj, path, key));
    } else if (v.is_array() && !v.empty()) {
      for (const auto& e : v) {
        if (!e.is_number()) fail(join(path, key), "must be a number or a non-empty array of numbers");
        out.push_back(e.get<double>());
        if (!std::isfinite(out.back())) fail(join(path, key), "must be finite");
      }
    } else {
      fail(join(path, key), "must be a number or a non-empty array of numbers");
    }
    return out;
  }

  std::vector<std::size_t> counts(const json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_array() || v.empty()) fail(join(path, key), "must be a non-empty array of positive integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0)
        fail(join(path, key), "must be a non-empty array of positive integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  std::string string(const json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(join(path, key), "must be a string");
    return v.get<std::string>();
  }

  bool boolean(const json& obj, const std::string& path, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail(join(path, key), "must be true or false");
    return v.get<bool>();
  }

  const json& section(const json& root, const char* key) const {
    if (!root.contains(key)) fail(key, "missing section");
    return root.at(key);
  }

  void require(const json& obj, const std::string& path, const char* key) const {
    if (!obj.contains(key)) fail(path, std::string("missing key '") + key + "'");
  }

 private:
  std::string source_;
  std::map<std::string, int> lines_;
};

void parse_system(const Reader& r, const json& s, SystemConfig& out) {
  r.only_keys(s, "system", {"harmonic", "morse"});
  if (!s.is_object() || s.size() != 1 || !(s.contains("harmonic") || s.contains("morse")))
    r.fail("system", "must contain exactly one of 'harmonic' or 'morse'");
  if (s.contains("harmonic")) {
    const auto& h = s.at("harmonic");
    r.only_keys(h, "system.harmonic", {"m", "omega"});
    out.kind = SystemConfig::Kind::Harmonic;
    if (h.contains("m")) out.mass = r.positive(h, "system.harmonic", "m");
    r.require(h, "system.harmonic", "omega");
    out.omega = r.positive(h, "system.harmonic", "omega");
  } else {
    const auto& m = s.at("morse");
    r.only_keys(m, "system.morse", {"chi", "omega_eq", "V_eq", "q_eq", "m"});
    out.kind = SystemConfig::Kind::Morse;
    for (const char* k : {"chi", "omega_eq"}) r.require(m, "system.morse", k);
    out.chi = r.positive(m, "system.morse", "chi");
    if (!(out.chi < 0.25)) r.fail("system.morse.chi", "must be below 0.25 (at least one bound state)");
    out.omega_eq = r.positive(m, "system.morse", "omega_eq");
    if (m.contains("V_eq")) out.v_eq = r.number(m, "system.morse", "V_eq");
    if (m.contains("q_eq")) out.q_eq = r.number(m, "system.morse", "q_eq");
    if (m.contains("m")) out.mass = r.positive(m, "system.morse", "m");
  }
}

void parse_initial_state(const Reader& r, const json& s, InitialStateConfig& out) {
  const std::string path = "initial_state";
  r.only_keys(s, path, {"q0", "p0", "gamma", "hbar"});
  for (const char* k : {"q0", "p0", "gamma"}) r.require(s, path, k);
  out.q0 = r.numbers(s, path, "q0");
  out.p0 = r.numbers(s, path, "p0");
  out.gamma = r.numbers(s, path, "gamma");
  if (s.contains("hbar")) out.hbar = r.positive(s, path, "hbar");
  const std::size_t d = out.q0.size();
  if (d > static_cast<std::size_t>(kMaxDim)) r.fail("initial_state.q0", "at most " + std::to_string(kMaxDim) + " dimensions");
  if (out.p0.size() != d) r.fail("initial_state.p0", "must have as many entries as q0");
  if (out.gamma.size() != 1 && out.gamma.size() != d * d)
    r.fail("initial_state.gamma", "must be a positive number or a D*D row-major matrix");
  if (out.gamma.size() == 1 && !(out.gamma[0] > 0.0)) r.fail("initial_state.gamma", "must be positive");
  try {
    (void)out.wavepacket();
  } catch (const std::invalid_argument& e) {
    r.fail("initial_state.gamma", e.what());
  }
}

void parse_sampling(const Reader& r, const json& s, SamplingConfig& out) {
  const std::string path = "sampling";
  r.only_keys(s, path, {"scheme", "a"});
  r.require(s, path, "scheme");
  const auto& v = s.at("scheme");
  out.schemes.clear();
  auto add = [&](const json& e) {
    if (!e.is_string()) r.fail("sampling.scheme", "must be a scheme name or an array of names");
    const std::string name = e.get<std::string>();
    if (name == "both") {
      out.schemes.insert(out.schemes.end(), {"husimi", "sqrt_husimi"});
      return;
    }
    try {
      (void)parse_sampling_kind(name);
    } catch (const std::invalid_argument&) {
      r.fail("sampling.scheme", "unknown scheme '" + name + "' (husimi, sqrt_husimi, general_a, both)");
    }
    out.schemes.push_back(name);
  };
  if (v.is_array()) {
    if (v.empty()) r.fail("sampling.scheme", "must not be empty");
    for (const auto& e : v) add(e);
  } else {
    add(v);
  }
  const bool general = std::find(out.schemes.begin(), out.schemes.end(), "general_a") != out.schemes.end();
  if (s.contains("a")) {
    out.a = r.number(s, path, "a");
    if (!(out.a >= 2.0)) r.fail("sampling.a", "must be at least 2");
  } else if (general) {
    r.fail("sampling", "scheme 'general_a' needs 'a'");
  }
}

void parse_run(const Reader& r, const json& s, RunConfig& out) {
  const std::string path = "run";
  r.only_keys(s, path, {"dt", "n_steps", "n_trajectories", "seed", "k_runs"});
  for (const char* k : {"n_trajectories", "seed"}) r.require(s, path, k);
  if (s.contains("dt")) out.dt = r.positive(s, path, "dt");
  if (s.contains("n_steps")) out.n_steps = r.count(s, path, "n_steps");
  out.n_trajectories = r.count(s, path, "n_trajectories", 1);
  out.seed = r.count(s, path, "seed");
  if (s.contains("k_runs")) out.k_runs = r.count(s, path, "k_runs", 1);
}

void parse_grid(const Reader& r, const json& s, GridConfig& out) {
  const std::string path = "grid";
  r.only_keys(s, path, {"x_min", "x_max", "n_points"});
  for (const char* k : {"x_min", "x_max", "n_points"}) r.require(s, path, k);
  out.x_min = r.number(s, path, "x_min");
  out.x_max = r.number(s, path, "x_max");
  out.n_points = r.count(s, path, "n_points", 2);
  if (!(out.x_max > out.x_min)) r.fail("grid.x_max", "must exceed x_min");
  if ((out.n_points & (out.n_points - 1)) != 0) r.fail("grid.n_points", "must be a power of two");
}

void parse_output(const Reader& r, const json& s, OutputConfig& out) {
  const std::string path = "output";
  r.only_keys(s, path, {"directory", "formats"});
  if (s.contains("directory")) out.directory = r.string(s, path, "directory");
  if (s.contains("formats")) {
    const auto& v = s.at("formats");
    if (!v.is_array() || v.empty()) r.fail("output.formats", "must be a non-empty array");
    out.formats.clear();
    for (const auto& e : v) {
      if (!e.is_string() || (e != "csv" && e != "json")) r.fail("output.formats", "entries must be \"csv\" or \"json\"");
      out.formats.push_back(e.get<std::string>());
    }
  }
}

void parse_experiment(const Reader& r, const json& s, ExperimentParams& out) {
  const std::string path = "experiment";
  r.only_keys(s, path,
              {"ladder", "checkpoints", "d_max", "n_fixed", "exact_classical", "damping_hwhm", "n_times",
               "repetitions", "backend", "tail_tolerance"});
  if (s.contains("ladder")) {
    const auto& v = s.at("ladder");
    if (v.is_object()) {
      r.only_keys(v, "experiment.ladder", {"base", "k_min", "k_max"});
      for (const char* k : {"base", "k_max"}) r.require(v, "experiment.ladder", k);
      const auto base = r.count(v, "experiment.ladder", "base", 1);
      const auto k_min = v.contains("k_min") ? r.count(v, "experiment.ladder", "k_min") : 0;
      const auto k_max = r.count(v, "experiment.ladder", "k_max");
      if (k_max < k_min || k_max > 40) r.fail("experiment.ladder.k_max", "must lie in [k_min, 40]");
      out.ladder = doubling_ladder(base, static_cast<int>(k_min), static_cast<int>(k_max));
    } else {
      out.ladder = r.counts(s, path, "ladder");
    }
    for (std::size_t i = 1; i < out.ladder.size(); ++i)
      if (out.ladder[i] <= out.ladder[i - 1]) r.fail("experiment.ladder", "must be strictly increasing");
  }
  if (s.contains("checkpoints")) out.checkpoints = r.counts(s, path, "checkpoints");
  if (s.contains("d_max")) {
    out.d_max = static_cast<int>(r.count(s, path, "d_max", 1));
    if (out.d_max > kMaxDim) r.fail("experiment.d_max", "must not exceed " + std::to_string(kMaxDim));
  }
  if (s.contains("n_fixed")) out.n_fixed = r.count(s, path, "n_fixed", 1);
  if (s.contains("exact_classical")) out.exact_classical = r.boolean(s, path, "exact_classical");
  if (s.contains("damping_hwhm")) {
    out.damping_hwhm = r.number(s, path, "damping_hwhm");
    if (out.damping_hwhm < 0.0) r.fail("experiment.damping_hwhm", "must be >= 0 (0 disables damping)");
  }
  if (s.contains("n_times")) out.n_times = r.count(s, path, "n_times", 1);
  if (s.contains("repetitions")) out.repetitions = r.count(s, path, "repetitions", 1);
  if (s.contains("backend")) {
    out.backend = r.string(s, path, "backend");
    if (out.backend != "auto" && out.backend != "fock" && out.backend != "pairwise")
      r.fail("experiment.backend", "must be auto, fock or pairwise");
  }
  if (s.contains("tail_tolerance")) {
    out.tail_tolerance = r.positive(s, path, "tail_tolerance");
    if (!(out.tail_tolerance < 1.0)) r.fail("experiment.tail_tolerance", "must be below 1");
  }
}

}  // namespace

MorseSpec SystemConfig::morse_spec(double hbar) const {
  MorseSpec spec;
  spec.chi = chi;
  spec.omega_eq = omega_eq;
  spec.v_eq = v_eq;
  spec.q_eq = q_eq;
  spec.mass = mass;
  spec.hbar = hbar;
  return spec;
}

Potential SystemConfig::potential(int dim, double hbar) const {
  if (kind == Kind::Harmonic) return Potential(HarmonicPotential{mass, omega}, dim);
  if (dim != 1) throw std::invalid_argument("Morse systems are one-dimensional");
  return Potential(morse_spec(hbar).potential());
}

GaussianWavepacket InitialStateConfig::wavepacket() const {
  const int d = dim();
  Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(q0.data(), d);
  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(p0.data(), d);
  if (gamma.size() == 1) return GaussianWavepacket::isotropic(q, p, gamma[0], hbar);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = gamma[static_cast<std::size_t>(i * d + j)];
  return GaussianWavepacket(q, p, g, hbar);
}

double InitialStateConfig::scalar_gamma() const {
  if (gamma.size() == 1) return gamma[0];
  const double w = wavepacket().scalar_width();
  if (std::isnan(w)) throw std::invalid_argument("this command needs an isotropic width (initial_state.gamma)");
  return w;
}

std::vector<SamplingScheme> SamplingConfig::build(const GaussianWavepacket& psi0) const {
  std::vector<SamplingScheme> out;
  for (const auto& name : schemes) {
    const SamplingKind kind = parse_sampling_kind(name);
    out.emplace_back(kind, psi0, kind == SamplingKind::GeneralA ? a : 0.0);
  }
  return out;
}

json ExperimentConfig::to_json() const {
  json j;
  if (has_system) {
    if (system.is_morse())
      j["system"]["morse"] = {{"chi", system.chi}, {"omega_eq", system.omega_eq}, {"V_eq", system.v_eq},
                              {"q_eq", system.q_eq}, {"m", system.mass}};
    else
      j["system"]["harmonic"] = {{"m", system.mass}, {"omega", system.omega}};
  }
  j["initial_state"] = {{"q0", initial_state.q0}, {"p0", initial_state.p0}, {"gamma", initial_state.gamma},
                        {"hbar", initial_state.hbar}};
  j["sampling"] = {{"scheme", sampling.schemes}, {"a", sampling.a}};
  j["run"] = {{"dt", run.dt}, {"n_steps", run.n_steps}, {"n_trajectories", run.n_trajectories},
              {"seed", run.seed}, {"k_runs", run.k_runs}};
  if (grid) j["grid"] = {{"x_min", grid->x_min}, {"x_max", grid->x_max}, {"n_points", grid->n_points}};
  j["output"] = {{"formats", output.formats}};
  const auto& e = experiment;
  j["experiment"] = {{"ladder", e.ladder},
                     {"checkpoints", e.checkpoints},
                     {"d_max", e.d_max},
                     {"n_fixed", e.n_fixed},
                     {"exact_classical", e.exact_classical},
                     {"damping_hwhm", e.damping_hwhm},
                     {"n_times", e.n_times},
                     {"repetitions", e.repetitions},
                     {"backend", e.backend},
                     {"tail_tolerance", e.tail_tolerance}};
  return j;
}

int ExperimentConfig::line_of(std::string key) const {
  while (true) {
    auto it = key_lines.find(key);
    if (it != key_lines.end()) return it->second;
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) return 0;
    key.resize(dot);
  }
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset -> line.
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    std::string msg = e.what();
    const auto pos = msg.find("syntax error");
    throw ConfigError(source, line, "", pos == std::string::npos ? msg : msg.substr(pos));
  }
  const Reader r(source, json_key_lines(text));
  if (!root.is_object()) r.fail("", "top level must be an object");
  r.only_keys(root, "", {"system", "initial_state", "sampling", "run", "grid", "output", "experiment"});

  ExperimentConfig cfg;
  cfg.source = source;
  cfg.key_lines = json_key_lines(text);
  if (root.contains("system")) {
    cfg.has_system = true;
    parse_system(r, root.at("system"), cfg.system);
  }
  parse_initial_state(r, r.section(root, "initial_state"), cfg.initial_state);
  parse_sampling(r, r.section(root, "sampling"), cfg.sampling);
  parse_run(r, r.section(root, "run"), cfg.run);
  if (root.contains("grid")) {
    cfg.grid.emplace();
    parse_grid(r, root.at("grid"), *cfg.grid);
  }
  if (root.contains("output")) parse_output(r, root.at("output"), cfg.output);
  if (root.contains("experiment")) parse_experiment(r, root.at("experiment"), cfg.experiment);
  if (cfg.system.is_morse() && cfg.initial_state.dim() != 1) r.fail("initial_state.q0", "Morse systems are one-dimensional");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "", "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace hkwave::driver
