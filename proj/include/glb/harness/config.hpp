#ifndef GLB_HARNESS_CONFIG_HPP
#define GLB_HARNESS_CONFIG_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "glb/error.hpp"
#include "glb/lattice.hpp"
#include "glb/solver.hpp"

namespace glb::harness {

class ParseError : public Error {
 public:
  ParseError(int line, std::string key, const std::string& what)
      : Error(format(line, key, what)), line_(line), key_(std::move(key)) {}

  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  static std::string format(int line, const std::string& key, const std::string& what) {
    std::string out = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
    if (!key.empty()) out += "key '" + key + "': ";
    return out + what;
  }
  int line_;
  std::string key_;
};

enum class Study { Minimize, Sweep, Monotonicity, Clearing, Appendix, Report };

inline std::string to_string(Study s) {
  switch (s) {
    case Study::Minimize: return "minimize";
    case Study::Sweep: return "sweep";
    case Study::Monotonicity: return "probe-monotonicity";
    case Study::Clearing: return "probe-clearing";
    case Study::Appendix: return "probe-appendix";
    default: return "report";
  }
}

inline std::optional<Study> study_from_string(const std::string& s) {
  for (Study st : {Study::Minimize, Study::Sweep, Study::Monotonicity, Study::Clearing, Study::Appendix, Study::Report})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

/// Vertex coordinates of a probe center.
using CenterSpec = std::array<int, 3>;

struct ExperimentConfig {
  Study study = Study::Minimize;
  int n = 2;
  std::vector<int> sizes;
  std::vector<double> lengths;
  int degree = 0;
  std::optional<double> epsilon;
  std::vector<double> epsilons;
  SolveOptions solver;
  std::optional<InitMode> init;  // default: vortex-ansatz if d != 0, else random
  std::uint64_t seed = 0;
  std::string output = "out";
  std::string snapshot;          // load this state instead of solving
  std::vector<double> radii;     // default {8h, 8 sqrt(2) h, L/4}
  std::vector<CenterSpec> centers;  // default chosen per study
  double eta0 = 0.1;
  std::optional<double> clearing_radius;  // default min(L)/4
  double offline_distance = 0.0;          // default min(L)/3
  double threshold = 0.5;
  std::size_t gaffney_samples = 16;
  MeasureNormalization normalization = MeasureNormalization::LogEps;

  /// key -> value as written (defaults filled in by echo()).
  std::map<std::string, std::string> raw;

  Lattice lattice() const { return Lattice::build(n, sizes, lengths); }
  InitMode init_mode() const { return init.value_or(degree != 0 ? InitMode::VortexAnsatz : InitMode::Random); }
  double min_length() const {
    double m = lengths.front();
    for (double l : lengths) m = std::min(m, l);
    return m;
  }
  double spacing() const { return lengths.front() / sizes.front(); }
  std::vector<double> profile_radii() const {
    if (!radii.empty()) return radii;
    const double h = spacing();
    std::vector<double> out{8.0 * h};
    for (double r : {8.0 * std::sqrt(2.0) * h, 0.25 * min_length()})
      if (r > out.back() && r <= 0.25 * min_length() * (1 + 1e-12)) out.push_back(r);
    return out;
  }
  double clearing_r() const { return clearing_radius.value_or(0.25 * min_length()); }
  double offline_d() const { return offline_distance > 0.0 ? offline_distance : min_length() / 3.0; }

  /// Every recognized key with its effective value.
  std::map<std::string, std::string> echo() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

inline std::map<std::string, std::string> ExperimentConfig::echo() const {
  std::map<std::string, std::string> e;
  auto join_i = [](const auto& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  auto join_d = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + detail::fmt(v[i]);
    return s;
  };
  e["study"] = to_string(study);
  e["n"] = std::to_string(n);
  e["N"] = join_i(sizes);
  e["L"] = join_d(lengths);
  e["d"] = std::to_string(degree);
  if (epsilon) e["epsilon"] = detail::fmt(*epsilon);
  if (!epsilons.empty()) e["epsilons"] = join_d(epsilons);
  e["method"] = to_string(solver.method);
  e["tolerance"] = detail::fmt(solver.tolerance);
  e["max_iterations"] = std::to_string(solver.max_iterations);
  e["initial_step"] = detail::fmt(solver.initial_step);
  e["armijo"] = detail::fmt(solver.armijo);
  e["backtrack"] = detail::fmt(solver.backtrack);
  e["init"] = to_string(init_mode());
  e["seed"] = std::to_string(seed);
  e["output"] = output;
  if (!snapshot.empty()) e["snapshot"] = snapshot;
  e["radii"] = join_d(profile_radii());
  if (!centers.empty()) {
    std::string s;
    for (std::size_t i = 0; i < centers.size(); ++i)
      s += (i ? "," : "") + std::to_string(centers[i][0]) + ":" + std::to_string(centers[i][1]) + ":" +
           std::to_string(centers[i][2]);
    e["centers"] = s;
  }
  e["eta0"] = detail::fmt(eta0);
  e["clearing_radius"] = detail::fmt(clearing_r());
  e["offline_distance"] = detail::fmt(offline_d());
  e["threshold"] = detail::fmt(threshold);
  e["gaffney_samples"] = std::to_string(gaffney_samples);
  e["normalization"] = normalization == MeasureNormalization::LogEps ? "log-eps" : "pi-log-eps";
  return e;
}

/// Parses line-based `key = value` text with `#` comments, then validates
/// every range against the module preconditions.
inline ExperimentConfig parse_config(const std::string& text) {
  struct Entry {
    int line;
    std::string value;
  };
  std::map<std::string, Entry> entries;
  std::istringstream is(text);
  std::string raw_line;
  int lineno = 0;
  while (std::getline(is, raw_line)) {
    ++lineno;
    const auto hash = raw_line.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw_line : raw_line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "", "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "", "missing key");
    if (auto it = entries.find(key); it != entries.end())
      throw ParseError(lineno, key,
                       "duplicate key (line " + std::to_string(it->second.line) + " and line " + std::to_string(lineno) + ")");
    entries[key] = {lineno, value};
  }

  static const std::vector<std::string> known{
      "study",  "n",      "N",        "L",      "d",     "epsilon", "epsilons", "method",          "tolerance",
      "max_iterations", "initial_step", "armijo", "backtrack", "init", "seed", "output", "snapshot", "radii",
      "centers", "eta0", "clearing_radius", "offline_distance", "threshold", "gaffney_samples", "normalization"};
  for (const auto& [key, e] : entries)
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ParseError(e.line, key, "unknown key");

  ExperimentConfig cfg;
  for (const auto& [key, e] : entries) cfg.raw[key] = e.value;
  auto has = [&](const std::string& k) { return entries.count(k) > 0; };
  auto line_of = [&](const std::string& k) { return has(k) ? entries.at(k).line : 0; };
  auto require = [&](const std::string& k) {
    if (!has(k)) throw ParseError(0, k, "required key missing");
    return entries.at(k).value;
  };
  auto as_int = [&](const std::string& k, const std::string& v) {
    long long x;
    if (!detail::parse_number(v, x)) throw ParseError(line_of(k), k, "expected an integer, got '" + v + "'");
    return x;
  };
  auto as_u64 = [&](const std::string& k, const std::string& v) {
    std::uint64_t x;
    if (!detail::parse_number(v, x)) throw ParseError(line_of(k), k, "expected an unsigned integer, got '" + v + "'");
    return x;
  };
  auto as_real = [&](const std::string& k, const std::string& v) {
    double x;
    if (!detail::parse_number(v, x) || !std::isfinite(x))
      throw ParseError(line_of(k), k, "expected a real number, got '" + v + "'");
    return x;
  };
  auto real_list = [&](const std::string& k) {
    std::vector<double> out;
    for (const auto& item : detail::split(entries.at(k).value, ',')) out.push_back(as_real(k, item));
    if (out.empty()) throw ParseError(line_of(k), k, "empty list");
    return out;
  };
  auto range = [&](const std::string& k, bool ok, const std::string& what) {
    if (!ok) throw ParseError(line_of(k), k, what);
  };

  const std::string study = require("study");
  const auto st = study_from_string(study);
  range("study", st.has_value(), "unknown study '" + study + "'");
  cfg.study = *st;

  cfg.n = static_cast<int>(as_int("n", require("n")));
  range("n", cfg.n == 2 || cfg.n == 3, "must be 2 or 3");
  {
    require("N");
    for (const auto& item : detail::split(entries.at("N").value, ',')) {
      const long long x = as_int("N", item);
      range("N", x >= 4 && x <= 4096, "sizes must lie in [4, 4096]");
      cfg.sizes.push_back(static_cast<int>(x));
    }
    if (cfg.sizes.size() == 1) cfg.sizes.assign(cfg.n, cfg.sizes.front());
    range("N", static_cast<int>(cfg.sizes.size()) == cfg.n, "expected 1 or n sizes");
  }
  {
    require("L");
    cfg.lengths = real_list("L");
    for (double l : cfg.lengths) range("L", l > 0.0, "lengths must be positive");
    if (cfg.lengths.size() == 1) cfg.lengths.assign(cfg.n, cfg.lengths.front());
    range("L", static_cast<int>(cfg.lengths.size()) == cfg.n, "expected 1 or n lengths");
    try {
      (void)cfg.lattice();
    } catch (const Error& e) {
      throw ParseError(line_of("L"), "L", e.what());
    }
  }
  cfg.degree = static_cast<int>(as_int("d", require("d")));
  range("d", std::abs(cfg.degree) <= 64, "degree out of range");
  const double h = cfg.spacing();

  if (has("epsilon")) {
    cfg.epsilon = as_real("epsilon", entries.at("epsilon").value);
    range("epsilon", *cfg.epsilon > 0.0, "must be positive");
    range("epsilon", *cfg.epsilon < 1.0, "must be below 1 so that |log eps| > 0");
  }
  if (has("epsilons")) {
    cfg.epsilons = real_list("epsilons");
    for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
      range("epsilons", cfg.epsilons[i] > 0.0 && cfg.epsilons[i] < 1.0, "values must lie in (0, 1)");
      range("epsilons", cfg.epsilons[i] >= 2.0 * h, "value below the resolution floor 2h");
      if (i > 0) range("epsilons", cfg.epsilons[i] < cfg.epsilons[i - 1], "schedule must be strictly decreasing");
    }
  }
  if (cfg.study == Study::Sweep) {
    if (!has("epsilons")) throw ParseError(0, "epsilons", "required key missing for study sweep");
    range("epsilons", cfg.epsilons.size() >= 2, "sweep needs at least two values");
  } else if (cfg.study != Study::Appendix && cfg.study != Study::Report) {
    if (!has("epsilon")) throw ParseError(0, "epsilon", "required key missing");
  }

  if (has("method")) {
    const std::string m = entries.at("method").value;
    if (m == "gradient-flow") cfg.solver.method = Method::GradientFlow;
    else if (m == "nonlinear-cg") cfg.solver.method = Method::NonlinearCG;
    else throw ParseError(line_of("method"), "method", "expected gradient-flow or nonlinear-cg");
  }
  if (has("tolerance")) {
    cfg.solver.tolerance = as_real("tolerance", entries.at("tolerance").value);
    range("tolerance", cfg.solver.tolerance > 0.0, "must be positive");
  }
  if (has("max_iterations")) {
    const long long x = as_int("max_iterations", entries.at("max_iterations").value);
    range("max_iterations", x >= 1, "must be at least 1");
    cfg.solver.max_iterations = static_cast<std::size_t>(x);
  }
  if (has("initial_step")) {
    cfg.solver.initial_step = as_real("initial_step", entries.at("initial_step").value);
    range("initial_step", cfg.solver.initial_step >= 0.0, "must be nonnegative (0 selects h^2/(4n))");
  }
  if (has("armijo")) {
    cfg.solver.armijo = as_real("armijo", entries.at("armijo").value);
    range("armijo", cfg.solver.armijo > 0.0 && cfg.solver.armijo < 0.5, "must lie in (0, 1/2)");
  }
  if (has("backtrack")) {
    cfg.solver.backtrack = as_real("backtrack", entries.at("backtrack").value);
    range("backtrack", cfg.solver.backtrack > 0.0 && cfg.solver.backtrack < 1.0, "must lie in (0, 1)");
  }
  if (has("init")) {
    const std::string m = entries.at("init").value;
    if (m == "vacuum") cfg.init = InitMode::Vacuum;
    else if (m == "random") cfg.init = InitMode::Random;
    else if (m == "vortex-ansatz") cfg.init = InitMode::VortexAnsatz;
    else throw ParseError(line_of("init"), "init", "expected vacuum, random or vortex-ansatz");
    range("init", !(cfg.init == InitMode::VortexAnsatz && cfg.degree == 0), "vortex-ansatz needs d != 0");
  }
  if (has("seed")) cfg.seed = as_u64("seed", entries.at("seed").value);
  cfg.solver.seed = cfg.seed;
  if (has("output")) {
    cfg.output = entries.at("output").value;
    range("output", !cfg.output.empty(), "must not be empty");
  }
  if (has("snapshot")) cfg.snapshot = entries.at("snapshot").value;
  if (cfg.study == Study::Report && cfg.snapshot.empty()) throw ParseError(0, "snapshot", "report study needs a snapshot");

  const double lo = 4.0 * h * (1 - 1e-12), hi = 0.25 * cfg.min_length() * (1 + 1e-12);
  if (has("radii")) {
    cfg.radii = real_list("radii");
    for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
      range("radii", cfg.radii[i] >= lo && cfg.radii[i] <= hi, "radii must lie in [4h, min(L)/4]");
      if (i > 0) range("radii", cfg.radii[i] > cfg.radii[i - 1], "radii must be strictly increasing");
    }
  }
  if (has("centers")) {
    for (const auto& item : detail::split(entries.at("centers").value, ',')) {
      const auto parts = detail::split(item, ':');
      range("centers", static_cast<int>(parts.size()) == cfg.n, "centers are written i:j or i:j:k");
      CenterSpec c{0, 0, 0};
      for (int a = 0; a < cfg.n; ++a) {
        const long long x = as_int("centers", parts[a]);
        range("centers", x >= 0 && x < cfg.sizes[a], "center coordinate outside the lattice");
        c[a] = static_cast<int>(x);
      }
      cfg.centers.push_back(c);
    }
  }
  if (has("eta0")) {
    cfg.eta0 = as_real("eta0", entries.at("eta0").value);
    range("eta0", cfg.eta0 > 0.0, "must be positive");
  }
  if (has("clearing_radius")) {
    cfg.clearing_radius = as_real("clearing_radius", entries.at("clearing_radius").value);
    range("clearing_radius", *cfg.clearing_radius >= 8.0 * h * (1 - 1e-12) && *cfg.clearing_radius <= hi,
          "must lie in [8h, min(L)/4]");
  }
  if (cfg.study == Study::Clearing && cfg.epsilon)
    range("epsilon", *cfg.epsilon < cfg.clearing_r(), "clearing probe needs epsilon < R");
  if (has("offline_distance")) {
    cfg.offline_distance = as_real("offline_distance", entries.at("offline_distance").value);
    range("offline_distance", cfg.offline_distance > 0.0, "must be positive");
  }
  if (has("threshold")) {
    cfg.threshold = as_real("threshold", entries.at("threshold").value);
    range("threshold", cfg.threshold > 0.0 && cfg.threshold < 1.0, "must lie in (0, 1)");
  }
  if (has("gaffney_samples")) {
    const long long x = as_int("gaffney_samples", entries.at("gaffney_samples").value);
    range("gaffney_samples", x >= 1 && x <= 10000, "must lie in [1, 10000]");
    cfg.gaffney_samples = static_cast<std::size_t>(x);
  }
  if (has("normalization")) {
    const std::string m = entries.at("normalization").value;
    if (m == "log-eps") cfg.normalization = MeasureNormalization::LogEps;
    else if (m == "pi-log-eps") cfg.normalization = MeasureNormalization::PiLogEps;
    else throw ParseError(line_of("normalization"), "normalization", "expected log-eps or pi-log-eps");
  }
  return cfg;
}

}  // namespace glb::harness

#endif  // GLB_HARNESS_CONFIG_HPP
