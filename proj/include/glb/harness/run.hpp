#ifndef GLB_HARNESS_RUN_HPP
#define GLB_HARNESS_RUN_HPP

// Requires linking OpenSSL::Crypto (SHA-256 digests in the manifest).

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "glb/harness/config.hpp"
#include "glb/observables.hpp"
#include "glb/probes.hpp"
#include "glb/snapshot.hpp"
#include "glb/solver.hpp"

namespace glb::harness {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kCsvSchemaVersion = 1;

/// Raised when a study fails; names the study and stage.
class StudyError : public Error {
 public:
  StudyError(const std::string& study, const std::string& stage, const std::string& what)
      : Error("study " + study + ", stage " + stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct Artifact {
  std::string file;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::map<std::string, std::string> config;
  std::vector<Artifact> artifacts;
  std::map<std::string, std::string> versions;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::map<std::string, bool> checks;
  std::string status = "ok";
  std::string error;
  std::filesystem::path directory;

  bool all_pass() const {
    if (status != "ok") return false;
    for (const auto& [k, v] : checks)
      if (!v) return false;
    return true;
  }
  const Artifact* find(const std::string& file) const {
    for (const auto& a : artifacts)
      if (a.file == file) return &a;
    return nullptr;
  }
};

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string file_sha256(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return sha256_hex(ss.str());
}

/// Fixed-column CSV with %.17g reals.
class Csv {
 public:
  explicit Csv(std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ += (i ? "," : "") + columns_[i];
    out_ += "\n";
  }
  template <class... T>
  void row(const T&... cells) {
    static_assert(sizeof...(T) > 0);
    if (sizeof...(T) != columns_.size()) throw Error("CSV row width mismatch");
    std::size_t i = 0;
    ((out_ += (i++ ? "," : "") + cell(cells)), ...);
    out_ += "\n";
  }
  const std::string& text() const { return out_; }

 private:
  static std::string cell(double x) { return detail::fmt(x); }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I x) {
    return std::to_string(x);
  }
  std::vector<std::string> columns_;
  std::string out_;
};

namespace detail {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void text(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    {
      std::ofstream os(path, std::ios::binary | std::ios::trunc);
      if (!os) throw Error("cannot write " + path.string());
      os << content;
      if (!os) throw Error("failed writing " + path.string());
    }
    record(name);
  }
  void snapshot(const std::string& name, const State& s, double eps) {
    write_snapshot((dir_ / name).string(), s, eps);
    record(name);
  }
  void remove_all() {
    std::error_code ec;
    for (const auto& a : artifacts_) std::filesystem::remove(dir_ / a.file, ec);
    artifacts_.clear();
  }
  const std::vector<Artifact>& artifacts() const { return artifacts_; }

 private:
  void record(const std::string& name) {
    const auto path = dir_ / name;
    artifacts_.push_back({name, file_sha256(path), std::filesystem::file_size(path)});
  }
  std::filesystem::path dir_;
  std::vector<Artifact> artifacts_;
};

struct StudyContext {
  const ExperimentConfig& cfg;
  ArtifactWriter& out;
  nlohmann::ordered_json summary;
  std::map<std::string, bool> checks;
  std::vector<std::pair<std::string, double>> stages;
  std::string stage = "setup";

  template <class F>
  auto timed(const std::string& name, F&& f) {
    stage = name;
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      stages.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } else {
      auto r = f();
      stages.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      return r;
    }
  }
  void check(const std::string& name, bool ok) { checks[name] = ok; }
};

inline std::size_t center_vertex(const Lattice& lat, const CenterSpec& c) { return lat.vertex_at({c[0], c[1], c[2]}); }

inline bool charges_quantized(const State& s, std::vector<double>* out = nullptr) {
  const auto q = slice_charges(jacobian(s).J);
  if (out) *out = q;
  for (double x : q)
    if (!(std::abs(x - std::numbers::pi * s.degree()) <= 1e-11)) return false;
  return true;
}

/// State for probe studies: the snapshot if given, otherwise a fresh solve.
inline std::pair<State, double> probe_state(StudyContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  if (!cfg.snapshot.empty()) {
    return ctx.timed("load", [&] {
      Snapshot snap = read_snapshot(cfg.snapshot);
      const Lattice want = cfg.lattice();
      if (!(snap.state.lattice() == want) || snap.state.degree() != cfg.degree)
        throw Error("snapshot lattice or degree does not match the config");
      return std::pair<State, double>(std::move(snap.state), cfg.epsilon.value_or(snap.epsilon));
    });
  }
  const double eps = *cfg.epsilon;
  auto res = ctx.timed("solve", [&] {
    const auto ref = make_reference_connection(cfg.lattice(), cfg.degree);
    return minimize(init_state(ref, cfg.init_mode(), eps, cfg.seed), eps, cfg.solver);
  });
  ctx.summary["solve"] = {{"converged", res.trace.converged},
                          {"iterations", res.trace.iterations},
                          {"grad_inf", res.trace.final_grad_inf},
                          {"energy", res.trace.final_energy.total}};
  ctx.check("converged", res.trace.converged);
  ctx.out.snapshot("state.glb1", res.state, eps);
  return {std::move(res.state), eps};
}

// ---------------------------------------------------------------------------

inline void study_minimize(StudyContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const double eps = *cfg.epsilon;
  const auto ref = ctx.timed("init", [&] { return make_reference_connection(cfg.lattice(), cfg.degree); });
  State init = ctx.timed("init", [&] { return init_state(ref, cfg.init_mode(), eps, cfg.seed); });
  const bool monitored = glb::detail::max_modulus(init) <= 1.0;
  auto res = ctx.timed("solve", [&] { return minimize(init, eps, cfg.solver); });
  Csv trace({"iteration", "energy", "grad_inf", "step", "max_u"});
  for (std::size_t i = 0; i < res.trace.entries.size(); ++i) {
    const auto& e = res.trace.entries[i];
    trace.row(i, e.energy, e.grad_inf, e.step, e.max_u);
  }
  ctx.timed("write", [&] {
    ctx.out.text("trace.csv", trace.text());
    ctx.out.snapshot("final.glb1", res.state, eps);
  });
  const auto& r = *res.trace.residuals;
  std::vector<double> q;
  const bool quantized = charges_quantized(res.state, &q);
  const auto e = res.trace.final_energy;
  ctx.summary["iterations"] = res.trace.iterations;
  ctx.summary["converged"] = res.trace.converged;
  ctx.summary["message"] = res.trace.message;
  ctx.summary["energy"] = {{"total", e.total}, {"kinetic", e.kinetic}, {"curvature", e.curvature}, {"potential", e.potential}};
  ctx.summary["grad_inf"] = res.trace.final_grad_inf;
  ctx.summary["residuals"] = {{"el_u_inf", r.el_u_inf}, {"el_a_inf", r.el_a_inf}, {"london", r.london}, {"modulus", r.modulus}};
  ctx.summary["vortex_components"] = vortex_set(res.state, cfg.threshold).components;
  ctx.summary["max_u"] = res.trace.max_u_seen;
  ctx.summary["slice_charges"] = q;
  ctx.check("converged", res.trace.converged);
  ctx.check("residuals_within_10tau",
            r.el_u_inf <= 10 * cfg.solver.tolerance && r.el_a_inf <= 10 * cfg.solver.tolerance);
  ctx.check("max_principle", !monitored || res.trace.max_u_seen <= 1.0 + kMaxPrincipleWarn);
  ctx.check("charge_quantized", quantized);
}

inline void study_sweep(StudyContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const auto ref = make_reference_connection(cfg.lattice(), cfg.degree);
  auto res = ctx.timed("continuation", [&] { return continuation(ref, cfg.epsilons, cfg.solver); });
  Csv csv({"epsilon", "energy_total", "energy_kinetic", "energy_curvature", "energy_potential", "lambda_ratio",
           "curvature_ratio", "max_u", "eps_max_du", "eps_max_f", "vortex_components"});
  bool converged = true, residual_ok = true, max_principle = true, quantized = true;
  double du_lo = INFINITY, du_hi = 0, f_lo = INFINITY, f_hi = 0;
  for (std::size_t i = 0; i < res.entries.size(); ++i) {
    const auto& e = res.entries[i];
    csv.row(e.epsilon, e.energy.total, e.energy.kinetic, e.energy.curvature, e.energy.potential, e.lambda_ratio,
            e.curvature_ratio, e.max_u, e.eps_max_du, e.eps_max_f, e.vortex_components);
    converged = converged && e.converged;
    residual_ok = residual_ok && e.residual_ok;
    max_principle = max_principle && e.max_u <= 1.0 + kMaxPrincipleWarn;
    quantized = quantized && charges_quantized(res.states[i]);
    du_lo = std::min(du_lo, e.eps_max_du), du_hi = std::max(du_hi, e.eps_max_du);
    f_lo = std::min(f_lo, e.eps_max_f), f_hi = std::max(f_hi, e.eps_max_f);
  }
  ctx.timed("write", [&] {
    ctx.out.text("sweep.csv", csv.text());
    for (std::size_t i = 0; i < res.states.size(); ++i)
      ctx.out.snapshot("state_" + std::to_string(i) + ".glb1", res.states[i], res.entries[i].epsilon);
  });
  const double slope_pi = res.fit.slope / std::numbers::pi;
  ctx.summary["fit"] = {{"slope", res.fit.slope}, {"slope_over_pi", slope_pi}, {"intercept", res.fit.intercept}, {"r2", res.fit.r2}};
  ctx.summary["lambda_spread"] = res.lambda_spread();
  ctx.summary["eps_max_du_spread"] = du_hi / du_lo;
  ctx.summary["eps_max_f_spread"] = f_hi / f_lo;
  ctx.check("converged", converged);
  ctx.check("residuals_within_10tau", residual_ok);
  ctx.check("charge_quantized", quantized);
  ctx.check("slope_over_pi_in_0.8_1.2", slope_pi >= 0.8 && slope_pi <= 1.2);
  ctx.check("fit_r2_above_0.99", res.fit.r2 > 0.99);
  ctx.check("lambda_spread_below_2", res.lambda_spread() < 2.0);
  ctx.check("curvature_ratio_decreasing", res.curvature_decreasing());
  ctx.check("max_principle", max_principle);
  ctx.check("apriori_bounds_spread_below_3", du_hi / du_lo < 3.0 && f_hi / f_lo < 3.0);
}

inline std::vector<std::size_t> line_centers(const State& s) {
  const auto line = vortex_line_vertices(s);
  if (line.size() == 1) return line;
  const std::size_t m = line.size();
  return {line[0], line[m / 3], line[(2 * m) / 3]};
}

inline void study_monotonicity(StudyContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  auto [state, eps] = probe_state(ctx);
  const Lattice& lat = state.lattice();
  std::vector<std::size_t> centers;
  if (cfg.centers.empty()) centers = line_centers(state);
  for (const auto& c : cfg.centers) centers.push_back(center_vertex(lat, c));
  const auto radii = cfg.profile_radii();
  Csv csv({"center_id", "rho", "E", "X", "f", "p_eps", "theta", "violation"});
  double worst = 0.0, theta_lo = INFINITY, theta_hi = 0.0;
  bool consistent = true;
  const CellEnergies ce = cell_energies(state, eps);
  ctx.timed("profile", [&] {
    for (std::size_t c : centers) {
      const RadialProfile p = radial_profile(state, eps, c, radii);
      worst = std::max(worst, p.violation);
      for (std::size_t i = 0; i < radii.size(); ++i) {
        csv.row(c, radii[i], p.energy[i], p.x_term[i], p.rescaled[i], p.potential_fraction[i], p.density[i], p.violation);
        theta_lo = std::min(theta_lo, p.density[i]);
        theta_hi = std::max(theta_hi, p.density[i]);
        const double tol = 1e-12 * std::max(1.0, p.energy[i]);
        if (i > 0 && std::abs(p.energy[i] - p.energy[i - 1] - p.shell_sum[i]) > tol) consistent = false;
        if (std::abs(p.energy[i] - ball_energy(ce, BallIndex(lat, c, radii[i]))) > tol) consistent = false;
      }
    }
  });
  ctx.timed("write", [&] { ctx.out.text("monotonicity.csv", csv.text()); });
  ctx.summary["centers"] = centers;
  ctx.summary["max_violation"] = worst;
  ctx.summary["theta_range"] = {theta_lo, theta_hi};
  ctx.check("monotonicity_violation_below_0.10", worst < 0.10);
  ctx.check("shell_sums_consistent", consistent);
  ctx.check("line_density_in_pi_4pi", theta_lo >= std::numbers::pi && theta_hi <= 4.0 * std::numbers::pi);
}

inline void study_clearing(StudyContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  auto [state, eps] = probe_state(ctx);
  const Lattice& lat = state.lattice();
  std::vector<std::size_t> centers;
  if (!cfg.centers.empty()) {
    for (const auto& c : cfg.centers) centers.push_back(center_vertex(lat, c));
  } else {
    // Coarse grid of vertices at least offline_distance from the vortex set.
    const auto vortices = vortex_set(state, cfg.threshold);
    std::vector<Point> cores;
    for (std::size_t v : vortices.cells) cores.push_back(lat.position(v));
    const int stride = std::max(1, lat.size(0) / 6);
    for (std::size_t v = 0; v < lat.vertex_count(); ++v) {
      const auto c = lat.coords(v);
      bool on_grid = true;
      for (int a = 0; a < lat.dim(); ++a) on_grid = on_grid && c[a] % stride == 0;
      if (!on_grid) continue;
      const Point p = lat.position(v);
      bool far = true;
      for (const Point& q : cores)
        if (lat.distance(p, q) < cfg.offline_d()) {
          far = false;
          break;
        }
      if (far) centers.push_back(v);
    }
  }
  const auto rep = ctx.timed("probe", [&] { return clearing_probe(state, eps, centers, cfg.clearing_r(), cfg.eta0); });
  Csv csv({"center_id", "R", "mass_ratio", "min_u", "hypothesis", "pass"});
  for (const auto& e : rep.entries) csv.row(e.center, e.radius, e.mass_ratio, e.min_u, e.hypothesis, e.pass);
  ctx.timed("write", [&] { ctx.out.text("clearing.csv", csv.text()); });
  double min_energy = INFINITY;
  for (const auto& e : rep.entries) min_energy = std::min(min_energy, e.ball_energy);
  ctx.summary["centers_probed"] = rep.entries.size();
  ctx.summary["hypothesis_centers"] = rep.hypothesis_count();
  ctx.summary["min_ball_energy"] = rep.entries.empty() ? 0.0 : min_energy;
  ctx.summary["hypothesis_bound"] =
      cfg.eta0 * std::pow(cfg.clearing_r(), lat.dim() - 2) * std::log(cfg.clearing_r() / eps);
  ctx.check("clearing_holds", rep.all_pass());
  ctx.check("at_least_3_hypothesis_centers", rep.hypothesis_count() >= 3);
}

inline void study_appendix(StudyContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const Lattice lat = cfg.lattice();
  const int n = lat.dim();
  const double h = lat.spacing();
  Csv csv({"probe", "rho_or_k", "statistic", "value"});
  Rng rng(cfg.seed);
  auto random_form = [&](int k) {
    FormField f(lat, k);
    for (double& x : f.values()) x = rng.uniform(-1.0, 1.0);
    return f;
  };

  ctx.timed("calculus", [&] {
    double dd_worst = 0.0, adj_worst = 0.0, dd_scaled = 0.0;
    for (int k = 0; k + 2 <= n; ++k) {
      const FormField f = random_form(k);
      const double dd = max_abs(exterior_d(exterior_d(f)));
      const double cc = max_abs(codiff(codiff(random_form(k + 2))));
      csv.row("dd", k, "max_abs", dd);
      csv.row("codiff_codiff", k + 2, "max_abs", cc);
      dd_worst = std::max({dd_worst, dd, cc});
      dd_scaled = std::max(dd_scaled, std::max(dd, cc) * h * h);
    }
    for (int k = 0; k < n; ++k) {
      const FormField a = random_form(k), b = random_form(k + 1);
      const double lhs = inner(exterior_d(a), b), rhs = inner(a, codiff(b));
      const double gap = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
      csv.row("adjoint", k, "relative_gap", gap);
      adj_worst = std::max(adj_worst, gap);
    }
    ctx.summary["dd_max_abs_times_h2"] = dd_scaled;
    ctx.check("dd_zero_1e-12", dd_scaled <= 1e-12);
    ctx.check("adjoint_1e-12", adj_worst <= 1e-12);
  });

  ctx.timed("hodge", [&] {
    const FormField a = random_form(1);
    const HodgeParts parts = hodge_decompose(a);
    const FormField ex = parts.exact_part(), co = parts.coexact_part(), ha = parts.harmonic_part();
    const double norm2 = inner(a, a);
    const double ortho =
        std::max({std::abs(inner(ex, co)), std::abs(inner(ex, ha)), std::abs(inner(co, ha))}) / norm2;
    FormField diff = parts.reconstruct();
    diff -= a;
    const double recon = l2_norm(diff) / std::sqrt(norm2);
    csv.row("hodge", 1, "orthogonality", ortho);
    csv.row("hodge", 1, "reconstruction", recon);
    ctx.check("hodge_1e-10", ortho <= 1e-10 && recon <= 1e-10);

    // Fourier eigenmode: -Delta cos(2 pi x / L) = lambda cos with the lattice symbol.
    FormField mode(lat, 0);
    const double lx = lat.length(0);
    for (std::size_t v = 0; v < lat.vertex_count(); ++v) mode[v] = std::cos(2 * std::numbers::pi * lat.position(v)[0] / lx);
    const double s = std::sin(std::numbers::pi * h / lx);
    const double lambda = 4.0 * s * s / (h * h);
    const PoissonResult sol = solve_poisson(mode);
    double err = 0.0;
    for (std::size_t v = 0; v < lat.vertex_count(); ++v) err = std::max(err, std::abs(sol.solution[v] - mode[v] / lambda));
    const double rel = err * lambda;
    csv.row("poisson_mode", 0, "relative_error", rel);
    ctx.check("poisson_mode_1e-11", rel <= 1e-11);
  });

  ctx.timed("gaffney", [&] {
    const double l = lat.min_length();
    const auto small = gaffney_probe(lat, l / 8, cfg.gaffney_samples, cfg.seed + 1);
    const auto large = gaffney_probe(lat, l / 4, cfg.gaffney_samples, cfg.seed + 1);
    for (const auto* st : {&small, &large}) {
      const double rho = st == &small ? l / 8 : l / 4;
      csv.row("gaffney", rho, "median", st->median);
      csv.row("gaffney", rho, "max", st->max);
      csv.row("gaffney", rho, "used", st->used);
    }
    const double ratio = small.median / large.median;
    csv.row("gaffney", 0, "median_ratio", ratio);
    ctx.check("gaffney_median_within_factor_2", small.used > 0 && large.used > 0 && ratio <= 2.0 && ratio >= 0.5);
    for (int k = 0; k <= n; ++k) {
      const auto p = poincare_probe(lat, k, l / 4, cfg.gaffney_samples, cfg.seed + 2 + k);
      csv.row("poincare", k, "max", p.max);
    }
  });

  if (n == 3) {
    ctx.timed("green", [&] {
      const GreenDecay g = green_decay_probe(lat, 0, 0);
      csv.row("green", 0, "slope", g.slope);
      csv.row("green", 0, "fit_rms", g.fit_rms);
      csv.row("green", 0, "antipode_value", g.antipode_value);
      ctx.summary["green_slope"] = g.slope;
      ctx.check("green_slope_in_-1.3_-0.7", g.slope >= -1.3 && g.slope <= -0.7);
    });
  }

  ctx.timed("trace", [&] {
    const auto ref = make_reference_connection(lat, cfg.degree);
    const State s = init_state(ref, InitMode::Random, cfg.epsilon.value_or(0.1), cfg.seed + 99);
    const double eps = cfg.epsilon.value_or(0.1);
    const StressField t = stress_tensor(s, eps);
    double worst = 0.0;
    for (std::size_t v = 0; v < lat.vertex_count(); ++v) {
      const double lhs = t.log_eps * t.trace(v) - (n - 2) * t.density[v];
      const double rhs = t.potential_twice[v] - t.curvature_sq[v];
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, t.density[v]));
    }
    csv.row("trace_identity", n, "max_relative", worst);
    ctx.check("trace_identity_1e-12", worst <= 1e-12);
  });

  ctx.timed("write", [&] { ctx.out.text("appendix.csv", csv.text()); });
}

inline void study_report(StudyContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  auto [state, eps] = probe_state(ctx);
  Csv csv({"quantity", "value"});
  const auto e = energy(state, eps);
  const auto r = residuals(state, eps);
  std::vector<double> q;
  const bool quantized = charges_quantized(state, &q);
  const auto vs = vortex_set(state, cfg.threshold);
  const FormField mu = measure_field(state, eps, cfg.normalization);
  const double mass = deterministic_sum(mu.values()) * state.lattice().cell_weight();
  const StressField t = stress_tensor(state, eps);
  const auto dec = decomposition_check(state);
  csv.row("epsilon", eps);
  csv.row("energy_total", e.total);
  csv.row("energy_kinetic", e.kinetic);
  csv.row("energy_curvature", e.curvature);
  csv.row("energy_potential", e.potential);
  csv.row("el_u_inf", r.el_u_inf);
  csv.row("el_a_inf", r.el_a_inf);
  csv.row("london_l2", r.london);
  csv.row("modulus_l2", r.modulus);
  csv.row("max_u", glb::detail::max_modulus(state));
  csv.row("vortex_components", static_cast<double>(vs.components));
  csv.row("measure_mass", mass);
  csv.row("stress_divergence_l2", t.divergence_l2(state.lattice().cell_weight()));
  csv.row("decomposition_mismatch", dec.max_mismatch);
  for (std::size_t z = 0; z < q.size(); ++z) csv.row("slice_charge_" + std::to_string(z), q[z]);
  ctx.timed("write", [&] { ctx.out.text("report.csv", csv.text()); });
  ctx.summary["energy_total"] = e.total;
  ctx.summary["vortex_components"] = vs.components;
  ctx.check("charge_quantized", quantized);
  ctx.check("state_finite", state.all_finite());
}

inline void write_json(const std::filesystem::path& p, const nlohmann::ordered_json& j) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + p.string());
  os << j.dump(2) << "\n";
}

inline nlohmann::ordered_json manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["status"] = m.status;
  if (!m.error.empty()) j["error"] = m.error;
  j["config"] = m.config;
  j["versions"] = m.versions;
  j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& a : m.artifacts) j["artifacts"].push_back({{"file", a.file}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  j["stage_seconds"] = nlohmann::ordered_json::array();
  for (const auto& [s, t] : m.stage_seconds) j["stage_seconds"].push_back({{"stage", s}, {"seconds", t}});
  j["checks"] = m.checks;
  return j;
}

}  // namespace detail

/// Runs one study, writing its CSV, summary.json, snapshots and manifest.json
/// into cfg.output. On failure every artifact is removed, a manifest
/// describing the failure is written, and StudyError is thrown.
inline RunManifest run_experiment(const ExperimentConfig& cfg) {
  const std::filesystem::path dir(cfg.output);
  std::filesystem::create_directories(dir);
  RunManifest m;
  m.directory = dir;
  m.config = cfg.echo();
  m.versions = {{"glb", kVersion}, {"csv_schema", std::to_string(kCsvSchemaVersion)}, {"compiler", __VERSION__}};

  detail::ArtifactWriter out(dir);
  detail::StudyContext ctx{cfg, out, nlohmann::ordered_json::object(), {}, {}};
  try {
    switch (cfg.study) {
      case Study::Minimize: detail::study_minimize(ctx); break;
      case Study::Sweep: detail::study_sweep(ctx); break;
      case Study::Monotonicity: detail::study_monotonicity(ctx); break;
      case Study::Clearing: detail::study_clearing(ctx); break;
      case Study::Appendix: detail::study_appendix(ctx); break;
      case Study::Report: detail::study_report(ctx); break;
    }
    ctx.stage = "summary";
    nlohmann::ordered_json summary;
    summary["study"] = to_string(cfg.study);
    summary["checks"] = ctx.checks;
    bool all = true;
    for (const auto& [k, v] : ctx.checks) all = all && v;
    summary["all_pass"] = all;
    summary["results"] = ctx.summary;
    std::ostringstream ss;
    ss << summary.dump(2) << "\n";
    out.text("summary.json", ss.str());
  } catch (const std::exception& e) {
    out.remove_all();
    m.status = "failed";
    m.error = "study " + to_string(cfg.study) + ", stage " + ctx.stage + ": " + e.what();
    m.stage_seconds = ctx.stages;
    m.checks = ctx.checks;
    detail::write_json(dir / "manifest.json", detail::manifest_json(m));
    throw StudyError(to_string(cfg.study), ctx.stage, e.what());
  }
  m.artifacts = out.artifacts();
  m.stage_seconds = ctx.stages;
  m.checks = ctx.checks;
  detail::write_json(dir / "manifest.json", detail::manifest_json(m));
  return m;
}

/// Every listed artifact exists and matches its digest.
inline bool verify_manifest(const RunManifest& m) {
  for (const auto& a : m.artifacts) {
    const auto p = m.directory / a.file;
    if (!std::filesystem::exists(p) || file_sha256(p) != a.sha256) return false;
  }
  return true;
}

}  // namespace glb::harness

#endif  // GLB_HARNESS_RUN_HPP
