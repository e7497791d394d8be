#ifndef GLB_SOLVER_HPP
#define GLB_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "glb/bundle.hpp"
#include "glb/energy.hpp"
#include "glb/error.hpp"
#include "glb/observables.hpp"
#include "glb/random.hpp"

namespace glb {

enum class Method { GradientFlow, NonlinearCG };
enum class InitMode { Vacuum, Random, VortexAnsatz };

inline std::string to_string(Method m) { return m == Method::GradientFlow ? "gradient-flow" : "nonlinear-cg"; }
inline std::string to_string(InitMode m) {
  switch (m) {
    case InitMode::Vacuum: return "vacuum";
    case InitMode::Random: return "random";
    default: return "vortex-ansatz";
  }
}

struct SolveOptions {
  Method method = Method::GradientFlow;
  double tolerance = 1e-8;  // on max |gradient|
  std::size_t max_iterations = 50000;
  double initial_step = 0.0;  // 0: h^2 / (4n)
  double armijo = 1e-4;
  double backtrack = 0.5;
  std::size_t max_backtracks = 60;
  // Energy comparisons allow this much relative roundoff.
  double energy_slack = 1e-13;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(tolerance > 0.0)) throw ParameterError("solver tolerance must be positive");
    if (max_iterations < 1) throw ParameterError("solver needs at least one iteration");
    if (initial_step < 0.0) throw ParameterError("initial step must be nonnegative");
    if (!(armijo > 0.0 && armijo < 0.5)) throw ParameterError("armijo constant must lie in (0, 1/2)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw ParameterError("backtrack factor must lie in (0, 1)");
  }
};

struct TraceEntry {
  double energy = 0.0;
  double grad_inf = 0.0;
  double step = 0.0;
  double max_u = 0.0;
};

inline constexpr double kMaxPrincipleWarn = 1e-3;
inline constexpr double kMaxPrincipleAbort = 1e-2;

struct SolveTrace {
  std::vector<TraceEntry> entries;  // entry 0 is the initial state
  std::optional<Residuals> residuals;
  EnergyBreakdown final_energy;
  double wall_seconds = 0.0;
  std::size_t iterations = 0;
  double final_grad_inf = 0.0;
  bool converged = false;
  bool max_principle_flag = false;  // some iterate exceeded 1 + 1e-3
  bool aborted = false;
  double max_u_seen = 0.0;
  std::string message;
};

struct MinimizeResult {
  State state;
  SolveTrace trace;
};

// ---------------------------------------------------------------------------
// Initialization

namespace detail {

/// Lowest-Landau-level theta function in the Landau gauge of RefConnection;
/// its |d| zeros sit at x = (k + 1/2) L_x / |d|, y = L_y / 2.
inline Complex landau_theta(double x, double y, int degree, double lx, double ly) {
  const int ad = std::abs(degree);
  const double b = 2.0 * std::numbers::pi * ad / (lx * ly);
  const double width = 8.0 / std::sqrt(b);
  const int m_lo = static_cast<int>(std::floor((x - width) * ad / lx)) - 1;
  const int m_hi = static_cast<int>(std::ceil((x + width) * ad / lx)) + 1;
  Complex psi(0.0, 0.0);
  for (int m = m_lo; m <= m_hi; ++m) {
    const double k = 2.0 * std::numbers::pi * m / ly;
    const double s = x - k / b;
    psi += std::polar(std::exp(-0.5 * b * s * s), k * y);
  }
  return degree > 0 ? psi : std::conj(psi);
}

inline std::vector<std::array<double, 2>> ansatz_zeros(int degree, double lx, double ly) {
  const int ad = std::abs(degree);
  std::vector<std::array<double, 2>> zeros;
  for (int k = 0; k < ad; ++k) zeros.push_back({(k + 0.5) * lx / ad, 0.5 * ly});
  return zeros;
}

}  // namespace detail

inline State init_state(const std::shared_ptr<const RefConnection>& ref, InitMode mode, double eps, std::uint64_t seed) {
  detail::check_epsilon(eps);
  const Lattice& lat = ref->lattice();
  const std::size_t nv = lat.vertex_count();
  State state(ref);
  switch (mode) {
    case InitMode::Vacuum:
      break;
    case InitMode::Random: {
      Rng rng(seed);
      for (std::size_t v = 0; v < nv; ++v) {
        const double r = std::sqrt(rng.uniform());
        state.u[v] = std::polar(r, 2.0 * std::numbers::pi * rng.uniform());
      }
      const double scale = 1.0 / lat.min_length();
      for (double& x : state.a.values()) x = rng.uniform(-scale, scale);
      break;
    }
    case InitMode::VortexAnsatz: {
      if (ref->degree() == 0) throw ModeError("vortex-ansatz needs a nonzero degree");
      const double lx = lat.length(0), ly = lat.length(1);
      const auto zeros = detail::ansatz_zeros(ref->degree(), lx, ly);
      for (std::size_t v = 0; v < nv; ++v) {
        const Point p = lat.position(v);
        double r = std::numeric_limits<double>::infinity();
        for (const auto& z : zeros) {
          double dx = std::remainder(p[0] - z[0], lx);
          double dy = std::remainder(p[1] - z[1], ly);
          r = std::min(r, std::hypot(dx, dy));
        }
        const Complex psi = detail::landau_theta(p[0], p[1], ref->degree(), lx, ly);
        const double m = std::abs(psi);
        state.u[v] = (r < 1e-12 || m < 1e-300) ? Complex(0.0, 0.0) : std::tanh(r / eps) * psi / m;
      }
      break;
    }
  }
  return state;
}

// ---------------------------------------------------------------------------
// Minimization

namespace detail {

inline double field_dot(const State& s, const std::vector<Complex>& gu, const FormField& ga,
                        const std::vector<Complex>& pu, const FormField& pa) {
  (void)s;
  const double su = deterministic_sum(gu.size(), [&](std::size_t i) { return std::real(std::conj(gu[i]) * pu[i]); });
  const double sa = deterministic_sum(ga.size(), [&](std::size_t i) { return ga[i] * pa[i]; });
  return s.lattice().cell_weight() * (su + sa);
}

inline State displaced(const State& s, double alpha, const std::vector<Complex>& pu, const FormField& pa) {
  State out = s;
  for (std::size_t i = 0; i < pu.size(); ++i) out.u[i] += alpha * pu[i];
  for (std::size_t i = 0; i < pa.size(); ++i) out.a[i] += alpha * pa[i];
  return out;
}

inline double max_modulus(const State& s) {
  double m = 0.0;
  for (const Complex& z : s.u) m = std::max(m, std::abs(z));
  return m;
}

inline double grad_inf(const Evaluation& ev) {
  double m = 0.0;
  for (const Complex& z : ev.grad_u) m = std::max(m, std::abs(z));
  return std::max(m, max_abs(ev.grad_a));
}

}  // namespace detail

/// Descends the energy until max |gradient| <= tolerance. Non-convergence is
/// reported in the trace, not thrown.
inline MinimizeResult minimize(const State& initial, double eps, const SolveOptions& options = {}) {
  detail::check_epsilon(eps);
  options.validate();
  const auto start = std::chrono::steady_clock::now();
  const Lattice& lat = initial.lattice();
  const double alpha0 =
      options.initial_step > 0.0 ? options.initial_step : lat.spacing() * lat.spacing() / (4.0 * lat.dim());

  State x = initial;
  auto ev = detail::evaluate(x, eps, true);
  SolveTrace trace;
  const double start_max_u = detail::max_modulus(x);
  const bool monitored = start_max_u <= 1.0;
  trace.max_u_seen = start_max_u;
  trace.entries.push_back({ev.energy.total, detail::grad_inf(ev), 0.0, start_max_u});

  std::vector<Complex> pu(ev.grad_u.size());
  FormField pa(lat, 1);
  std::vector<Complex> prev_gu;
  FormField prev_ga(lat, 1);
  double prev_gg = 0.0;
  double alpha = alpha0;
  bool have_prev = false;
  // Barzilai-Borwein memory
  State prev_x = x;

  std::size_t it = 0;
  while (true) {
    const double ginf = detail::grad_inf(ev);
    if (ginf <= options.tolerance) {
      trace.converged = true;
      break;
    }
    if (it >= options.max_iterations) {
      trace.message = "iteration budget exhausted";
      break;
    }
    const double gg = detail::field_dot(x, ev.grad_u, ev.grad_a, ev.grad_u, ev.grad_a);

    // Search direction.
    bool steepest = true;
    if (options.method == Method::NonlinearCG && have_prev && prev_gg > 0.0) {
      const double cross = detail::field_dot(x, ev.grad_u, ev.grad_a, prev_gu, prev_ga);
      const double beta = std::max(0.0, (gg - cross) / prev_gg);
      for (std::size_t i = 0; i < pu.size(); ++i) pu[i] = -ev.grad_u[i] + beta * pu[i];
      for (std::size_t i = 0; i < pa.size(); ++i) pa[i] = -ev.grad_a[i] + beta * pa[i];
      steepest = beta == 0.0;
    } else {
      for (std::size_t i = 0; i < pu.size(); ++i) pu[i] = -ev.grad_u[i];
      for (std::size_t i = 0; i < pa.size(); ++i) pa[i] = -ev.grad_a[i];
    }
    double slope = detail::field_dot(x, ev.grad_u, ev.grad_a, pu, pa);
    if (!(slope < 0.0)) {
      for (std::size_t i = 0; i < pu.size(); ++i) pu[i] = -ev.grad_u[i];
      for (std::size_t i = 0; i < pa.size(); ++i) pa[i] = -ev.grad_a[i];
      slope = -gg;
      steepest = true;
    }
    (void)steepest;

    const double e0 = ev.energy.total;
    const double slack = options.energy_slack * std::max(1.0, std::abs(e0));
    // Steps that push max|u| past 1 + 1e-3 from a start inside the unit disk are
    // rejected like energy increases.
    const auto acceptable = [&](double a, const State& c, double e) {
      return e <= e0 + options.armijo * a * slope + slack &&
             (!monitored || detail::max_modulus(c) <= 1.0 + kMaxPrincipleWarn);
    };

    // Trial step.
    double trial = alpha;
    if (options.method == Method::GradientFlow && have_prev) {
      // BB1 step from the last displacement and gradient change.
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < x.u.size(); ++i) {
        const Complex s = x.u[i] - prev_x.u[i];
        const Complex y = ev.grad_u[i] - prev_gu[i];
        ss += std::norm(s);
        sy += std::real(std::conj(s) * y);
      }
      for (std::size_t i = 0; i < x.a.size(); ++i) {
        const double s = x.a[i] - prev_x.a[i];
        const double y = ev.grad_a[i] - prev_ga[i];
        ss += s * s;
        sy += s * y;
      }
      trial = (sy > 0.0) ? ss / sy : 2.0 * alpha;
      trial = std::clamp(trial, 1e-3 * alpha0, 1e4 * alpha0);
    }

    std::optional<detail::Evaluation> accepted;
    State cand = detail::displaced(x, trial, pu, pa);
    auto ev_t = detail::evaluate(cand, eps, true);
    double step = trial;
    if (options.method == Method::NonlinearCG) {
      // Secant refinement of the trial along p.
      const double slope_t = detail::field_dot(cand, ev_t.grad_u, ev_t.grad_a, pu, pa);
      const double denom = slope_t - slope;
      if (denom > 0.0) {
        const double a_star = std::min(trial * (-slope) / denom, 16.0 * trial);
        if (a_star > 0.0 && std::abs(a_star - trial) > 1e-3 * trial) {
          State c2 = detail::displaced(x, a_star, pu, pa);
          auto ev2 = detail::evaluate(c2, eps, true);
          if (acceptable(a_star, c2, ev2.energy.total) &&
              (!acceptable(trial, cand, ev_t.energy.total) || ev2.energy.total <= ev_t.energy.total)) {
            cand = std::move(c2);
            ev_t = std::move(ev2);
            step = a_star;
          }
        }
      }
    }
    std::size_t backtracks = 0;
    while (!(std::isfinite(ev_t.energy.total) && acceptable(step, cand, ev_t.energy.total))) {
      if (++backtracks > options.max_backtracks) break;
      step *= options.backtrack;
      cand = detail::displaced(x, step, pu, pa);
      ev_t = detail::evaluate(cand, eps, true);
    }
    if (backtracks > options.max_backtracks) {
      if (options.method == Method::NonlinearCG && have_prev) {
        have_prev = false;  // restart along the steepest descent direction
        alpha = alpha0;
        continue;
      }
      trace.message = "line search failed";
      break;
    }

    prev_x = std::move(x);
    prev_gu = std::move(ev.grad_u);
    prev_ga = std::move(ev.grad_a);
    prev_gg = gg;
    have_prev = true;
    x = std::move(cand);
    ev = std::move(ev_t);
    alpha = options.method == Method::NonlinearCG ? std::max(step, 1e-3 * alpha0) : step;
    ++it;

    const double mu = detail::max_modulus(x);
    trace.max_u_seen = std::max(trace.max_u_seen, mu);
    trace.entries.push_back({ev.energy.total, detail::grad_inf(ev), step, mu});
    if (monitored && mu > 1.0 + kMaxPrincipleWarn) trace.max_principle_flag = true;
    if (monitored && mu > 1.0 + kMaxPrincipleAbort) {
      trace.aborted = true;
      trace.message = "max|u| = " + std::to_string(mu) + " exceeds 1 + 1e-2";
      break;
    }
  }
  trace.iterations = it;
  trace.final_grad_inf = detail::grad_inf(ev);
  trace.final_energy = ev.energy;
  trace.residuals = residuals(x, eps);
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(x), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Continuation in epsilon

struct ContinuationEntry {
  double epsilon = 0.0;
  EnergyBreakdown energy;
  double lambda_ratio = 0.0;     // total / |log eps|
  double curvature_ratio = 0.0;  // int |F|^2 / |log eps|
  double max_u = 0.0;
  double eps_max_du = 0.0;
  double eps_max_f = 0.0;
  std::size_t vortex_components = 0;
  std::size_t iterations = 0;
  double grad_inf = 0.0;
  bool converged = false;
  bool residual_ok = false;  // residual sup-norms <= 10 tau
  bool max_principle_flag = false;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) throw RangeError("linear fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += xs[i], my += ys[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    ss += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss / syy : 1.0;
  return fit;
}

struct ContinuationResult {
  std::vector<double> schedule;
  std::vector<ContinuationEntry> entries;
  std::vector<State> states;
  LinearFit fit;  // total energy against |log eps|

  double lambda_spread() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& e : entries) lo = std::min(lo, e.lambda_ratio), hi = std::max(hi, e.lambda_ratio);
    return hi / lo;
  }
  bool curvature_decreasing() const {
    for (std::size_t i = 0; i + 1 < entries.size(); ++i)
      if (!(entries[i + 1].curvature_ratio < entries[i].curvature_ratio)) return false;
    return true;
  }
};

inline void check_schedule(const Lattice& lat, const std::vector<double>& schedule) {
  if (schedule.empty()) throw ParameterError("epsilon schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    detail::check_epsilon(schedule[i]);
    if (schedule[i] < 2.0 * lat.spacing())
      throw RangeError("epsilon " + std::to_string(schedule[i]) + " below the resolution floor 2h");
    if (i > 0 && !(schedule[i] < schedule[i - 1])) throw ParameterError("epsilon schedule must be strictly decreasing");
  }
}

inline ContinuationEntry summarize_solve(const State& s, double eps, const SolveTrace& trace, double tolerance) {
  ContinuationEntry e;
  e.epsilon = eps;
  e.energy = energy(s, eps);
  const double log_eps = std::abs(std::log(eps));
  e.lambda_ratio = e.energy.total / log_eps;
  e.curvature_ratio = 2.0 * e.energy.curvature / log_eps;
  e.max_u = detail::max_modulus(s);
  double mdu = 0.0;
  for (const Complex& z : covariant_derivative(s)) mdu = std::max(mdu, std::abs(z));
  e.eps_max_du = eps * mdu;
  e.eps_max_f = eps * max_abs(curvature(s));
  e.vortex_components = vortex_set(s, 0.5).components;
  e.iterations = trace.iterations;
  e.grad_inf = trace.final_grad_inf;
  e.converged = trace.converged;
  if (trace.residuals)
    e.residual_ok = trace.residuals->el_u_inf <= 10.0 * tolerance && trace.residuals->el_a_inf <= 10.0 * tolerance;
  e.max_principle_flag = trace.max_principle_flag;
  return e;
}

/// Warm-started minimization along a decreasing epsilon schedule. The first
/// solve starts from the vortex ansatz (random for degree 0).
inline ContinuationResult continuation(const std::shared_ptr<const RefConnection>& ref, const std::vector<double>& schedule,
                                       const SolveOptions& options = {}) {
  const Lattice& lat = ref->lattice();
  check_schedule(lat, schedule);
  options.validate();
  ContinuationResult out;
  out.schedule = schedule;
  State s = init_state(ref, ref->degree() != 0 ? InitMode::VortexAnsatz : InitMode::Random, schedule.front(),
                       options.seed);
  std::vector<double> xs, ys;
  for (double eps : schedule) {
    auto res = minimize(s, eps, options);
    out.entries.push_back(summarize_solve(res.state, eps, res.trace, options.tolerance));
    s = res.state;
    out.states.push_back(std::move(res.state));
    xs.push_back(std::abs(std::log(eps)));
    ys.push_back(out.entries.back().energy.total);
  }
  if (xs.size() >= 2) out.fit = linear_fit(xs, ys);
  return out;
}

}  // namespace glb

#endif  // GLB_SOLVER_HPP
