#ifndef GLB_OBSERVABLES_HPP
#define GLB_OBSERVABLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "glb/ball.hpp"
#include "glb/bundle.hpp"
#include "glb/current.hpp"
#include "glb/energy.hpp"
#include "glb/error.hpp"

namespace glb {

// ---------------------------------------------------------------------------
// Topological charge and vortex sets

/// Sum of J h^2 over the xy-plaquettes of each z-slice (one entry for n = 2).
/// Equals pi times the bundle degree for every state.
inline std::vector<double> slice_charges(const FormField& big_j) {
  const Lattice& lat = big_j.lattice();
  const int slices = lat.dim() == 3 ? lat.size(2) : 1;
  const std::size_t per_slice = static_cast<std::size_t>(lat.size(0)) * lat.size(1);
  const double h2 = lat.spacing() * lat.spacing();
  std::vector<double> charges(slices);
  for (int z = 0; z < slices; ++z) {
    const std::size_t offset = per_slice * z;  // xy is orientation 0
    charges[z] = h2 * deterministic_sum(per_slice, [&](std::size_t i) { return big_j[offset + i]; });
  }
  return charges;
}

struct VortexReport {
  double threshold = 0.5;
  std::vector<std::size_t> cells;
  std::size_t components = 0;
  std::vector<int> component_of;  // per entry of `cells`
  std::vector<double> slice_charge;

  bool empty() const { return cells.empty(); }
};

/// Vertices with |u| < threshold, grouped by periodic 2n-neighbor adjacency.
inline VortexReport vortex_set(const State& state, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw RangeError("vortex threshold must lie in (0, 1)");
  const Lattice& lat = state.lattice();
  const std::size_t nv = lat.vertex_count();
  VortexReport rep;
  rep.threshold = threshold;
  std::vector<int> label(nv, -2);
  for (std::size_t v = 0; v < nv; ++v)
    if (std::abs(state.u[v]) < threshold) {
      label[v] = -1;
      rep.cells.push_back(v);
    }
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t v : rep.cells) {
    if (label[v] != -1) continue;
    label[v] = next;
    stack.push_back(v);
    while (!stack.empty()) {
      const std::size_t w = stack.back();
      stack.pop_back();
      for (int axis = 0; axis < lat.dim(); ++axis)
        for (int step : {-1, +1}) {
          const std::size_t x = lat.neighbor(w, axis, step);
          if (label[x] == -1) {
            label[x] = next;
            stack.push_back(x);
          }
        }
    }
    ++next;
  }
  rep.components = static_cast<std::size_t>(next);
  rep.component_of.reserve(rep.cells.size());
  for (std::size_t v : rep.cells) rep.component_of.push_back(label[v]);
  rep.slice_charge = slice_charges(jacobian(state).J);
  return rep;
}

/// Vertex of minimal |u| in every z-slice (one entry for n = 2).
inline std::vector<std::size_t> vortex_line_vertices(const State& state) {
  const Lattice& lat = state.lattice();
  const int slices = lat.dim() == 3 ? lat.size(2) : 1;
  const std::size_t per_slice = static_cast<std::size_t>(lat.size(0)) * lat.size(1);
  std::vector<std::size_t> out;
  for (int z = 0; z < slices; ++z) {
    std::size_t best = per_slice * z;
    for (std::size_t i = 0; i < per_slice; ++i) {
      const std::size_t v = per_slice * z + i;
      if (std::abs(state.u[v]) < std::abs(state.u[best])) best = v;
    }
    out.push_back(best);
  }
  return out;
}

/// Fraction of the |J| mass carried by plaquettes within `radius` of a vertex
/// of the vortex set.
inline double jacobian_concentration(const State& state, const VortexReport& vortices, double radius) {
  const Lattice& lat = state.lattice();
  const FormField big_j = jacobian(state).J;
  std::vector<Point> cores;
  for (std::size_t v : vortices.cells) cores.push_back(lat.position(v));
  double near = 0.0, total = 0.0;
  for (std::size_t p = 0; p < big_j.size(); ++p) {
    const double m = std::abs(big_j[p]);
    total += m;
    if (m == 0.0) continue;
    const Point b = lat.barycenter(2, p);
    for (const Point& c : cores)
      if (lat.distance(b, c) < radius) {
        near += m;
        break;
      }
  }
  return total > 0.0 ? near / total : 0.0;
}

// ---------------------------------------------------------------------------
// Radial energy profiles

/// Energy carried by each cell on its natural support, times h^n:
/// potential on vertices, kinetic on edges, curvature on plaquettes.
struct CellEnergies {
  std::array<std::vector<double>, 4> by_degree;
};

inline CellEnergies cell_energies(const State& state, double eps) {
  detail::check_epsilon(eps);
  const Lattice& lat = state.lattice();
  const double w = lat.cell_weight();
  CellEnergies ce;
  ce.by_degree[0].resize(lat.vertex_count());
  for (std::size_t v = 0; v < lat.vertex_count(); ++v)
    ce.by_degree[0][v] = w * detail::potential_density(state.u[v], eps);
  const auto du = covariant_derivative(state);
  ce.by_degree[1].resize(du.size());
  for (std::size_t e = 0; e < du.size(); ++e) ce.by_degree[1][e] = 0.5 * w * std::norm(du[e]);
  const FormField f = curvature(state);
  ce.by_degree[2].resize(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) ce.by_degree[2][p] = 0.5 * w * f[p] * f[p];
  return ce;
}

/// Ball energy summed cell by cell, independent of any profile bookkeeping.
inline double ball_energy(const CellEnergies& ce, const BallIndex& ball) {
  double total = 0.0;
  for (int k = 0; k < ball.degree_count(); ++k) {
    const auto& values = ce.by_degree[k];
    if (values.empty()) continue;
    const auto cells = ball.interior(k);
    total += deterministic_sum(cells.size(), [&](std::size_t i) { return values[cells[i]]; });
  }
  return total;
}

struct RadialProfile {
  std::size_t center = 0;
  double log_eps = 0.0;
  std::vector<double> radii;
  std::vector<double> energy;     // E(x0, rho)
  std::vector<double> shell_sum;  // sum of h-bucket contributions in [rho_{i-1}, rho_i)
  std::vector<double> x_term;     // X(x0, rho)
  std::vector<double> rescaled;   // f(rho) = rho^{2-n} E
  std::vector<double> potential_fraction;
  std::vector<double> density;    // Theta(rho) = f / |log eps|
  double violation = 0.0;
};

namespace detail {

inline void check_profile_radii(const Lattice& lat, const std::vector<double>& radii) {
  if (radii.empty()) throw RangeError("radial profile needs at least one radius");
  const double lo = 4.0 * lat.spacing() * (1.0 - 1e-12);
  const double hi = 0.25 * lat.min_length() * (1.0 + 1e-12);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < lo || radii[i] > hi)
      throw RangeError("profile radius " + std::to_string(radii[i]) + " outside [4h, min(L)/4]");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw RangeError("profile radii must be strictly increasing");
  }
}

inline double monotonicity_violation(const std::vector<double>& f) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i)
    if (f[i + 1] > 0.0) worst = std::max(worst, std::max(0.0, f[i] - f[i + 1]) / f[i + 1]);
  return worst;
}

/// E(rho_i) by walking the h-width shells of a ball of radius max(radii) and
/// accumulating contributions in shell order, so E is nondecreasing exactly.
inline void accumulate_profile(const CellEnergies& ce, const BallIndex& ball, RadialProfile& prof) {
  const std::size_t count = prof.radii.size();
  prof.energy.assign(count, 0.0);
  prof.shell_sum.assign(count, 0.0);
  double running = 0.0;
  std::size_t next = 0;
  for (std::size_t s = 0; s < ball.shell_count() && next < count; ++s) {
    // Cells of this shell, merged across degrees and ordered by distance.
    struct Item {
      double dist, value;
    };
    std::vector<Item> items;
    for (int k = 0; k < ball.degree_count(); ++k) {
      const auto& values = ce.by_degree[k];
      if (values.empty()) continue;
      const auto cells = ball.shell(k, s);
      const auto dists = ball.shell_distances(k, s);
      for (std::size_t i = 0; i < cells.size(); ++i) items.push_back({dists[i], values[cells[i]]});
    }
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.dist < b.dist; });
    for (const Item& it : items) {
      while (next < count && it.dist >= prof.radii[next]) {
        prof.energy[next] = running;
        ++next;
      }
      if (next >= count) break;
      running += it.value;
      prof.shell_sum[next] += it.value;
    }
  }
  while (next < count) prof.energy[next++] = running;
}

}  // namespace detail

/// Profile of a nonnegative vertex mass field m (already multiplied by h^n),
/// used for synthetic densities.
inline RadialProfile mass_profile(const FormField& vertex_mass, std::size_t center, const std::vector<double>& radii) {
  const Lattice& lat = vertex_mass.lattice();
  detail::check_profile_radii(lat, radii);
  const BallIndex ball(lat, center, radii.back());
  CellEnergies ce;
  ce.by_degree[0].assign(vertex_mass.values().begin(), vertex_mass.values().end());
  RadialProfile prof;
  prof.center = center;
  prof.radii = radii;
  detail::accumulate_profile(ce, ball, prof);
  const int n = lat.dim();
  for (std::size_t i = 0; i < radii.size(); ++i) prof.rescaled.push_back(std::pow(radii[i], 2 - n) * prof.energy[i]);
  prof.violation = detail::monotonicity_violation(prof.rescaled);
  return prof;
}

/// E, X, f = rho^{2-n} E, p_eps and Theta = f / |log eps| at each radius.
///
/// X uses first-order surface quadrature: each edge crossing the sphere of
/// radius rho contributes |nu_axis| h^{n-1} times |Du_e|^2 plus the mean of
/// F^2 over its two plaquettes in every plane containing the edge, with nu
/// evaluated at the edge midpoint.
inline RadialProfile radial_profile(const State& state, double eps, std::size_t center,
                                    const std::vector<double>& radii) {
  detail::check_epsilon(eps);
  const Lattice& lat = state.lattice();
  detail::check_profile_radii(lat, radii);
  const int n = lat.dim();
  const double h = lat.spacing();
  const double w = lat.cell_weight();
  const CellEnergies ce = cell_energies(state, eps);
  const BallIndex ball(lat, center, radii.back());

  RadialProfile prof;
  prof.center = center;
  prof.radii = radii;
  prof.log_eps = std::abs(std::log(eps));
  detail::accumulate_profile(ce, ball, prof);

  const auto du = covariant_derivative(state);
  const FormField f = curvature(state);
  const Point origin = lat.position(center);
  const auto& vdist = ball.interior_distances(0);
  const auto vcells = ball.interior(0);
  const auto dist_of = [&](std::size_t v) { return lat.distance(origin, lat.position(v)); };

  for (double rho : radii) {
    double pot = 0.0;
    for (std::size_t i = 0; i < vcells.size(); ++i)
      if (vdist[i] < rho) {
        const double s = 1.0 - std::norm(state.u[vcells[i]]);
        pot += s * s * w;
      }
    double surface = 0.0;
    for (std::size_t i = 0; i < vcells.size(); ++i) {
      if (!(vdist[i] < rho)) continue;
      const std::size_t v = vcells[i];
      for (int axis = 0; axis < n; ++axis)
        for (int step : {-1, +1}) {
          const std::size_t nb = lat.neighbor(v, axis, step);
          if (dist_of(nb) < rho) continue;
          const std::size_t tail = step > 0 ? v : nb;
          const std::size_t e = lat.cell(axis, tail);
          const Point rel = lat.displacement(origin, lat.barycenter(1, e));
          const double r = std::sqrt(rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]);
          const double nu = r > 0.0 ? std::abs(rel[axis]) / r : 0.0;
          double term = std::norm(du[e]);
          for (int j = 0; j < n; ++j) {
            if (j == axis) continue;
            const std::size_t o = lat.orientation_index(2, (1u << axis) | (1u << j));
            const double f1 = f[lat.cell(o, tail)];
            const double f2 = f[lat.cell(o, lat.neighbor(tail, j, -1))];
            term += 0.5 * (f1 * f1 + f2 * f2);
          }
          surface += nu * std::pow(h, n - 1) * term;
        }
    }
    const double scale = std::pow(rho, 2 - n);
    prof.x_term.push_back(surface + pot / (2.0 * eps * eps * rho));
    prof.potential_fraction.push_back(scale * pot / (eps * eps));
  }
  for (std::size_t i = 0; i < radii.size(); ++i) {
    prof.rescaled.push_back(std::pow(radii[i], 2 - n) * prof.energy[i]);
    prof.density.push_back(prof.log_eps > 0.0 ? prof.rescaled.back() / prof.log_eps : 0.0);
  }
  prof.violation = detail::monotonicity_violation(prof.rescaled);
  return prof;
}

// ---------------------------------------------------------------------------
// Clearing-out

struct ClearingEntry {
  std::size_t center = 0;
  double radius = 0.0;
  double ball_energy = 0.0;
  double bound = 0.0;       // eta0 R^{n-2} log(R / eps)
  double mass_ratio = 0.0;  // mu(B_R) / R^{n-2} with mu = e / |log eps|
  double min_u = 0.0;       // over B_{3R/4}
  bool hypothesis = false;
  bool pass = false;
};

struct ClearingReport {
  double eta0 = 0.0;
  std::vector<ClearingEntry> entries;

  bool all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const ClearingEntry& e) { return e.pass; });
  }
  std::size_t hypothesis_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const ClearingEntry& e) { return e.hypothesis; }));
  }
};

/// For each center: does E(x0, R) <= eta0 R^{n-2} log(R/eps) hold, and if so
/// is |u| >= 1/2 on B_{3R/4}(x0)? A center failing the hypothesis passes
/// vacuously.
inline ClearingReport clearing_probe(const State& state, double eps, const std::vector<std::size_t>& centers, double radius,
                                     double eta0) {
  detail::check_epsilon(eps);
  const Lattice& lat = state.lattice();
  const double h = lat.spacing();
  if (radius < 8.0 * h * (1.0 - 1e-12) || radius > 0.25 * lat.min_length() * (1.0 + 1e-12))
    throw RangeError("clearing radius outside [8h, min(L)/4]");
  if (!(eps < radius)) throw RangeError("clearing probe needs eps < R");
  const double log_eps = std::abs(std::log(eps));
  const int n = lat.dim();
  const CellEnergies ce = cell_energies(state, eps);
  ClearingReport rep;
  rep.eta0 = eta0;
  for (std::size_t c : centers) {
    const BallIndex ball(lat, c, radius);
    ClearingEntry e;
    e.center = c;
    e.radius = radius;
    e.ball_energy = ball_energy(ce, ball);
    e.bound = eta0 * std::pow(radius, n - 2) * std::log(radius / eps);
    e.mass_ratio = log_eps > 0.0 ? e.ball_energy / (log_eps * std::pow(radius, n - 2)) : 0.0;
    e.min_u = 1.0;
    bool first = true;
    const auto vcells = ball.interior(0);
    const auto vd = ball.interior_distances(0);
    for (std::size_t i = 0; i < vcells.size(); ++i)
      if (vd[i] < 0.75 * radius) {
        const double m = std::abs(state.u[vcells[i]]);
        e.min_u = first ? m : std::min(e.min_u, m);
        first = false;
      }
    e.hypothesis = e.ball_energy <= e.bound;
    e.pass = !e.hypothesis || e.min_u >= 0.5;
    rep.entries.push_back(e);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Curvature decay

struct DecayFit {
  bool degenerate = false;
  double exponent = 0.0;
  double intercept = 0.0;
  double fit_rms = 0.0;
};

namespace detail {
inline DecayFit log_log_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  DecayFit fit;
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  fit.exponent = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.exponent * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fit.intercept - fit.exponent * xs[i];
    ss += r * r;
  }
  fit.fit_rms = std::sqrt(ss / n);
  return fit;
}
}  // namespace detail

/// Slope q of log int_{B_r} |F|^2 against log r.
inline DecayFit curvature_decay_probe(const FormField& f, std::size_t center, const std::vector<double>& radii) {
  const Lattice& lat = f.lattice();
  if (f.degree() != 2) throw DegreeError("curvature_decay_probe expects a 2-form");
  detail::check_profile_radii(lat, radii);
  if (max_abs(f) == 0.0) return DecayFit{true, 0.0, 0.0, 0.0};
  const BallIndex ball(lat, center, radii.back());
  const auto cells = ball.interior(2);
  const auto dists = ball.interior_distances(2);
  std::vector<double> xs, ys;
  for (double r : radii) {
    double mass = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (dists[i] < r) mass += f[cells[i]] * f[cells[i]];
    mass *= lat.cell_weight();
    if (mass <= 0.0) return DecayFit{true, 0.0, 0.0, 0.0};
    xs.push_back(std::log(r));
    ys.push_back(std::log(mass));
  }
  if (xs.size() < 2) return DecayFit{true, 0.0, 0.0, 0.0};
  return detail::log_log_fit(xs, ys);
}

inline DecayFit curvature_decay_probe(const State& state, std::size_t center, const std::vector<double>& radii) {
  return curvature_decay_probe(curvature(state), center, radii);
}

// ---------------------------------------------------------------------------
// |D_A u|^2 = |d|u||^2 + |j|^2 / |u|^2 away from zeros

struct DecompositionCheck {
  bool degenerate = false;
  double max_mismatch = 0.0;
  std::size_t checked_edges = 0;
};

inline constexpr double kModulusMask = 1e-8;

inline DecompositionCheck decomposition_check(const State& state) {
  const Lattice& lat = state.lattice();
  const std::size_t nv = lat.vertex_count();
  const double inv_h = 1.0 / lat.spacing();
  const auto du = covariant_derivative(state);
  const FormField j = prejacobian(state);
  DecompositionCheck out;
  for (int axis = 0; axis < lat.dim(); ++axis)
    for (std::size_t v = 0; v < nv; ++v) {
      const std::size_t head = lat.neighbor(v, axis, +1);
      const double mt = std::abs(state.u[v]);
      const double mh = std::abs(state.u[head]);
      if (!(mt > kModulusMask && mh > kModulusMask)) continue;
      const std::size_t e = lat.cell(axis, v);
      const double dmod = (mh - mt) * inv_h;
      const double rhs = dmod * dmod + j[e] * j[e] / (mt * mt);
      out.max_mismatch = std::max(out.max_mismatch, std::abs(std::norm(du[e]) - rhs));
      ++out.checked_edges;
    }
  out.degenerate = out.checked_edges == 0;
  return out;
}

struct RefinementStudy {
  std::vector<double> spacings;
  std::vector<double> mismatches;
  double slope = 0.0;  // convergence order: mismatch ~ h^slope
};

/// Runs decomposition_check on states of one smooth family sampled at each
/// lattice and fits the convergence order of the mismatch.
inline RefinementStudy decomposition_refinement(const std::vector<Lattice>& lattices,
                                                const std::function<State(const Lattice&)>& family) {
  RefinementStudy study;
  std::vector<double> xs, ys;
  for (const Lattice& lat : lattices) {
    const DecompositionCheck c = decomposition_check(family(lat));
    if (c.degenerate || c.max_mismatch <= 0.0) throw RangeError("refinement study hit a degenerate level");
    study.spacings.push_back(lat.spacing());
    study.mismatches.push_back(c.max_mismatch);
    xs.push_back(std::log2(lat.spacing()));
    ys.push_back(std::log2(c.max_mismatch));
  }
  study.slope = detail::log_log_fit(xs, ys).exponent;
  return study;
}

// ---------------------------------------------------------------------------
// Rescaled energy measure

enum class MeasureNormalization { LogEps, PiLogEps };

/// mu = e / |log eps| per vertex (or e / (pi |log eps|)); total mass is
/// mu summed times h^n.
inline FormField measure_field(const State& state, double eps,
                               MeasureNormalization norm = MeasureNormalization::LogEps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("measure_field needs eps in (0, 1)");
  FormField mu = energy_density(state, eps);
  double denom = std::abs(std::log(eps));
  if (norm == MeasureNormalization::PiLogEps) denom *= std::numbers::pi;
  mu *= 1.0 / denom;
  return mu;
}

}  // namespace glb

#endif  // GLB_OBSERVABLES_HPP
