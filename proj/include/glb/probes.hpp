#ifndef GLB_PROBES_HPP
#define GLB_PROBES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "glb/ball.hpp"
#include "glb/forms.hpp"
#include "glb/poisson.hpp"
#include "glb/random.hpp"

namespace glb {

/// Summary of a sampled inequality constant.
struct RatioStatistics {
  double max = 0.0;
  double median = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
  std::vector<double> ratios;
};

/// L2 norm of a form restricted to the interior cells of a ball.
inline double ball_norm(const FormField& form, const BallIndex& ball) {
  const auto cells = ball.interior(form.degree());
  const double sum = deterministic_sum(cells.size(), [&](std::size_t i) {
    const double x = form[cells[i]];
    return x * x;
  });
  return std::sqrt(form.lattice().cell_weight() * sum);
}

namespace detail {

inline RatioStatistics summarize(std::vector<double> ratios, std::size_t skipped) {
  RatioStatistics s;
  s.skipped = skipped;
  s.used = ratios.size();
  s.ratios = ratios;
  if (ratios.empty()) return s;
  std::sort(ratios.begin(), ratios.end());
  s.max = ratios.back();
  const std::size_t m = ratios.size() / 2;
  s.median = ratios.size() % 2 ? ratios[m] : 0.5 * (ratios[m - 1] + ratios[m]);
  return s;
}

/// Smooth random k-form supported strictly inside the ball: a C^3 radial bump
/// of radius (radius - 2h) times a few random low-frequency modes measured in
/// units of the radius, so samples at different radii are rescaled copies.
inline FormField smooth_bump_sample(const Lattice& lat, int k, const BallIndex& ball, Rng& rng) {
  const double support = ball.radius() - 2.0 * lat.spacing();
  const Point origin = lat.position(ball.center());
  constexpr int kModes = 3;
  const std::size_t components = lat.orientation_count(k);
  struct Mode {
    double amplitude, phase;
    std::array<double, 3> wave;
  };
  std::vector<Mode> modes(components * kModes);
  for (Mode& m : modes) {
    m.amplitude = rng.normal();
    m.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (double& w : m.wave) w = rng.uniform(-2.0, 2.0);
  }
  FormField out(lat, k);
  if (support <= 0.0) return out;
  for (std::size_t c : ball.interior(k)) {
    const Point rel = lat.displacement(origin, lat.barycenter(k, c));
    const double s2 = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]) / (support * support);
    if (s2 >= 1.0) continue;
    const double bump = std::pow(1.0 - s2, 4);
    const std::size_t o = lat.cell_orientation(c);
    double g = 0.0;
    for (int j = 0; j < kModes; ++j) {
      const Mode& m = modes[o * kModes + j];
      const double arg = std::numbers::pi *
                         (m.wave[0] * rel[0] + m.wave[1] * rel[1] + m.wave[2] * rel[2]) / ball.radius();
      g += m.amplitude * std::cos(arg + m.phase);
    }
    out[c] = bump * g;
  }
  return out;
}

}  // namespace detail

/// Ratio ||omega||_{B} / (rho ||d omega||_{B}) for one candidate 1-form;
/// empty when d omega vanishes on the ball.
inline std::optional<double> gaffney_ratio(const FormField& omega, const BallIndex& ball) {
  const double denom = ball.radius() * ball_norm(exterior_d(omega), ball);
  if (!(denom > 0.0)) return std::nullopt;
  return ball_norm(omega, ball) / denom;
}

/// Samples co-closed 1-forms omega = codiff(psi), psi a 2-form bump compactly
/// supported in B_rho(center); omega then vanishes near the boundary (so its
/// normal component does) and codiff omega = 0 identically.
inline RatioStatistics gaffney_probe(const Lattice& lat, std::size_t center, double rho, std::size_t sample_count,
                                     const std::function<FormField(Rng&, const BallIndex&)>& sampler,
                                     std::uint64_t seed) {
  if (sample_count < 1) throw RangeError("gaffney_probe needs at least one sample");
  const BallIndex ball(lat, center, rho);
  Rng rng(seed);
  std::vector<double> ratios;
  std::size_t skipped = 0;
  for (std::size_t s = 0; s < sample_count; ++s) {
    const FormField omega = sampler(rng, ball);
    if (auto r = gaffney_ratio(omega, ball)) {
      ratios.push_back(*r);
    } else {
      ++skipped;
    }
  }
  return detail::summarize(std::move(ratios), skipped);
}

inline RatioStatistics gaffney_probe(const Lattice& lat, double rho, std::size_t sample_count, std::uint64_t seed) {
  if (lat.dim() < 2) throw DegreeError("gaffney_probe needs 2-forms");
  auto sampler = [&lat](Rng& rng, const BallIndex& ball) {
    return codiff(detail::smooth_bump_sample(lat, 2, ball, rng));
  };
  return gaffney_probe(lat, 0, rho, sample_count, sampler, seed);
}

/// Samples k-forms vanishing outside B_radius and records
/// ||omega|| / (radius (||d omega|| + ||codiff omega||)).
inline RatioStatistics poincare_probe(const Lattice& lat, int k, double radius, std::size_t sample_count,
                                      std::uint64_t seed) {
  lat.check_degree(k);
  if (sample_count < 1) throw RangeError("poincare_probe needs at least one sample");
  const BallIndex ball(lat, 0, radius);
  Rng rng(seed);
  std::vector<double> ratios;
  std::size_t skipped = 0;
  for (std::size_t s = 0; s < sample_count; ++s) {
    const FormField omega = detail::smooth_bump_sample(lat, k, ball, rng);
    double denom = 0.0;
    if (k < lat.dim()) denom += ball_norm(exterior_d(omega), ball);
    if (k > 0) denom += ball_norm(codiff(omega), ball);
    denom *= radius;
    if (!(denom > 0.0)) {
      ++skipped;
      continue;
    }
    ratios.push_back(ball_norm(omega, ball) / denom);
  }
  return detail::summarize(std::move(ratios), skipped);
}

/// Zero-harmonic-part solution of -Delta tau = strength (delta_src - H(delta_src))
/// for a unit point source on one k-cell (delta_src = 1/h^n there).
inline FormField green_solution(const Lattice& lat, int k, std::size_t source_cell, double strength = 1.0,
                                const PoissonOptions& options = {}) {
  lat.check_degree(k);
  if (source_cell >= lat.cell_count(k)) throw RangeError("Green source cell out of range");
  FormField rhs(lat, k);
  rhs[source_cell] = strength / lat.cell_weight();
  return solve_poisson(rhs, options).solution;
}

struct GreenDecay {
  double slope = 0.0;
  double intercept = 0.0;
  double fit_rms = 0.0;
  std::size_t points = 0;
  double antipode_value = 0.0;
};

/// Least-squares slope of log|tau| against log dist over dist in [4h, L/4]
/// for the k-form Green solution of a unit source.
inline GreenDecay green_decay_probe(const Lattice& lat, int k, std::size_t source_cell) {
  if (lat.dim() != 3) throw DegreeError("green_decay_probe requires n = 3");
  const FormField tau = green_solution(lat, k, source_cell);
  const Point source = lat.barycenter(k, source_cell);
  const double h = lat.spacing();
  const double lo = 4.0 * h;
  const double hi = 0.25 * lat.min_length();

  const std::size_t orient = lat.cell_orientation(source_cell);
  const std::size_t nv = lat.vertex_count();
  std::vector<double> xs, ys;
  for (std::size_t v = 0; v < nv; ++v) {
    const std::size_t c = lat.cell(orient, v);
    const double dist = lat.distance(source, lat.barycenter(k, c));
    if (dist < lo || dist > hi || tau[c] == 0.0) continue;
    xs.push_back(std::log(dist));
    ys.push_back(std::log(std::abs(tau[c])));
  }
  GreenDecay out;
  out.points = xs.size();
  const auto sv = lat.coords(lat.cell_vertex(source_cell));
  const std::size_t anti = lat.vertex_at({sv[0] + lat.size(0) / 2, sv[1] + lat.size(1) / 2, sv[2] + lat.size(2) / 2});
  out.antipode_value = tau[lat.cell(orient, anti)];
  if (xs.size() < 2) return out;
  const double n = static_cast<double>(xs.size());
  const double mx = deterministic_sum(xs) / n;
  const double my = deterministic_sum(ys) / n;
  const double sxy = deterministic_sum(xs.size(), [&](std::size_t i) { return (xs[i] - mx) * (ys[i] - my); });
  const double sxx = deterministic_sum(xs.size(), [&](std::size_t i) { return (xs[i] - mx) * (xs[i] - mx); });
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.fit_rms = std::sqrt(deterministic_sum(xs.size(), [&](std::size_t i) {
                            const double r = ys[i] - (out.intercept + out.slope * xs[i]);
                            return r * r;
                          }) / n);
  return out;
}

}  // namespace glb

#endif  // GLB_PROBES_HPP
