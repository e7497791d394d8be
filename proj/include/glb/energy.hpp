#ifndef GLB_ENERGY_HPP
#define GLB_ENERGY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "glb/bundle.hpp"
#include "glb/current.hpp"
#include "glb/error.hpp"
#include "glb/forms.hpp"
#include "glb/reduce.hpp"

namespace glb {

struct EnergyBreakdown {
  double kinetic = 0.0;    // 1/2 sum_e |Du|^2 h^n
  double curvature = 0.0;  // 1/2 sum_p |F|^2 h^n
  double potential = 0.0;  // sum_v (1 - |u|^2)^2 / (4 eps^2) h^n
  double total = 0.0;
  double epsilon = 0.0;
};

/// L2-gradient of the total energy: the partial derivatives divided by the
/// cell weight h^n, so that it coincides with the Euler-Lagrange residuals.
struct FieldGradient {
  std::vector<Complex> u;
  FormField a;

  /// Largest absolute real component (Re u, Im u, or A).
  double max_abs() const {
    double m = glb::max_abs(a);
    for (const Complex& z : u) m = std::max({m, std::abs(z.real()), std::abs(z.imag())});
    return m;
  }
};

namespace detail {

inline void check_epsilon(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterError("epsilon must be positive, got " + std::to_string(eps));
}

inline double potential_density(const Complex& z, double eps) {
  const double s = 1.0 - std::norm(z);
  return s * s / (4.0 * eps * eps);
}

struct Evaluation {
  EnergyBreakdown energy;
  std::vector<Complex> grad_u;
  FormField grad_a;
};

/// Energy and (optionally) its L2-gradient in one pass.
inline Evaluation evaluate(const State& state, double eps, bool with_gradient) {
  check_epsilon(eps);
  const Lattice& lat = state.lattice();
  const std::size_t nv = lat.vertex_count();
  const int n = lat.dim();
  const double w = lat.cell_weight();
  const double inv_h = 1.0 / lat.spacing();
  const double inv_eps2 = 1.0 / (eps * eps);

  const auto t = edge_transport(state);
  std::vector<Complex> du(lat.cell_count(1));
  for (int axis = 0; axis < n; ++axis)
    for (std::size_t v = 0; v < nv; ++v) {
      const std::size_t e = lat.cell(axis, v);
      du[e] = (t[e] * state.u[lat.neighbor(v, axis, +1)] - state.u[v]) * inv_h;
    }
  const FormField f = curvature(state);

  Evaluation out{{}, {}, FormField(lat, 1)};
  out.energy.epsilon = eps;
  out.energy.kinetic = 0.5 * w * deterministic_sum(du.size(), [&](std::size_t e) { return std::norm(du[e]); });
  out.energy.curvature = 0.5 * w * deterministic_sum(f.size(), [&](std::size_t p) { return f[p] * f[p]; });
  out.energy.potential =
      w * deterministic_sum(nv, [&](std::size_t v) { return potential_density(state.u[v], eps); });
  out.energy.total = out.energy.kinetic + out.energy.curvature + out.energy.potential;
  if (!with_gradient) return out;

  out.grad_u.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    Complex g = inv_eps2 * (std::norm(state.u[v]) - 1.0) * state.u[v];
    for (int axis = 0; axis < n; ++axis) {
      const std::size_t fwd = lat.cell(axis, v);
      const std::size_t bwd = lat.cell(axis, lat.neighbor(v, axis, -1));
      g += (std::conj(t[bwd]) * du[bwd] - du[fwd]) * inv_h;
    }
    out.grad_u[v] = g;
  }
  out.grad_a = codiff(f);
  for (int axis = 0; axis < n; ++axis)
    for (std::size_t v = 0; v < nv; ++v) {
      const std::size_t e = lat.cell(axis, v);
      out.grad_a[e] -= std::imag(std::conj(state.u[v]) * t[e] * state.u[lat.neighbor(v, axis, +1)]) * inv_h;
    }
  return out;
}

}  // namespace detail

inline EnergyBreakdown energy(const State& state, double eps) { return detail::evaluate(state, eps, false).energy; }

/// Per-vertex density: edge terms split 1/2 per endpoint, plaquette terms 1/4
/// per corner, potential on its vertex. Sums (times h^n) to the total energy.
inline FormField energy_density(const State& state, double eps) {
  detail::check_epsilon(eps);
  const Lattice& lat = state.lattice();
  const std::size_t nv = lat.vertex_count();
  const auto du = covariant_derivative(state);
  const FormField f = curvature(state);
  FormField density(lat, 0);
  for (std::size_t v = 0; v < nv; ++v) density[v] = detail::potential_density(state.u[v], eps);
  for (int axis = 0; axis < lat.dim(); ++axis)
    for (std::size_t v = 0; v < nv; ++v) {
      const double half = 0.25 * std::norm(du[lat.cell(axis, v)]);
      density[v] += half;
      density[lat.neighbor(v, axis, +1)] += half;
    }
  for (std::size_t o = 0; o < lat.orientation_count(2); ++o) {
    const Axes mask = lat.orientation(2, o);
    int a = -1, b = -1;
    for (int i = 0; i < lat.dim(); ++i)
      if (mask & (1u << i)) (a < 0 ? a : b) = i;
    for (std::size_t v = 0; v < nv; ++v) {
      const double fv = f[lat.cell(o, v)];
      const double quarter = 0.125 * fv * fv;
      const std::size_t va = lat.neighbor(v, a, +1);
      density[v] += quarter;
      density[va] += quarter;
      density[lat.neighbor(v, b, +1)] += quarter;
      density[lat.neighbor(va, b, +1)] += quarter;
    }
  }
  return density;
}

inline FieldGradient gradient(const State& state, double eps) {
  auto ev = detail::evaluate(state, eps, true);
  return {std::move(ev.grad_u), std::move(ev.grad_a)};
}

struct Residuals {
  std::vector<Complex> el_u;  // D*Du + eps^-2 (|u|^2 - 1) u
  FormField el_a;             // codiff F - j
  FormField london_form;      // -Delta F + F - 2J, equal to d(el_a)
  std::vector<double> modulus_eq;
  double el_u_l2 = 0.0, el_u_inf = 0.0;
  double el_a_l2 = 0.0, el_a_inf = 0.0;
  double london = 0.0;
  double modulus = 0.0;
};

namespace detail {
inline double complex_l2(const std::vector<Complex>& z, double w) {
  return std::sqrt(w * deterministic_sum(z.size(), [&](std::size_t i) { return std::norm(z[i]); }));
}
inline double complex_inf(const std::vector<Complex>& z) {
  double m = 0.0;
  for (const Complex& x : z) m = std::max(m, std::abs(x));
  return m;
}
inline double vector_l2(const std::vector<double>& x, double w) {
  return std::sqrt(w * deterministic_sum(x.size(), [&](std::size_t i) { return x[i] * x[i]; }));
}

/// Vertex-averaged |Du|^2: each direction contributes the mean of its two edges.
inline std::vector<double> vertex_du_squared(const State& state, const std::vector<Complex>& du) {
  const Lattice& lat = state.lattice();
  const std::size_t nv = lat.vertex_count();
  std::vector<double> out(nv, 0.0);
  for (int axis = 0; axis < lat.dim(); ++axis)
    for (std::size_t v = 0; v < nv; ++v)
      out[v] += 0.5 * (std::norm(du[lat.cell(axis, v)]) + std::norm(du[lat.cell(axis, lat.neighbor(v, axis, -1))]));
  return out;
}
}  // namespace detail

/// -Delta F + F - 2J assembled term by term. Agrees with d(el_a) up to
/// rounding because dF = 0.
inline FormField london_form_direct(const State& state) {
  const FormField f = curvature(state);
  FormField out = hodge_laplacian(f);
  out += f;
  FormField twice_j = jacobian(state).J;
  twice_j *= 2.0;
  out -= twice_j;
  return out;
}

inline Residuals residuals(const State& state, double eps) {
  auto ev = detail::evaluate(state, eps, true);
  const Lattice& lat = state.lattice();
  const double w = lat.cell_weight();
  const std::size_t nv = lat.vertex_count();

  Residuals r{std::move(ev.grad_u), std::move(ev.grad_a), FormField(lat, 2), {}};
  r.london_form = exterior_d(r.el_a);

  FormField mod2(lat, 0);
  for (std::size_t v = 0; v < nv; ++v) mod2[v] = std::norm(state.u[v]);
  const FormField lap = codiff(exterior_d(mod2));
  const auto du2 = detail::vertex_du_squared(state, covariant_derivative(state));
  r.modulus_eq.resize(nv);
  for (std::size_t v = 0; v < nv; ++v)
    r.modulus_eq[v] = 0.5 * lap[v] + (mod2[v] - 1.0) * mod2[v] / (eps * eps) + du2[v];

  r.el_u_l2 = detail::complex_l2(r.el_u, w);
  r.el_u_inf = detail::complex_inf(r.el_u);
  r.el_a_l2 = l2_norm(r.el_a);
  r.el_a_inf = max_abs(r.el_a);
  r.london = l2_norm(r.london_form);
  r.modulus = detail::vector_l2(r.modulus_eq, w);
  return r;
}

/// Symmetric n x n tensor per vertex, stored row-major in a 3 x 3 block.
using Tensor3 = std::array<double, 9>;

struct StressField {
  int dim = 0;
  double log_eps = 0.0;  // |log eps|
  std::vector<Tensor3> tensor;
  std::vector<std::array<double, 3>> divergence;
  // Per-vertex ingredients of the trace identity.
  std::vector<double> density;          // e_eps
  std::vector<double> potential_twice;  // (1 - |u|^2)^2 / (2 eps^2)
  std::vector<double> curvature_sq;     // |F|^2

  double trace(std::size_t v) const {
    double t = 0.0;
    for (int i = 0; i < dim; ++i) t += tensor[v][3 * i + i];
    return t;
  }
  double divergence_l2(double weight) const {
    return std::sqrt(weight * deterministic_sum(divergence.size(), [&](std::size_t v) {
                       double s = 0.0;
                       for (int i = 0; i < dim; ++i) s += divergence[v][i] * divergence[v][i];
                       return s;
                     }));
  }
};

/// T = (e g - Du* Du - F* F) / |log eps| at vertices, with its centered-difference
/// divergence. Du at a vertex uses the forward edge and the backward edge
/// transported to the vertex; F uses the mean of the four incident plaquettes
/// per plane, and |F|^2 the mean of their squares, so that the trace identity
///   |log eps| tr T = (n - 2) e + (1 - |u|^2)^2 / (2 eps^2) - |F|^2
/// holds vertex by vertex.
inline StressField stress_tensor(const State& state, double eps) {
  detail::check_epsilon(eps);
  const double log_eps = std::abs(std::log(eps));
  if (!(log_eps > 0.0)) throw ParameterError("stress tensor needs |log eps| > 0");
  const Lattice& lat = state.lattice();
  const int n = lat.dim();
  const std::size_t nv = lat.vertex_count();
  const double h = lat.spacing();
  const auto t = detail::edge_transport(state);
  const auto du = covariant_derivative(state);
  const FormField f = curvature(state);

  StressField s;
  s.dim = n;
  s.log_eps = log_eps;
  s.tensor.assign(nv, Tensor3{});
  s.divergence.assign(nv, {0.0, 0.0, 0.0});
  s.density.assign(nv, 0.0);
  s.potential_twice.assign(nv, 0.0);
  s.curvature_sq.assign(nv, 0.0);

  for (std::size_t v = 0; v < nv; ++v) {
    std::array<Complex, 3> fwd{}, bwd{};
    for (int i = 0; i < n; ++i) {
      const std::size_t ef = lat.cell(i, v);
      const std::size_t eb = lat.cell(i, lat.neighbor(v, i, -1));
      fwd[i] = du[ef];
      bwd[i] = std::conj(t[eb]) * du[eb];
    }
    Tensor3 kin{};
    for (int i = 0; i < n; ++i) {
      kin[3 * i + i] = 0.5 * (std::norm(fwd[i]) + std::norm(bwd[i]));
      for (int j = i + 1; j < n; ++j) {
        const double c = 0.25 * std::real(std::conj(fwd[i] + bwd[i]) * (fwd[j] + bwd[j]));
        kin[3 * i + j] = kin[3 * j + i] = c;
      }
    }
    // Plaquette means: fbar antisymmetric, fsq = mean of squares per plane.
    std::array<double, 9> fbar{}, fsq{};
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const std::size_t o = lat.orientation_index(2, (1u << i) | (1u << j));
        const std::size_t vi = lat.neighbor(v, i, -1);
        const std::array<std::size_t, 4> base{v, vi, lat.neighbor(v, j, -1), lat.neighbor(vi, j, -1)};
        double sum = 0.0, sq = 0.0;
        for (std::size_t b : base) {
          const double x = f[lat.cell(o, b)];
          sum += x;
          sq += x * x;
        }
        fbar[3 * i + j] = 0.25 * sum;
        fbar[3 * j + i] = -0.25 * sum;
        fsq[3 * i + j] = fsq[3 * j + i] = 0.25 * sq;
      }
    double f2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) f2 += fsq[3 * i + j];
    double kin_trace = 0.0;
    for (int i = 0; i < n; ++i) kin_trace += kin[3 * i + i];

    const double pot = detail::potential_density(state.u[v], eps);
    const double e = 0.5 * kin_trace + 0.5 * f2 + pot;
    s.density[v] = e;
    s.potential_twice[v] = 2.0 * pot;
    s.curvature_sq[v] = f2;

    Tensor3& tv = s.tensor[v];
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double ff = 0.0;
        if (i == j) {
          for (int k = 0; k < n; ++k)
            if (k != i) ff += fsq[3 * i + k];
        } else {
          for (int k = 0; k < n; ++k)
            if (k != i && k != j) ff += fbar[3 * i + k] * fbar[3 * j + k];
        }
        const double value = ((i == j ? e : 0.0) - kin[3 * i + j] - ff) / log_eps;
        tv[3 * i + j] = tv[3 * j + i] = value;
      }
  }

  const double inv_2h = 0.5 / h;
  for (std::size_t v = 0; v < nv; ++v)
    for (int j = 0; j < n; ++j) {
      double d = 0.0;
      for (int i = 0; i < n; ++i)
        d += (s.tensor[lat.neighbor(v, i, +1)][3 * i + j] - s.tensor[lat.neighbor(v, i, -1)][3 * i + j]) * inv_2h;
      s.divergence[v][j] = d;
    }
  return s;
}

}  // namespace glb

#endif  // GLB_ENERGY_HPP
