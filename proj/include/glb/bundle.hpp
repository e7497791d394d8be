#ifndef GLB_BUNDLE_HPP
#define GLB_BUNDLE_HPP

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "glb/error.hpp"
#include "glb/forms.hpp"
#include "glb/poisson.hpp"

namespace glb {

using Complex = std::complex<double>;

// Holonomy convention, used by every operation in the library: the total
// phase carried by an edge is phi_e = a0_e + h A_e (reference angle plus the
// dynamical gauge field), and u_head is transported back to the tail by the
// factor exp(-i phi_e). With this sign (Du)_e -> du - i(a0 + A)u, matching
// D_A = D_0 - iA.

/// Fixed reference connection of a line bundle of degree d, twisted in the
/// (x, y) plane: uniform curvature 2 pi d / (L_x L_y) on xy-plaquettes.
class RefConnection {
 public:
  static std::shared_ptr<const RefConnection> make(const Lattice& lat, int degree) {
    auto ref = std::shared_ptr<RefConnection>(new RefConnection(lat, degree));
    ref->audit();
    return ref;
  }

  const Lattice& lattice() const { return lattice_; }
  int degree() const { return degree_; }
  /// Reference edge angles a0 (radians), canonical 1-cell order.
  std::span<const double> edge_angles() const { return angles_; }
  /// exp(-i a0_e) per edge.
  std::span<const Complex> transport() const { return transport_; }
  const FormField& curvature() const { return curvature_; }
  /// Flux per xy-plaquette, F0 h^2 = 2 pi d / (N_x N_y).
  double plaquette_flux() const { return flux_; }

 private:
  RefConnection(const Lattice& lat, int degree)
      : lattice_(lat), degree_(degree), curvature_(lat, 2) {
    const std::size_t nv = lat.vertex_count();
    const int nx = lat.size(0);
    const int ny = lat.size(1);
    flux_ = 2.0 * std::numbers::pi * degree / (static_cast<double>(nx) * ny);
    angles_.assign(lat.cell_count(1), 0.0);
    // Landau gauge: y-edges carry flux * i; the x-edges closing the x-period
    // carry the correction -flux * N_x * j.
    for (std::size_t v = 0; v < nv; ++v) {
      const auto c = lat.coords(v);
      angles_[lat.cell(1, v)] = flux_ * c[0];
      if (c[0] == nx - 1) angles_[lat.cell(0, v)] = -flux_ * nx * c[1];
    }
    transport_.resize(angles_.size());
    for (std::size_t e = 0; e < angles_.size(); ++e) transport_[e] = std::polar(1.0, -angles_[e]);
    const double f0 = flux_ / (lat.spacing() * lat.spacing());
    std::fill_n(curvature_.values().begin(), nv, f0);  // xy is orientation 0 of degree 2
  }

  // Every xy-plaquette's oriented angle sum must equal the flux modulo 2 pi;
  // other plaquettes must be flat.
  void audit() const {
    const Lattice& lat = lattice_;
    const std::size_t nv = lat.vertex_count();
    for (std::size_t o = 0; o < lat.orientation_count(2); ++o) {
      const Axes mask = lat.orientation(2, o);
      int a = -1, b = -1;
      for (int i = 0; i < lat.dim(); ++i)
        if (mask & (1u << i)) (a < 0 ? a : b) = i;
      const double expected = (o == 0) ? flux_ : 0.0;
      for (std::size_t v = 0; v < nv; ++v) {
        const double sum = angles_[lat.cell(a, v)] + angles_[lat.cell(b, lat.neighbor(v, a, +1))] -
                           angles_[lat.cell(a, lat.neighbor(v, b, +1))] - angles_[lat.cell(b, v)];
        if (std::abs(std::remainder(sum - expected, 2.0 * std::numbers::pi)) > 1e-9)
          throw ConfigurationError("reference connection failed its plaquette audit");
      }
    }
  }

  Lattice lattice_;
  int degree_;
  double flux_ = 0.0;
  std::vector<double> angles_;
  std::vector<Complex> transport_;
  FormField curvature_;
};

inline std::shared_ptr<const RefConnection> make_reference_connection(const Lattice& lat, int degree) {
  return RefConnection::make(lat, degree);
}

/// Section u on vertices plus dynamical gauge 1-form A on edges.
struct State {
  std::shared_ptr<const RefConnection> ref;
  std::vector<Complex> u;
  FormField a;

  State(std::shared_ptr<const RefConnection> connection, std::vector<Complex> section, FormField gauge)
      : ref(std::move(connection)), u(std::move(section)), a(std::move(gauge)) {
    if (!ref) throw ConfigurationError("state needs a reference connection");
    if (!(a.lattice() == ref->lattice()) || a.degree() != 1)
      throw ConfigurationError("gauge field must be a 1-form on the bundle's lattice");
    if (u.size() != lattice().vertex_count()) throw ConfigurationError("section size does not match vertex count");
  }
  /// u = 1 everywhere, A = 0.
  explicit State(std::shared_ptr<const RefConnection> connection)
      : State(connection, std::vector<Complex>(connection->lattice().vertex_count(), Complex(1.0, 0.0)),
              FormField(connection->lattice(), 1)) {}

  const Lattice& lattice() const { return ref->lattice(); }
  int degree() const { return ref->degree(); }

  bool all_finite() const {
    for (const Complex& z : u)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return a.all_finite();
  }
};

/// Real angle per vertex; only exp(i chi) matters.
using GaugeTransform = std::vector<double>;

inline State gauge_transform(const State& state, std::span<const double> chi) {
  const Lattice& lat = state.lattice();
  if (chi.size() != lat.vertex_count()) throw ConfigurationError("gauge transform must have one angle per vertex");
  State out = state;
  const std::size_t nv = lat.vertex_count();
  for (std::size_t v = 0; v < nv; ++v) out.u[v] *= std::polar(1.0, chi[v]);
  const double inv_h = 1.0 / lat.spacing();
  for (int axis = 0; axis < lat.dim(); ++axis)
    for (std::size_t v = 0; v < nv; ++v)
      out.a[lat.cell(axis, v)] += (chi[lat.neighbor(v, axis, +1)] - chi[v]) * inv_h;
  return out;
}

namespace detail {
/// exp(-i phi_e) for every edge.
inline std::vector<Complex> edge_transport(const State& state) {
  const double h = state.lattice().spacing();
  const auto t0 = state.ref->transport();
  std::vector<Complex> t(t0.size());
  for (std::size_t e = 0; e < t.size(); ++e) t[e] = t0[e] * std::polar(1.0, -h * state.a[e]);
  return t;
}
}  // namespace detail

/// (Du)_e = (exp(-i phi_e) u_head - u_tail) / h, canonical 1-cell order.
inline std::vector<Complex> covariant_derivative(const State& state) {
  const Lattice& lat = state.lattice();
  const std::size_t nv = lat.vertex_count();
  const double inv_h = 1.0 / lat.spacing();
  const auto t = detail::edge_transport(state);
  std::vector<Complex> du(lat.cell_count(1));
  for (int axis = 0; axis < lat.dim(); ++axis)
    for (std::size_t v = 0; v < nv; ++v) {
      const std::size_t e = lat.cell(axis, v);
      du[e] = (t[e] * state.u[lat.neighbor(v, axis, +1)] - state.u[v]) * inv_h;
    }
  return du;
}

/// F = F0 + dA.
inline FormField curvature(const State& state) {
  FormField f = exterior_d(state.a);
  f += state.ref->curvature();
  return f;
}

struct CoulombReport {
  double harmonic_max = 0.0;    // ||zeta||_inf of the returned A
  double codiff_max = 0.0;      // ||codiff A||_inf after fixing
  double poisson_residual = 0.0;
};

struct CoulombResult {
  State state;
  CoulombReport report;
};

/// Removes the exact part of A by the gauge transform chi = -(exact potential).
inline CoulombResult coulomb_fix(const State& state, const PoissonOptions& options = {}) {
  const PoissonResult solve = solve_poisson(codiff(state.a), options);
  std::vector<double> chi(solve.solution.values().begin(), solve.solution.values().end());
  for (double& x : chi) x = -x;
  State fixed = gauge_transform(state, chi);
  CoulombReport report;
  report.harmonic_max = max_abs(harmonic_coefficients(fixed.a));
  report.codiff_max = max_abs(codiff(fixed.a));
  report.poisson_residual = solve.relative_residual;
  return {std::move(fixed), report};
}

}  // namespace glb

#endif  // GLB_BUNDLE_HPP
