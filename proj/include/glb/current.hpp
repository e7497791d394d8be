#ifndef GLB_CURRENT_HPP
#define GLB_CURRENT_HPP

#include <complex>
#include <vector>

#include "glb/bundle.hpp"

namespace glb {

/// Gauge-invariant pre-Jacobian j = <D_A u, i u> discretized as
/// j_e = Im(conj(u_tail) exp(-i phi_e) u_head) / h.
///
/// The tail-anchored form gives |j_e| <= |u_tail| |(Du)_e| exactly; with the
/// holonomy convention of bundle.hpp a positive degree yields a positive
/// total Jacobian.
inline FormField prejacobian(const State& state) {
  const Lattice& lat = state.lattice();
  const std::size_t nv = lat.vertex_count();
  const double inv_h = 1.0 / lat.spacing();
  const auto t = detail::edge_transport(state);
  FormField j(lat, 1);
  for (int axis = 0; axis < lat.dim(); ++axis)
    for (std::size_t v = 0; v < nv; ++v) {
      const std::size_t e = lat.cell(axis, v);
      j[e] = std::imag(std::conj(state.u[v]) * t[e] * state.u[lat.neighbor(v, axis, +1)]) * inv_h;
    }
  return j;
}

struct JacobianField {
  FormField j;  // pre-Jacobian, 1-form
  FormField J;  // Jacobian, 2-form
};

/// J = d(j)/2 + F/2.
inline JacobianField jacobian(const State& state) {
  FormField j = prejacobian(state);
  FormField big_j = exterior_d(j);
  big_j += curvature(state);
  big_j *= 0.5;
  return {std::move(j), std::move(big_j)};
}

}  // namespace glb

#endif  // GLB_CURRENT_HPP
