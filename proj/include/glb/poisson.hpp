#ifndef GLB_POISSON_HPP
#define GLB_POISSON_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "glb/error.hpp"
#include "glb/forms.hpp"

namespace glb {

struct PoissonOptions {
  double relative_tolerance = 1e-11;
  /// 0 selects the default cap of 10 x (total cell count of the lattice).
  std::size_t max_iterations = 0;
};

struct PoissonResult {
  FormField solution;
  /// Harmonic part H(rhs) that was projected out before solving.
  FormField harmonic;
  std::size_t iterations = 0;
  /// ||(-Delta) solution - (rhs - H(rhs))|| / ||rhs||, recomputed from scratch.
  double relative_residual = 0.0;
};

namespace detail {

inline std::size_t total_cell_count(const Lattice& lat) {
  std::size_t total = 0;
  for (int k = 0; k <= lat.dim(); ++k) total += lat.cell_count(k);
  return total;
}

inline void axpy(double a, const FormField& x, FormField& y) {
  auto xs = x.values();
  auto ys = y.values();
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] += a * xs[i];
}

}  // namespace detail

/// Solves -Delta tau = rhs - H(rhs) for tau with zero harmonic part, where
/// -Delta = d codiff + codiff d. Conjugate gradients on the range of -Delta;
/// the true residual is re-checked on convergence and the iteration restarted
/// if recursion drift left it above tolerance.
inline PoissonResult solve_poisson(const FormField& rhs, const PoissonOptions& options = {}) {
  const Lattice& lat = rhs.lattice();
  FormField harmonic = harmonic_part(rhs);
  FormField b = rhs - harmonic;
  FormField x(lat, rhs.degree());

  const double rhs_norm = l2_norm(rhs);
  const double b_norm = l2_norm(b);
  PoissonResult result{x, harmonic, 0, 0.0};
  if (rhs_norm == 0.0 || b_norm <= 1e-15 * rhs_norm) return result;

  const std::size_t cap =
      options.max_iterations > 0 ? options.max_iterations : 10 * detail::total_cell_count(lat);
  const double target = options.relative_tolerance * rhs_norm;

  std::size_t iterations = 0;
  double true_residual = b_norm;
  for (int restart = 0; restart < 8 && iterations < cap; ++restart) {
    FormField r = b - hodge_laplacian(x);
    r -= harmonic_part(r);
    true_residual = l2_norm(r);
    if (true_residual <= target) break;
    FormField p = r;
    double rr = inner(r, r);
    while (iterations < cap) {
      FormField ap = hodge_laplacian(p);
      const double pap = inner(p, ap);
      if (!(pap > 0.0)) break;
      const double alpha = rr / pap;
      detail::axpy(alpha, p, x);
      detail::axpy(-alpha, ap, r);
      ++iterations;
      const double rr_new = inner(r, r);
      if (std::sqrt(rr_new) <= 0.5 * target) break;
      const double beta = rr_new / rr;
      rr = rr_new;
      auto ps = p.values();
      auto rs = r.values();
      for (std::size_t i = 0; i < ps.size(); ++i) ps[i] = rs[i] + beta * ps[i];
    }
  }
  x -= harmonic_part(x);
  FormField final_residual = b - hodge_laplacian(x);
  true_residual = l2_norm(final_residual);
  result.solution = std::move(x);
  result.iterations = iterations;
  result.relative_residual = true_residual / rhs_norm;
  if (!(true_residual <= target))
    throw SolverError("Poisson solve did not converge", result.relative_residual);
  return result;
}

/// A = d(exact) + codiff(coexact) + harmonic, mutually L2-orthogonal.
struct HodgeParts {
  FormField exact_potential;    // 0-form chi
  FormField coexact_potential;  // 2-form psi
  std::vector<double> harmonic; // one constant per axis direction

  FormField exact_part() const { return exterior_d(exact_potential); }
  FormField coexact_part() const { return codiff(coexact_potential); }
  FormField harmonic_part() const {
    return constant_form(exact_potential.lattice(), 1, harmonic);
  }
  FormField reconstruct() const {
    FormField out = exact_part();
    out += coexact_part();
    out += harmonic_part();
    return out;
  }
};

inline HodgeParts hodge_decompose(const FormField& a, const PoissonOptions& options = {}) {
  if (a.degree() != 1) throw DegreeError("hodge_decompose expects a 1-form");
  FormField chi = solve_poisson(codiff(a), options).solution;
  FormField psi = solve_poisson(exterior_d(a), options).solution;
  return HodgeParts{std::move(chi), std::move(psi), harmonic_coefficients(a)};
}

}  // namespace glb

#endif  // GLB_POISSON_HPP
