#ifndef GLB_FORMS_HPP
#define GLB_FORMS_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "glb/error.hpp"
#include "glb/lattice.hpp"
#include "glb/reduce.hpp"

namespace glb {

/// Real k-form on a lattice: one value per k-cell in canonical order.
class FormField {
 public:
  FormField(Lattice lattice, int degree)
      : lattice_(std::move(lattice)), degree_(degree) {
    lattice_.check_degree(degree);
    values_.assign(lattice_.cell_count(degree), 0.0);
  }
  FormField(Lattice lattice, int degree, std::vector<double> values)
      : lattice_(std::move(lattice)), degree_(degree), values_(std::move(values)) {
    lattice_.check_degree(degree);
    if (values_.size() != lattice_.cell_count(degree))
      throw ConfigurationError("form value count does not match the k-cell count");
  }

  const Lattice& lattice() const { return lattice_; }
  int degree() const { return degree_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
  }

  FormField& operator+=(const FormField& other) {
    check_compatible(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }
  FormField& operator-=(const FormField& other) {
    check_compatible(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }
  FormField& operator*=(double s) {
    for (double& x : values_) x *= s;
    return *this;
  }
  friend FormField operator+(FormField a, const FormField& b) { return a += b; }
  friend FormField operator-(FormField a, const FormField& b) { return a -= b; }
  friend FormField operator*(double s, FormField a) { return a *= s; }

  void check_compatible(const FormField& other) const {
    if (degree_ != other.degree_ || !(lattice_ == other.lattice_))
      throw DegreeError("form fields live on different lattices or degrees");
  }

 private:
  Lattice lattice_;
  int degree_;
  std::vector<double> values_;
};

namespace detail {

/// Position of `axis` among the set bits of `mask` (0-based).
inline int axis_rank(Axes mask, int axis) { return std::popcount(mask & ((1u << axis) - 1u)); }

}  // namespace detail

/// Oriented forward-difference coboundary, divided by h.
inline FormField exterior_d(const FormField& form) {
  const Lattice& lat = form.lattice();
  const int k = form.degree();
  if (k >= lat.dim()) throw DegreeError("exterior_d of a top-degree form");
  FormField out(lat, k + 1);
  const std::size_t nv = lat.vertex_count();
  const double inv_h = 1.0 / lat.spacing();
  for (std::size_t o = 0; o < lat.orientation_count(k + 1); ++o) {
    const Axes mask = lat.orientation(k + 1, o);
    for (int axis = 0; axis < lat.dim(); ++axis) {
      if (!(mask & (1u << axis))) continue;
      const double sign = (detail::axis_rank(mask, axis) % 2 == 0) ? inv_h : -inv_h;
      const std::size_t sub = lat.orientation_index(k, mask & ~(1u << axis));
      const double* src = form.values().data() + sub * nv;
      double* dst = out.values().data() + o * nv;
      for (std::size_t v = 0; v < nv; ++v)
        dst[v] += sign * (src[lat.neighbor(v, axis, +1)] - src[v]);
    }
  }
  return out;
}

/// Formal adjoint of exterior_d for the h^n-weighted L2 product.
inline FormField codiff(const FormField& form) {
  const Lattice& lat = form.lattice();
  const int k = form.degree();
  if (k == 0) throw DegreeError("codifferential of a 0-form");
  FormField out(lat, k - 1);
  const std::size_t nv = lat.vertex_count();
  const double inv_h = 1.0 / lat.spacing();
  for (std::size_t o = 0; o < lat.orientation_count(k); ++o) {
    const Axes mask = lat.orientation(k, o);
    for (int axis = 0; axis < lat.dim(); ++axis) {
      if (!(mask & (1u << axis))) continue;
      const double sign = (detail::axis_rank(mask, axis) % 2 == 0) ? inv_h : -inv_h;
      const std::size_t sub = lat.orientation_index(k - 1, mask & ~(1u << axis));
      const double* src = form.values().data() + o * nv;
      double* dst = out.values().data() + sub * nv;
      for (std::size_t v = 0; v < nv; ++v)
        dst[v] += sign * (src[lat.neighbor(v, axis, -1)] - src[v]);
    }
  }
  return out;
}

/// Positive Hodge Laplacian d codiff + codiff d.
inline FormField hodge_laplacian(const FormField& form) {
  const int k = form.degree();
  const int n = form.lattice().dim();
  if (k == 0) return codiff(exterior_d(form));
  if (k == n) return exterior_d(codiff(form));
  FormField out = exterior_d(codiff(form));
  out += codiff(exterior_d(form));
  return out;
}

/// Discrete L2 inner product, weight h^n per cell.
inline double inner(const FormField& a, const FormField& b) {
  a.check_compatible(b);
  const auto x = a.values();
  const auto y = b.values();
  return a.lattice().cell_weight() * deterministic_sum(x.size(), [&](std::size_t i) { return x[i] * y[i]; });
}

inline double l2_norm(const FormField& a) { return std::sqrt(inner(a, a)); }

inline double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return m;
}
inline double max_abs(const FormField& a) { return max_abs(a.values()); }

/// Per-orientation means; on the flat torus these span the harmonic k-forms.
inline std::vector<double> harmonic_coefficients(const FormField& form) {
  const Lattice& lat = form.lattice();
  const std::size_t nv = lat.vertex_count();
  std::vector<double> means(lat.orientation_count(form.degree()));
  for (std::size_t o = 0; o < means.size(); ++o) {
    const double* src = form.values().data() + o * nv;
    means[o] = deterministic_sum(nv, [&](std::size_t v) { return src[v]; }) / static_cast<double>(nv);
  }
  return means;
}

/// Constant-per-orientation k-form with the given coefficients.
inline FormField constant_form(const Lattice& lat, int degree, const std::vector<double>& coefficients) {
  FormField out(lat, degree);
  const std::size_t nv = lat.vertex_count();
  for (std::size_t o = 0; o < coefficients.size(); ++o)
    std::fill_n(out.values().begin() + static_cast<std::ptrdiff_t>(o * nv), nv, coefficients[o]);
  return out;
}

inline FormField harmonic_part(const FormField& form) {
  return constant_form(form.lattice(), form.degree(), harmonic_coefficients(form));
}

}  // namespace glb

#endif  // GLB_FORMS_HPP
