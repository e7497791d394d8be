#ifndef GLB_LATTICE_HPP
#define GLB_LATTICE_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "glb/error.hpp"

namespace glb {

/// Bitmask of coordinate axes spanned by a cell (bit i set for axis i).
using Axes = unsigned;

using Point = std::array<double, 3>;

/// Periodic cubic grid on the flat torus prod_i R / L_i Z.
///
/// k-cells are addressed as (orientation, base vertex): the cell spans the
/// axes of its orientation starting at the base vertex in the positive
/// direction. Canonical index = orientation_index * vertex_count + vertex,
/// with orientations of a given degree sorted by bitmask value and vertices
/// numbered with x fastest. The object is a cheap shared handle.
class Lattice {
 public:
  static Lattice build(int dim, std::vector<int> sizes, std::vector<double> lengths) {
    if (dim != 2 && dim != 3) throw ConfigurationError("lattice dimension must be 2 or 3");
    if (static_cast<int>(sizes.size()) != dim || static_cast<int>(lengths.size()) != dim)
      throw ConfigurationError("lattice needs one size and one length per axis");
    for (int i = 0; i < dim; ++i) {
      if (sizes[i] < 4) throw ConfigurationError("lattice size per axis must be at least 4");
      if (!(lengths[i] > 0.0) || !std::isfinite(lengths[i]))
        throw ConfigurationError("lattice lengths must be positive");
    }
    const double h = lengths[0] / sizes[0];
    for (int i = 1; i < dim; ++i) {
      const double hi = lengths[i] / sizes[i];
      if (std::abs(hi - h) > 1e-12 * h)
        throw ConfigurationError("anisotropic spacing: L_i / N_i must agree on all axes");
    }

    auto data = std::make_shared<Data>();
    data->dim = dim;
    data->spacing = h;
    data->vertices = 1;
    for (int i = 0; i < dim; ++i) {
      data->sizes[i] = sizes[i];
      data->lengths[i] = lengths[i];
      data->vertices *= static_cast<std::size_t>(sizes[i]);
    }
    for (int i = dim; i < 3; ++i) {
      data->sizes[i] = 1;
      data->lengths[i] = h;
    }
    data->strides = {1, static_cast<std::size_t>(data->sizes[0]),
                     static_cast<std::size_t>(data->sizes[0]) * data->sizes[1]};
    for (Axes mask = 0; mask < (1u << dim); ++mask)
      data->orientations[std::popcount(mask)].push_back(mask);

    for (int axis = 0; axis < dim; ++axis) {
      auto& fwd = data->forward[axis];
      auto& bwd = data->backward[axis];
      fwd.resize(data->vertices);
      bwd.resize(data->vertices);
      const std::size_t stride = data->strides[axis];
      const int n_axis = data->sizes[axis];
      for (std::size_t v = 0; v < data->vertices; ++v) {
        const int c = static_cast<int>((v / stride) % n_axis);
        fwd[v] = c + 1 < n_axis ? v + stride : v - stride * (n_axis - 1);
        bwd[v] = c > 0 ? v - stride : v + stride * (n_axis - 1);
      }
    }
    return Lattice(std::move(data));
  }

  int dim() const { return data_->dim; }
  int size(int axis) const { return data_->sizes[axis]; }
  double length(int axis) const { return data_->lengths[axis]; }
  double spacing() const { return data_->spacing; }
  double min_length() const {
    double m = data_->lengths[0];
    for (int i = 1; i < dim(); ++i) m = std::min(m, data_->lengths[i]);
    return m;
  }
  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= data_->lengths[i];
    return v;
  }
  /// Quadrature weight h^n carried by every cell in discrete L2 products.
  double cell_weight() const { return std::pow(spacing(), dim()); }

  std::size_t vertex_count() const { return data_->vertices; }
  std::size_t orientation_count(int k) const { return data_->orientations[k].size(); }
  Axes orientation(int k, std::size_t index) const { return data_->orientations[k][index]; }
  std::size_t orientation_index(int k, Axes mask) const {
    const auto& list = data_->orientations[k];
    return static_cast<std::size_t>(std::find(list.begin(), list.end(), mask) - list.begin());
  }
  std::size_t cell_count(int k) const {
    check_degree(k);
    return orientation_count(k) * vertex_count();
  }
  std::size_t cell(std::size_t orientation_idx, std::size_t vertex) const {
    return orientation_idx * vertex_count() + vertex;
  }
  std::size_t cell_orientation(std::size_t cell_idx) const { return cell_idx / vertex_count(); }
  std::size_t cell_vertex(std::size_t cell_idx) const { return cell_idx % vertex_count(); }

  /// Periodic neighbor of a vertex one step along +axis (step > 0) or -axis.
  std::size_t neighbor(std::size_t vertex, int axis, int step) const {
    return step > 0 ? data_->forward[axis][vertex] : data_->backward[axis][vertex];
  }
  std::size_t shift(std::size_t vertex, int axis, int steps) const {
    const int n_axis = size(axis);
    const std::size_t stride = data_->strides[axis];
    const int c = static_cast<int>((vertex / stride) % n_axis);
    const int moved = ((c + steps) % n_axis + n_axis) % n_axis;
    return vertex + stride * moved - stride * c;
  }

  std::array<int, 3> coords(std::size_t vertex) const {
    std::array<int, 3> c{0, 0, 0};
    for (int i = 0; i < dim(); ++i)
      c[i] = static_cast<int>((vertex / data_->strides[i]) % data_->sizes[i]);
    return c;
  }
  std::size_t vertex_at(std::array<int, 3> c) const {
    std::size_t v = 0;
    for (int i = 0; i < dim(); ++i) {
      const int wrapped = ((c[i] % size(i)) + size(i)) % size(i);
      v += data_->strides[i] * wrapped;
    }
    return v;
  }

  Point position(std::size_t vertex) const {
    const auto c = coords(vertex);
    Point p{0.0, 0.0, 0.0};
    for (int i = 0; i < dim(); ++i) p[i] = c[i] * spacing();
    return p;
  }
  Point barycenter(int k, std::size_t cell_idx) const {
    Point p = position(cell_vertex(cell_idx));
    const Axes mask = orientation(k, cell_orientation(cell_idx));
    for (int i = 0; i < dim(); ++i)
      if (mask & (1u << i)) p[i] += 0.5 * spacing();
    return p;
  }
  /// Minimal-image displacement from `from` to `to`.
  Point displacement(const Point& from, const Point& to) const {
    Point d{0.0, 0.0, 0.0};
    for (int i = 0; i < dim(); ++i) {
      const double len = length(i);
      double x = std::fmod(to[i] - from[i], len);
      if (x > 0.5 * len) x -= len;
      if (x < -0.5 * len) x += len;
      d[i] = x;
    }
    return d;
  }
  double distance(const Point& a, const Point& b) const {
    const Point d = displacement(a, b);
    return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  }

  void check_degree(int k) const {
    if (k < 0 || k > dim()) throw DegreeError("form degree " + std::to_string(k) + " out of range");
  }

  friend bool operator==(const Lattice& a, const Lattice& b) {
    if (a.data_ == b.data_) return true;
    if (a.dim() != b.dim()) return false;
    for (int i = 0; i < a.dim(); ++i)
      if (a.size(i) != b.size(i) || a.length(i) != b.length(i)) return false;
    return true;
  }

 private:
  struct Data {
    int dim = 0;
    double spacing = 0.0;
    std::size_t vertices = 0;
    std::array<int, 3> sizes{};
    std::array<double, 3> lengths{};
    std::array<std::size_t, 3> strides{};
    std::array<std::vector<Axes>, 4> orientations;
    std::array<std::vector<std::size_t>, 3> forward;
    std::array<std::vector<std::size_t>, 3> backward;
  };

  explicit Lattice(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;
};

inline Lattice build_lattice(int dim, std::vector<int> sizes, std::vector<double> lengths) {
  return Lattice::build(dim, std::move(sizes), std::move(lengths));
}

}  // namespace glb

#endif  // GLB_LATTICE_HPP
