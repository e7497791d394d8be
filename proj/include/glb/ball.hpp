#ifndef GLB_BALL_HPP
#define GLB_BALL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "glb/error.hpp"
#include "glb/lattice.hpp"

namespace glb {

/// Cells whose barycenter lies strictly inside the periodic ball B_radius(center),
/// per degree, binned into shells of width h by barycenter distance.
class BallIndex {
 public:
  BallIndex(const Lattice& lattice, std::size_t center, double radius)
      : center_(center), radius_(radius) {
    if (center >= lattice.vertex_count()) throw RangeError("ball center is not a vertex");
    if (!(radius > 0.0) || !(radius < 0.5 * lattice.min_length()))
      throw RangeError("ball radius " + std::to_string(radius) + " outside (0, min(L)/2)");
    const double h = lattice.spacing();
    const Point origin = lattice.position(center);
    shell_count_ = static_cast<std::size_t>(std::ceil(radius / h));
    for (int k = 0; k <= lattice.dim(); ++k) {
      std::vector<Entry> entries;
      const std::size_t count = lattice.cell_count(k);
      for (std::size_t c = 0; c < count; ++c) {
        const double dist = lattice.distance(origin, lattice.barycenter(k, c));
        if (dist < radius) entries.push_back({std::min(static_cast<std::size_t>(dist / h), shell_count_ - 1), c, dist});
      }
      std::stable_sort(entries.begin(), entries.end(),
                       [](const Entry& a, const Entry& b) { return a.shell < b.shell; });
      auto& cells = cells_[k];
      auto& dists = distances_[k];
      auto& offsets = offsets_[k];
      offsets.assign(shell_count_ + 1, 0);
      for (const Entry& e : entries) {
        cells.push_back(e.cell);
        dists.push_back(e.dist);
        ++offsets[e.shell + 1];
      }
      for (std::size_t s = 0; s < shell_count_; ++s) offsets[s + 1] += offsets[s];
    }
    degrees_ = lattice.dim() + 1;
  }

  std::size_t center() const { return center_; }
  double radius() const { return radius_; }
  int degree_count() const { return degrees_; }
  std::size_t shell_count() const { return shell_count_; }

  /// All interior k-cells, ordered by shell then canonical index.
  std::span<const std::size_t> interior(int k) const { return cells_[k]; }
  std::span<const double> interior_distances(int k) const { return distances_[k]; }
  /// Interior k-cells whose barycenter distance lies in [s h, (s+1) h).
  std::span<const std::size_t> shell(int k, std::size_t s) const {
    return std::span<const std::size_t>(cells_[k]).subspan(offsets_[k][s], offsets_[k][s + 1] - offsets_[k][s]);
  }
  std::span<const double> shell_distances(int k, std::size_t s) const {
    return std::span<const double>(distances_[k]).subspan(offsets_[k][s], offsets_[k][s + 1] - offsets_[k][s]);
  }

 private:
  struct Entry {
    std::size_t shell;
    std::size_t cell;
    double dist;
  };

  std::size_t center_;
  double radius_;
  int degrees_ = 0;
  std::size_t shell_count_ = 0;
  std::array<std::vector<std::size_t>, 4> cells_;
  std::array<std::vector<double>, 4> distances_;
  std::array<std::vector<std::size_t>, 4> offsets_;
};

inline BallIndex ball_index(const Lattice& lattice, std::size_t center, double radius) {
  return BallIndex(lattice, center, radius);
}

}  // namespace glb

#endif  // GLB_BALL_HPP
