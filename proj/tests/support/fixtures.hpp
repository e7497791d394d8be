#ifndef GLB_TESTS_FIXTURES_HPP
#define GLB_TESTS_FIXTURES_HPP

#include <cstdint>

#include "glb/bundle.hpp"
#include "glb/random.hpp"

namespace glb::testing {

inline FormField random_form(const Lattice& lat, int k, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  FormField f(lat, k);
  for (double& x : f.values()) x = scale * rng.uniform(-1.0, 1.0);
  return f;
}

inline std::vector<double> random_angles(const Lattice& lat, std::uint64_t seed, double scale = 3.0) {
  Rng rng(seed);
  std::vector<double> chi(lat.vertex_count());
  for (double& x : chi) x = rng.uniform(-scale, scale);
  return chi;
}

/// u uniform in the unit disk, A uniform in [-a_scale, a_scale].
inline State random_state(std::shared_ptr<const RefConnection> ref, std::uint64_t seed, double a_scale = 1.0) {
  const Lattice& lat = ref->lattice();
  Rng rng(seed);
  std::vector<Complex> u(lat.vertex_count());
  for (Complex& z : u) z = std::polar(std::sqrt(rng.uniform()), 2.0 * 3.141592653589793 * rng.uniform());
  FormField a(lat, 1);
  for (double& x : a.values()) x = a_scale * rng.uniform(-1.0, 1.0);
  return State(std::move(ref), std::move(u), std::move(a));
}

inline double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace glb::testing

#endif  // GLB_TESTS_FIXTURES_HPP
