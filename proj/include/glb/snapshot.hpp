#ifndef GLB_SNAPSHOT_HPP
#define GLB_SNAPSHOT_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "glb/bundle.hpp"
#include "glb/error.hpp"

namespace glb {

// GLB1 layout, all fields little-endian 64-bit:
//   "GLB1" | n | N_0..N_{n-1} | L_0..L_{n-1} | d | eps | u (re, im per vertex) | A (per edge)
// Integers are int64, reals IEEE binary64.

class SnapshotError : public Error {
 public:
  using Error::Error;
};

struct Snapshot {
  State state;
  double epsilon;
};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t x) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xffu);
  os.write(b.data(), 8);
}
inline void put_i64(std::ostream& os, std::int64_t x) { put_u64(os, static_cast<std::uint64_t>(x)); }
inline void put_f64(std::ostream& os, double x) { put_u64(os, std::bit_cast<std::uint64_t>(x)); }

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b;
  is.read(reinterpret_cast<char*>(b.data()), 8);
  if (!is) throw SnapshotError("snapshot truncated");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return x;
}
inline std::int64_t get_i64(std::istream& is) { return static_cast<std::int64_t>(get_u64(is)); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace detail

inline void write_snapshot(std::ostream& os, const State& state, double eps) {
  const Lattice& lat = state.lattice();
  os.write("GLB1", 4);
  detail::put_i64(os, lat.dim());
  for (int i = 0; i < lat.dim(); ++i) detail::put_i64(os, lat.size(i));
  for (int i = 0; i < lat.dim(); ++i) detail::put_f64(os, lat.length(i));
  detail::put_i64(os, state.degree());
  detail::put_f64(os, eps);
  for (const Complex& z : state.u) {
    detail::put_f64(os, z.real());
    detail::put_f64(os, z.imag());
  }
  for (double x : state.a.values()) detail::put_f64(os, x);
  if (!os) throw SnapshotError("failed writing snapshot");
}

inline void write_snapshot(const std::string& path, const State& state, double eps) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw SnapshotError("cannot open " + path + " for writing");
  write_snapshot(os, state, eps);
}

inline Snapshot read_snapshot(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GLB1", 4) != 0) throw SnapshotError("not a GLB1 snapshot");
  const std::int64_t n = detail::get_i64(is);
  if (n != 2 && n != 3) throw SnapshotError("snapshot dimension must be 2 or 3");
  std::vector<int> sizes(n);
  std::vector<double> lengths(n);
  for (auto& s : sizes) s = static_cast<int>(detail::get_i64(is));
  for (auto& l : lengths) l = detail::get_f64(is);
  const int degree = static_cast<int>(detail::get_i64(is));
  const double eps = detail::get_f64(is);
  const Lattice lat = Lattice::build(static_cast<int>(n), sizes, lengths);
  State state(make_reference_connection(lat, degree));
  for (Complex& z : state.u) {
    const double re = detail::get_f64(is);
    z = Complex(re, detail::get_f64(is));
  }
  for (double& x : state.a.values()) x = detail::get_f64(is);
  if (is.peek() != std::char_traits<char>::eof()) throw SnapshotError("trailing bytes after snapshot");
  return {std::move(state), eps};
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SnapshotError("cannot open " + path);
  return read_snapshot(is);
}

}  // namespace glb

#endif  // GLB_SNAPSHOT_HPP
