#ifndef GLB_REDUCE_HPP
#define GLB_REDUCE_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace glb {

namespace detail {
inline constexpr std::size_t kReduceBlock = 256;

inline double tree_sum(std::vector<double>& partial) {
  if (partial.empty()) return 0.0;
  std::size_t count = partial.size();
  while (count > 1) {
    const std::size_t half = (count + 1) / 2;
    for (std::size_t i = 0; i + half < count; ++i) partial[i] += partial[i + half];
    count = half;
  }
  return partial[0];
}
}  // namespace detail

/// Sum of term(i) for i in [0, count) using fixed-size sequential blocks
/// combined by a pairwise tree. The association order depends only on count,
/// so results are bit-reproducible.
template <typename Term>
double deterministic_sum(std::size_t count, Term&& term) {
  std::vector<double> partial;
  partial.reserve(count / detail::kReduceBlock + 1);
  for (std::size_t begin = 0; begin < count; begin += detail::kReduceBlock) {
    const std::size_t end = begin + detail::kReduceBlock < count ? begin + detail::kReduceBlock : count;
    double block = 0.0;
    for (std::size_t i = begin; i < end; ++i) block += term(i);
    partial.push_back(block);
  }
  return detail::tree_sum(partial);
}

inline double deterministic_sum(std::span<const double> values) {
  return deterministic_sum(values.size(), [&](std::size_t i) { return values[i]; });
}

}  // namespace glb

#endif  // GLB_REDUCE_HPP
