#pragma once

#include <cstdint>
#include <random>

namespace bullbear {

// Independent substreams derived from one root seed. Each consumer (regime
// switches, Brownian increments, signal arrival times, signal marks) owns a
// stream, so changing e.g. the signal intensity cannot perturb the Brownian
// path of the same seed. Per-path engines are keyed by (root, stream, path),
// which makes Monte Carlo aggregation independent of execution order.
enum class Stream : std::uint64_t {
  regime = 1,
  brownian = 2,
  arrivals = 3,
  marks = 4,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

inline std::uint64_t substream_seed(std::uint64_t root, Stream s, std::uint64_t path = 0) {
  std::uint64_t h = detail::splitmix64(root);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(s));
  h = detail::splitmix64(h ^ path);
  return h;
}

inline std::mt19937_64 make_engine(std::uint64_t root, Stream s, std::uint64_t path = 0) {
  return std::mt19937_64(substream_seed(root, s, path));
}

}  // namespace bullbear
