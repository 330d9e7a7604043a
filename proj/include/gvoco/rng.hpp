#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace gvoco::rng {

// Counter-based generator: every draw is a pure function of
// (seed, stream, slot), so any part of a stream can be replayed out of
// order and results never depend on draw ordering or thread count.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = mix64(a);
  h = mix64(h ^ (b + 0x165667b19e3779f9ULL));
  h = mix64(h ^ (c + 0x27d4eb2f165667c5ULL));
  return h;
}

// Uniform in [0, 1), 53-bit resolution.
inline double u01(std::uint64_t seed, std::uint64_t stream, std::uint64_t slot) {
  return static_cast<double>(hash3(seed, stream, slot) >> 11) * 0x1.0p-53;
}

// Uniform in [lo, hi).
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t slot,
                      double lo, double hi) {
  return lo + (hi - lo) * u01(seed, stream, slot);
}

// Standard normal via Box-Muller; consumes slots 2k and 2k+1.
inline double gauss(std::uint64_t seed, std::uint64_t stream, std::uint64_t slot) {
  double u1 = 1.0 - u01(seed, stream, 2 * slot);      // (0, 1]
  double u2 = u01(seed, stream, 2 * slot + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline Eigen::VectorXd gauss_vector(std::uint64_t seed, std::uint64_t stream, int dim,
                                    std::uint64_t slot_base = 0) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(seed, stream, slot_base + i);
  return v;
}

inline Eigen::VectorXd unit_vector(std::uint64_t seed, std::uint64_t stream, int dim,
                                   std::uint64_t slot_base = 0) {
  Eigen::VectorXd v = gauss_vector(seed, stream, dim, slot_base);
  double n = v.norm();
  if (n < 1e-300) { v.setZero(); v[0] = 1.0; return v; }
  return v / n;
}

// Halton sequence point (bases 2,3,5,...), used for fixed evaluation grids.
inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

inline Eigen::VectorXd halton_point(std::uint64_t index, int dim) {
  static const std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  Eigen::VectorXd p(dim);
  for (int i = 0; i < dim; ++i)
    p[i] = radical_inverse(index + 1, primes[i % 12]);
  return p;
}

}  // namespace gvoco::rng
