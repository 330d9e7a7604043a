#pragma once

// Test-side oracles: independent recomputations used to cross-check the
// library. Everything here is deliberately written from the definitions
// (finite differences, brute-force sums, direct products) rather than by
// calling back into the code under test.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "gvoco/functions.hpp"
#include "gvoco/geometry.hpp"

namespace oracle {

using gvoco::FeasibleDomain;
using gvoco::OnlineFunction;
using gvoco::Vector;

inline Vector fd_gradient(const OnlineFunction& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f.value(xp) - f.value(xm)) / (2.0 * h);
  }
  return g;
}

// ||grad f(x + h d) - grad f(x)|| / h for a unit direction d.
inline double fd_directional_lipschitz(const OnlineFunction& f, const Vector& x,
                                       const Vector& dir, double h) {
  return (f.gradient(x + h * dir) - f.gradient(x)).norm() / h;
}

// Checks the curvature link certificate at random points: the local
// gradient Lipschitz estimate, probed inside the radius the link promises,
// must not exceed link(2||grad||) by more than `slack` relative.
inline bool certify_link(const OnlineFunction& f, const FeasibleDomain& dom,
                         int trials, std::uint64_t seed, double slack = 1e-3) {
  for (int k = 0; k < trials; ++k) {
    Vector x = dom.grid_point(static_cast<std::uint64_t>(k) + seed);
    double gn = f.gradient(x).norm();
    double cap = f.link(2.0 * gn);
    double radius = gn > 0 ? gn / cap : 1e-3;
    double h = std::min(radius, 1e-4 * (1.0 + x.norm()));
    if (h <= 0) continue;
    Vector dir = gvoco::rng::unit_vector(seed, 900 + static_cast<std::uint64_t>(k),
                                         static_cast<int>(x.size()));
    double est = fd_directional_lipschitz(f, x, dir, h);
    if (est > cap * (1.0 + slack)) return false;
  }
  return true;
}

// f(y) >= f(x) + <grad f(x), y-x> + (lambda/2)||y-x||^2 at random pairs.
inline bool check_strong_convexity(const OnlineFunction& f, const FeasibleDomain& dom,
                                   double lambda, int trials, std::uint64_t seed,
                                   double tol = 1e-8) {
  for (int k = 0; k < trials; ++k) {
    Vector x = dom.grid_point(2 * static_cast<std::uint64_t>(k) + seed);
    Vector y = dom.grid_point(2 * static_cast<std::uint64_t>(k) + 1 + seed);
    double lhs = f.value(y);
    double rhs = f.value(x) + f.gradient(x).dot(y - x) +
                 0.5 * lambda * (y - x).squaredNorm();
    if (lhs < rhs - tol * (1.0 + std::abs(lhs))) return false;
  }
  return true;
}

// Brute-force cumulative loss of a stream at a point.
inline double total_loss(const gvoco::Stream& s, const Vector& x) {
  double v = 0.0;
  for (int t = 1; t <= s.horizon(); ++t) v += s.at(t).value(x);
  return v;
}

}  // namespace oracle
