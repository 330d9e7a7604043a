#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gvoco/errors.hpp"
#include "gvoco/geometry.hpp"

namespace gvoco {

struct OptimResult {
  Vector x;
  double value = 0.0;
  double residual = 0.0;   // gradient-mapping norm at exit
  long iterations = 0;
  bool converged = false;
};

// Projected gradient descent with a curvature-probing step control.
// A trial step is accepted when step * L <= 1 for the gradient Lipschitz
// estimate L measured between the endpoints; this certifies the descent
// lemma along the step without comparing function values, so it keeps
// working at residuals far below the value-cancellation floor. Terminates
// when the unit-step gradient mapping ||x - P(x - grad)|| falls below
// `tol`; throws NumericError (carrying the residual) if the budget runs out.
template <class ValueFn, class GradFn>
OptimResult pgd_minimize(const ValueFn& value, const GradFn& grad,
                         const FeasibleDomain& domain, const Vector& start,
                         double tol = 1e-9, long max_iter = 200000) {
  Vector x = domain.project(start);
  Vector g = grad(x);
  double step = 1.0;
  OptimResult out;
  for (long it = 0; it < max_iter; ++it) {
    double res = (x - domain.project(x - g)).norm();
    if (res <= tol) {
      out.x = x; out.value = value(x); out.residual = res;
      out.iterations = it; out.converged = true;
      return out;
    }
    for (int retry = 0; retry < 200; ++retry) {
      Vector xp = domain.project(x - step * g);
      double dn = (xp - x).norm();
      if (dn == 0.0) break;  // projected step is a fixed point at this x
      Vector gp = grad(xp);
      double lip = (gp - g).norm() / dn;
      if (step * lip <= 1.0 + 1e-9) {
        x = std::move(xp);
        g = std::move(gp);
        step *= 1.25;
        break;
      }
      step = std::min(0.5 * step, 0.9 / lip);
      if (step < 1e-300)
        throw NumericError("pgd_minimize: step size collapsed", res);
    }
  }
  double res = (x - domain.project(x - g)).norm();
  throw NumericError("pgd_minimize: iteration budget exhausted", res);
}

// Refining lattice search, the independent cross-check for low dimension.
// Shrinks a bounding box around the incumbent until the cell width drops
// below `cell_target`; every probed lattice point is projected into the
// domain before evaluation. Intended for dim <= 2 (cost grows as 33^dim).
template <class ValueFn>
OptimResult grid_minimize(const ValueFn& value, const FeasibleDomain& domain,
                          double cell_target) {
  const int dim = domain.dim();
  const int n = 32;
  Vector lo(dim), hi(dim);
  if (domain.kind() == FeasibleDomain::Kind::Ball) {
    lo = domain.center().array() - domain.radius();
    hi = domain.center().array() + domain.radius();
  } else {
    lo = domain.lower();
    hi = domain.upper();
  }

  Vector best_x = domain.project(Vector::Zero(dim));
  double best_v = value(best_x);
  long evals = 0;

  for (int level = 0; level < 64; ++level) {
    Vector cell = (hi - lo) / n;
    std::vector<int> counter(dim, 0);
    bool done = false;
    while (!done) {
      Vector pt(dim);
      for (int k = 0; k < dim; ++k) pt[k] = lo[k] + counter[k] * cell[k];
      Vector proj = domain.project(pt);
      double v = value(proj);
      ++evals;
      if (v < best_v) { best_v = v; best_x = proj; }
      // odometer over the lattice
      int k = 0;
      for (; k < dim; ++k) {
        if (++counter[k] <= n) break;
        counter[k] = 0;
      }
      done = (k == dim);
    }
    if (cell.maxCoeff() <= cell_target) {
      OptimResult out;
      out.x = best_x; out.value = best_v; out.iterations = evals;
      out.converged = true;
      return out;
    }
    // Zoom: keep a margin of a few cells around the incumbent.
    for (int k = 0; k < dim; ++k) {
      double m = 2.5 * cell[k];
      double nlo = std::max(lo[k], best_x[k] - m);
      double nhi = std::min(hi[k], best_x[k] + m);
      if (nhi - nlo < 1e-300) { nlo = lo[k]; nhi = hi[k]; }
      lo[k] = nlo; hi[k] = nhi;
    }
  }
  throw NumericError("grid_minimize: refinement stalled", 0.0);
}

}  // namespace gvoco
