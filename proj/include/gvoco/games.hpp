#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gvoco/base_learner.hpp"
#include "gvoco/errors.hpp"
#include "gvoco/geometry.hpp"
#include "gvoco/link.hpp"
#include "gvoco/optim.hpp"

namespace gvoco {

// Convex-concave saddle problem min_x max_y f(x, y) on a product of boxes.
//
//   Bilinear:           f(x, y) = x'Ay + b'x + c'y
//   QuarticRegularized: f(x, y) = x'Ay + b'x + c'y + q||x||^4 - q||y||^4
//
// The monotone operator is F(z) = (grad_x f, -grad_y f). Its curvature link
// bounds the operator Jacobian norm by a function of ||F(z)||: constant
// ||A|| for the bilinear game; for the quartic game the regularizer blocks
// obey ||Hess|| <= 12q r^2 with 4q r^3 <= ||F(z)|| + s, where s collects the
// largest bilinear contribution on the box, giving the conservative bound
// ||A|| + 3 (4q)^(1/3) (u + s)^(2/3).
class SaddleProblem {
 public:
  enum class Payoff { Bilinear, QuarticRegularized };

  static SaddleProblem bilinear(Eigen::MatrixXd A, Vector b, Vector c,
                                FeasibleDomain x_domain,
                                FeasibleDomain y_domain) {
    return SaddleProblem(Payoff::Bilinear, std::move(A), std::move(b),
                         std::move(c), 0.0, std::move(x_domain),
                         std::move(y_domain));
  }

  static SaddleProblem quartic_regularized(Eigen::MatrixXd A, Vector b,
                                           Vector c, double q,
                                           FeasibleDomain x_domain,
                                           FeasibleDomain y_domain) {
    if (!(q > 0.0))
      throw ConfigError("quartic game needs a positive regularizer");
    return SaddleProblem(Payoff::QuarticRegularized, std::move(A),
                         std::move(b), std::move(c), q, std::move(x_domain),
                         std::move(y_domain));
  }

  Payoff payoff_kind() const { return payoff_; }
  int dim_x() const { return static_cast<int>(b_.size()); }
  int dim_y() const { return static_cast<int>(c_.size()); }
  const FeasibleDomain& x_domain() const { return x_dom_; }
  const FeasibleDomain& y_domain() const { return y_dom_; }
  const FeasibleDomain& domain() const { return z_dom_; }
  const LinkFunction& link() const { return link_; }
  bool exact_gap() const { return payoff_ == Payoff::Bilinear; }

  std::pair<Vector, Vector> split(const Vector& z) const {
    if (z.size() != dim_x() + dim_y())
      throw ConfigError("saddle point dimension mismatch");
    return {z.head(dim_x()), z.tail(dim_y())};
  }

  double payoff(const Vector& x, const Vector& y) const {
    if (x.size() != dim_x() || y.size() != dim_y())
      throw ConfigError("payoff argument dimension mismatch");
    double v = x.dot(A_ * y) + b_.dot(x) + c_.dot(y);
    if (payoff_ == Payoff::QuarticRegularized) {
      const double xs = x.squaredNorm(), ys = y.squaredNorm();
      v += q_ * xs * xs - q_ * ys * ys;
    }
    return v;
  }

  // F(z) = (grad_x f, -grad_y f); monotone by convexity-concavity.
  Vector operator_at(const Vector& z) const {
    auto [x, y] = split(z);
    Vector fx = A_ * y + b_;
    Vector fy = -(A_.transpose() * x + c_);
    if (payoff_ == Payoff::QuarticRegularized) {
      fx += 4.0 * q_ * x.squaredNorm() * x;
      fy += 4.0 * q_ * y.squaredNorm() * y;
    }
    Vector out(dim_x() + dim_y());
    out << fx, fy;
    return out;
  }

  // <F(z1) - F(z2), z1 - z2>; nonnegative for a monotone operator.
  double monotonicity_gap(const Vector& z1, const Vector& z2) const {
    return (operator_at(z1) - operator_at(z2)).dot(z1 - z2);
  }

  // max_y f(xbar, y) - min_x f(x, ybar). Componentwise support functions on
  // the boxes give the bilinear case exactly; the quartic case runs inner
  // solves of the concave/convex slices to residual 1e-9.
  double duality_gap(const Vector& zbar) const {
    auto [xbar, ybar] = split(zbar);
    double best_max, best_min;
    if (payoff_ == Payoff::Bilinear) {
      best_max = b_.dot(xbar) + box_max(y_dom_, A_.transpose() * xbar + c_);
      best_min = c_.dot(ybar) - box_max(x_dom_, -(A_ * ybar + b_));
    } else {
      auto neg_slice_y = [&](const Vector& y) { return -payoff(xbar, y); };
      auto neg_grad_y = [&](const Vector& y) {
        return Vector(-(A_.transpose() * xbar + c_ - 4.0 * q_ * y.squaredNorm() * y));
      };
      auto slice_x = [&](const Vector& x) { return payoff(x, ybar); };
      auto grad_x = [&](const Vector& x) {
        return Vector(A_ * ybar + b_ + 4.0 * q_ * x.squaredNorm() * x);
      };
      best_max = -pgd_minimize(neg_slice_y, neg_grad_y, y_dom_,
                               y_dom_.project(ybar))
                      .value;
      best_min = pgd_minimize(slice_x, grad_x, x_dom_, x_dom_.project(xbar)).value;
    }
    const double gap = best_max - best_min;
    if (gap < -1e-6)
      throw NumericError("duality gap came out negative", gap);
    return std::max(gap, 0.0);
  }

 private:
  SaddleProblem(Payoff payoff, Eigen::MatrixXd A, Vector b, Vector c, double q,
                FeasibleDomain x_dom, FeasibleDomain y_dom)
      : payoff_(payoff), A_(std::move(A)), b_(std::move(b)), c_(std::move(c)),
        q_(q), x_dom_(std::move(x_dom)), y_dom_(std::move(y_dom)),
        z_dom_(product_box(x_dom_, y_dom_)) {
    if (A_.rows() != b_.size() || A_.cols() != c_.size())
      throw ConfigError("payoff matrix shape disagrees with linear terms");
    if (x_dom_.dim() != dim_x() || y_dom_.dim() != dim_y())
      throw ConfigError("saddle domain dimensions disagree with the payoff");
    const double a_norm = A_.jacobiSvd().singularValues()(0);
    if (payoff_ == Payoff::Bilinear) {
      link_ = LinkFunction::constant(kLinkEpsilon + a_norm);
    } else {
      const double sx = a_norm * y_dom_.max_norm() + b_.norm();
      const double sy = a_norm * x_dom_.max_norm() + c_.norm();
      link_ = LinkFunction::power_shift(kLinkEpsilon + a_norm,
                                        3.0 * std::cbrt(4.0 * q_),
                                        std::max(sx, sy), 2.0 / 3.0);
    }
  }

  static FeasibleDomain product_box(const FeasibleDomain& x_dom,
                                    const FeasibleDomain& y_dom) {
    Vector lower(x_dom.dim() + y_dom.dim());
    Vector upper(x_dom.dim() + y_dom.dim());
    lower << x_dom.lower(), y_dom.lower();
    upper << x_dom.upper(), y_dom.upper();
    return FeasibleDomain::box(std::move(lower), std::move(upper));
  }

  // max over the box of g'v, i.e. the box support function.
  static double box_max(const FeasibleDomain& dom, const Vector& g) {
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i)
      s += std::max(g[i] * dom.lower()[i], g[i] * dom.upper()[i]);
    return s;
  }

  Payoff payoff_;
  Eigen::MatrixXd A_;
  Vector b_, c_;
  double q_ = 0.0;
  FeasibleDomain x_dom_, y_dom_;
  FeasibleDomain z_dom_;
  LinkFunction link_;
};

// Loss-oracle adapter: the game's fixed operator plays every round's
// "gradient", so the optimistic learner sees zero gradient variation and the
// step size settles at min(D, smallest curvature cap so far).
struct SaddleOperator {
  const SaddleProblem* problem = nullptr;

  Vector gradient(const Vector& z) const { return problem->operator_at(z); }
  double link(double u) const { return (problem->link())(u); }
  bool is_zero() const { return false; }
};

inline Vector average_iterate(const std::vector<Vector>& trace) {
  if (trace.empty()) throw ConfigError("average of an empty iterate trace");
  Vector sum = Vector::Zero(trace.front().size());
  for (const Vector& z : trace) sum += z;
  return sum / static_cast<double>(trace.size());
}

// Optimistic extragradient loop: z_t = proj(zhat - eta F(zhat)), then
// zhat <- proj(zhat - eta F(z_t)). The averaged iterate approximates the
// saddle point at rate 1/T in duality gap.
class SaddleSolver {
 public:
  explicit SaddleSolver(const SaddleProblem& problem,
                        bool check_invariants = true)
      : problem_(&problem),
        learner_(problem.domain(), solver_options(check_invariants)) {
    sum_ = Vector::Zero(problem.domain().dim());
  }

  const Vector& step() {
    SaddleOperator op{problem_};
    const Vector& z = learner_.predict(op);
    learner_.update(op);
    sum_ += z;
    ++rounds_;
    return learner_.x();
  }

  void run(int rounds) {
    if (rounds < 1) throw ConfigError("saddle run needs at least one round");
    for (int t = 0; t < rounds; ++t) step();
  }

  int rounds() const { return rounds_; }
  const OmdLearner<SaddleOperator>& learner() const { return learner_; }

  Vector average() const {
    if (rounds_ == 0) throw ConfigError("average of an empty iterate trace");
    return sum_ / static_cast<double>(rounds_);
  }

  double average_gap() const { return problem_->duality_gap(average()); }

 private:
  static LearnerOptions solver_options(bool check_invariants) {
    LearnerOptions opt;
    opt.mode = LearnerMode::Convex;
    opt.check_invariants = check_invariants;
    return opt;
  }

  const SaddleProblem* problem_;
  OmdLearner<SaddleOperator> learner_;
  Vector sum_;
  int rounds_ = 0;
};

}  // namespace gvoco
