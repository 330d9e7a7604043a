#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "gvoco/errors.hpp"
#include "gvoco/rng.hpp"

namespace gvoco {

using Vector = Eigen::VectorXd;

// Compact convex feasible set with Euclidean projection. Two shapes are
// supported: centered balls and axis-aligned boxes. Every domain must
// contain the origin, which is where all learners start.
class FeasibleDomain {
 public:
  enum class Kind { Ball, Box };

  static FeasibleDomain ball(Vector center, double radius) {
    if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
    if (center.size() <= 0) throw ConfigError("ball center must be non-empty");
    if (center.norm() > radius)
      throw ConfigError("domain must contain the origin: ||center|| > radius");
    FeasibleDomain d;
    d.kind_ = Kind::Ball;
    d.center_ = std::move(center);
    d.radius_ = radius;
    return d;
  }

  static FeasibleDomain ball(int dim, double radius) {
    return ball(Vector::Zero(dim), radius);
  }

  static FeasibleDomain box(Vector lower, Vector upper) {
    if (lower.size() != upper.size() || lower.size() <= 0)
      throw ConfigError("box bounds must be non-empty and of equal dimension");
    for (int i = 0; i < lower.size(); ++i) {
      if (!(lower[i] < upper[i]))
        throw ConfigError("box bounds require lower < upper in every coordinate");
      if (lower[i] > 0.0 || upper[i] < 0.0)
        throw ConfigError("domain must contain the origin: 0 outside box bounds");
    }
    FeasibleDomain d;
    d.kind_ = Kind::Box;
    d.lower_ = std::move(lower);
    d.upper_ = std::move(upper);
    return d;
  }

  // Symmetric box [-h, h]^dim.
  static FeasibleDomain box(int dim, double half_width) {
    return box(Vector::Constant(dim, -half_width), Vector::Constant(dim, half_width));
  }

  Kind kind() const { return kind_; }
  int dim() const { return kind_ == Kind::Ball ? static_cast<int>(center_.size())
                                               : static_cast<int>(lower_.size()); }

  double diameter() const {
    return kind_ == Kind::Ball ? 2.0 * radius_ : (upper_ - lower_).norm();
  }

  // Largest Euclidean norm over the set; used for crude value bounds.
  double max_norm() const {
    if (kind_ == Kind::Ball) return center_.norm() + radius_;
    double s = 0.0;
    for (int i = 0; i < lower_.size(); ++i) {
      double m = std::max(std::abs(lower_[i]), std::abs(upper_[i]));
      s += m * m;
    }
    return std::sqrt(s);
  }

  Vector project(const Vector& y) const {
    check_dim(y);
    if (kind_ == Kind::Ball) {
      Vector diff = y - center_;
      double n = diff.norm();
      if (n <= radius_) return y;
      return center_ + (radius_ / n) * diff;
    }
    return y.cwiseMax(lower_).cwiseMin(upper_);
  }

  bool contains(const Vector& x, double tol = 1e-12) const {
    check_dim(x);
    if (kind_ == Kind::Ball) return (x - center_).norm() <= radius_ + tol;
    for (int i = 0; i < lower_.size(); ++i)
      if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
    return true;
  }

  // Deterministic quasi-random interior point (Halton sequence mapped into
  // the set); index k always yields the same point.
  Vector grid_point(std::uint64_t index) const {
    Vector u = rng::halton_point(index, dim());
    if (kind_ == Kind::Box)
      return lower_ + (upper_ - lower_).cwiseProduct(u);
    // Ball: polar-ish map, radial coordinate from the last Halton base.
    Vector dir(dim());
    for (int i = 0; i < dim(); ++i) {
      // inverse-normal-free direction: map uniforms through erf-inverse proxy
      double t = 2.0 * u[i] - 1.0;
      dir[i] = t;
    }
    double n = dir.norm();
    if (n < 1e-12) return center_;
    double r = radius_ * std::pow(rng::radical_inverse(index + 1, 31),
                                  1.0 / static_cast<double>(dim()));
    return center_ + (r / n) * dir;
  }

  const Vector& center() const { require(Kind::Ball); return center_; }
  double radius() const { require(Kind::Ball); return radius_; }
  const Vector& lower() const { require(Kind::Box); return lower_; }
  const Vector& upper() const { require(Kind::Box); return upper_; }

 private:
  FeasibleDomain() = default;

  void check_dim(const Vector& x) const {
    if (x.size() != dim()) {
      std::ostringstream msg;
      msg << "dimension mismatch: expected " << dim() << ", got " << x.size();
      throw ConfigError(msg.str());
    }
  }

  void require(Kind k) const {
    if (kind_ != k) throw ConfigError("accessor does not match domain kind");
  }

  Kind kind_ = Kind::Ball;
  Vector center_, lower_, upper_;
  double radius_ = 0.0;
};

}  // namespace gvoco
