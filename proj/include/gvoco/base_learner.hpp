#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gvoco/errors.hpp"
#include "gvoco/functions.hpp"
#include "gvoco/geometry.hpp"

namespace gvoco {

// Anything a learner needs from one round's loss: a gradient oracle, the
// curvature link, and whether it is the designated zero round.
template <class F>
concept LossOracle = requires(const F f, const Vector& x, double u) {
  { f.gradient(x) } -> std::convertible_to<Vector>;
  { f.link(u) } -> std::convertible_to<double>;
  { f.is_zero() } -> std::convertible_to<bool>;
};

enum class LearnerMode { Convex, StronglyConvex, ConvexClipped };

struct LearnerOptions {
  LearnerMode mode = LearnerMode::Convex;
  double lambda = 0.0;       // strong-convexity modulus (StronglyConvex only)
  double clip_scale = 1.0;   // initial deviation scale B_0 (ConvexClipped only)
  bool check_invariants = true;
  bool keep_history = false;  // retain per-round vectors for offline audits
};

struct LearnerRound {
  int t = 0;
  double eta = 0.0;
  double lhat_prev = 0.0;            // link estimate used this round
  double optimism_norm = 0.0;        // ||grad f_{t-1}(xhat_t)||
  double grad_norm = 0.0;            // ||grad f_t(x_t)||
  double variation_increment = 0.0;  // ||grad f_t(x_t) - grad f_{t-1}(x_t)||^2
  double clip_scale = 0.0;           // B_t after the update (clipped mode)
};

struct LearnerHistoryRow {
  Vector x, xhat, xhat_next, optimism, update_grad;
  double eta = 0.0;
};

// Local curvature estimate: the link evaluated at twice the gradient norm
// at the anchor point. The zero round carries no curvature information and
// reports 0, which callers treat as "no step-size cap".
template <LossOracle F>
double local_smoothness_estimate(const F& f, const Vector& xhat) {
  if (f.is_zero()) return 0.0;
  return f.link(2.0 * f.gradient(xhat).norm());
}

// Optimistic online mirror descent over a compact domain, with the gradient
// at the previous loss as the optimism hint. Three step-size policies:
//
//   Convex:         eta_t = min( D / sqrt(1 + S_{t-1}), min_s 1/(4 Lhat_{s-1}) )
//                   with S the running sum of squared gradient differences
//                   measured at the played points.
//   StronglyConvex: eta_t = 2 / (lambda t + 16 max_s Lhat_{s-1}).
//   ConvexClipped:  like Convex but the update direction is clipped toward
//                   the hint whenever the observed deviation exceeds the
//                   running scale B, and S sums the clipped deviations with
//                   B_{t-1}^2 replacing the additive 1.
//
// Every round must follow predict(f_prev) -> update(f_t); the learner plays
// the point returned by predict.
template <LossOracle F = OnlineFunction>
class OmdLearner {
 public:
  OmdLearner(const FeasibleDomain& domain, LearnerOptions opt)
      : domain_(&domain), opt_(opt) {
    if (opt.mode == LearnerMode::StronglyConvex && !(opt.lambda > 0.0))
      throw ConfigError("strongly convex mode requires positive lambda");
    if (opt.mode == LearnerMode::ConvexClipped && !(opt.clip_scale > 0.0))
      throw ConfigError("clipped mode requires positive initial scale");
    xhat_ = domain.project(Vector::Zero(domain.dim()));
    x_ = xhat_;
    clip_b_ = opt.clip_scale;
  }

  const Vector& predict(const F& f_prev) {
    if (awaiting_update_)
      throw std::logic_error("predict called twice without update");
    const int t = rounds_ + 1;
    const double D = domain_->diameter();

    optimism_ = f_prev.gradient(xhat_);
    const double m_norm = optimism_.norm();
    const double lhat = f_prev.is_zero() ? 0.0 : f_prev.link(2.0 * m_norm);
    if (lhat > 0.0) {
      cap_ = std::min(cap_, 1.0 / (4.0 * lhat));
      lhat_max_ = std::max(lhat_max_, lhat);
    }
    ghat_max_ = std::max(ghat_max_, m_norm);

    double eta = 0.0;
    switch (opt_.mode) {
      case LearnerMode::Convex:
        eta = std::min(std::sqrt(D * D / (1.0 + var_sum_)), cap_);
        break;
      case LearnerMode::ConvexClipped:
        eta = std::min(std::sqrt(D * D / (clip_b_ * clip_b_ + clip_sum_)), cap_);
        break;
      case LearnerMode::StronglyConvex:
        eta = 2.0 / (opt_.lambda * t + 16.0 * lhat_max_);
        break;
    }

    x_ = domain_->project(xhat_ - eta * optimism_);

    if (opt_.check_invariants) {
      if (!domain_->contains(x_, 1e-12))
        throw InvariantError("decision containment", t, 0.0, 0.0);
      const double move = (x_ - xhat_).norm();
      const double stab = eta * m_norm;
      if (move > stab + 1e-10 * std::max(1.0, stab))
        throw InvariantError("optimistic step stability", t, move, stab);
      if (opt_.mode != LearnerMode::StronglyConvex && lhat > 0.0) {
        const double radius = m_norm / (4.0 * lhat);
        if (move > radius + 1e-10 * std::max(1.0, radius))
          throw InvariantError("local smoothness step criterion", t, move, radius);
      }
      if (rounds_ > 0 && opt_.mode != LearnerMode::StronglyConvex &&
          eta > last_.eta * (1.0 + 1e-12))
        throw InvariantError("step size monotonicity", t, eta, last_.eta);
    }

    pending_.t = t;
    pending_.eta = eta;
    pending_.lhat_prev = lhat;
    pending_.optimism_norm = m_norm;
    f_prev_ = f_prev;
    awaiting_update_ = true;
    return x_;
  }

  void update(const F& f_t) {
    if (!awaiting_update_)
      throw std::logic_error("update called before predict");
    Vector g = f_t.gradient(x_);
    const double g_norm = g.norm();
    ghat_max_ = std::max(ghat_max_, g_norm);

    // Variation measured at the played point; also drives the Convex step.
    Vector g_prev_here = f_prev_->gradient(x_);
    const double var_inc = (g - g_prev_here).squaredNorm();
    var_sum_ += var_inc;

    Vector used = g;
    if (opt_.mode == LearnerMode::ConvexClipped) {
      Vector dev = g - optimism_;
      const double dev_norm = dev.norm();
      const double b_prev = clip_b_;
      clip_b_ = std::max(clip_b_, dev_norm);
      used = optimism_ + (b_prev / clip_b_) * dev;
      clip_sum_ += (used - optimism_).squaredNorm();
    }

    Vector xhat_next = domain_->project(xhat_ - pending_.eta * used);

    if (opt_.keep_history) {
      LearnerHistoryRow row;
      row.x = x_;
      row.xhat = xhat_;
      row.xhat_next = xhat_next;
      row.optimism = optimism_;
      row.update_grad = used;
      row.eta = pending_.eta;
      history_.push_back(std::move(row));
    }

    xhat_ = std::move(xhat_next);
    pending_.grad_norm = g_norm;
    pending_.variation_increment = var_inc;
    pending_.clip_scale = opt_.mode == LearnerMode::ConvexClipped ? clip_b_ : 0.0;
    last_ = pending_;
    ++rounds_;
    awaiting_update_ = false;
    f_prev_.reset();
  }

  const FeasibleDomain& domain() const { return *domain_; }
  LearnerMode mode() const { return opt_.mode; }
  const LearnerOptions& options() const { return opt_; }
  int rounds() const { return rounds_; }
  const Vector& x() const { return x_; }
  const Vector& xhat() const { return xhat_; }
  double eta() const { return awaiting_update_ ? pending_.eta : last_.eta; }
  double lhat_max() const { return lhat_max_; }
  double ghat_max() const { return ghat_max_; }
  double variation_sum() const { return var_sum_; }
  double clip_variation_sum() const { return clip_sum_; }
  double clip_scale() const { return clip_b_; }
  const LearnerRound& last() const { return last_; }
  const std::vector<LearnerHistoryRow>& history() const { return history_; }

 private:
  const FeasibleDomain* domain_;
  LearnerOptions opt_;
  Vector xhat_, x_, optimism_;
  std::optional<F> f_prev_;
  double cap_ = std::numeric_limits<double>::infinity();
  double lhat_max_ = 0.0;
  double ghat_max_ = 0.0;
  double var_sum_ = 0.0;   // sum of ||grad f_t(x_t) - grad f_{t-1}(x_t)||^2
  double clip_sum_ = 0.0;  // sum of ||clipped grad - optimism||^2
  double clip_b_ = 1.0;
  int rounds_ = 0;
  bool awaiting_update_ = false;
  LearnerRound pending_, last_;
  std::vector<LearnerHistoryRow> history_;
};

}  // namespace gvoco
